//! Cylindrical and spherical Bessel functions of integer order and their zeros.
//!
//! Radial factors are handled in the scaled form `G_m(z) = Z_m(z) / z^m`, which is
//! entire and satisfies `G_m'(z) = -z G_{m+1}(z)` for both families.

use crate::numeric::bracketed_newton;

/// Crossover between the ascending series and backward recurrence.
const SERIES_LIMIT: f64 = 12.0;

/// Which Bessel family a radial factor uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Family {
    /// `J_m`, for the disk.
    Cylindrical,
    /// `j_l`, for the ball.
    Spherical,
}

/// `J_m(z) / z^m` by its ascending series.
fn g_cyl_series(m: usize, z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    for k in 1..=m {
        term /= 2.0 * k as f64;
    }
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `j_l(z) / z^l` by its ascending series.
fn g_sph_series(l: usize, z: f64) -> f64 {
    let q = -0.5 * z * z;
    let mut term = 1.0;
    for k in 0..=l {
        term /= (2 * k + 1) as f64;
    }
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (2 * l + 2 * k + 1) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_0..=J_mmax` at `z > 0` by backward recurrence normalised with `J_0 + 2 sum J_2k = 1`.
fn j_cyl_miller(mmax: usize, z: f64) -> Vec<f64> {
    let start = mmax.max(z as usize) + 40 + (z.sqrt() * 6.0) as usize;
    let mut out = vec![0.0; mmax + 1];
    let (mut jp, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let jm = 2.0 * k as f64 / z * j - jp;
        jp = j;
        j = jm;
        let idx = k - 1;
        if idx <= mmax {
            out[idx] = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += j;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `j_0..=j_lmax` at `z > 0` by backward recurrence normalised against `j_0` or `j_1`.
fn j_sph_miller(lmax: usize, z: f64) -> Vec<f64> {
    let start = lmax.max(z as usize) + 40 + (z.sqrt() * 6.0) as usize;
    let mut out = vec![0.0; lmax.max(1) + 1];
    let (mut jp, mut j) = (0.0f64, 1e-300f64);
    for k in (1..=start).rev() {
        let jm = (2 * k + 1) as f64 / z * j - jp;
        jp = j;
        j = jm;
        let idx = k - 1;
        if idx < out.len() {
            out[idx] = j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let j0 = z.sin() / z;
    let j1 = z.sin() / (z * z) - z.cos() / z;
    let scale = if j0.abs() >= j1.abs() { j0 / out[0] } else { j1 / out[1] };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out.truncate(lmax + 1);
    out
}

/// Scaled radial factors `G_m, G_{m+1}, G_{m+2}` at `z >= 0`.
pub fn g_triple(family: Family, m: usize, z: f64) -> [f64; 3] {
    let z = z.abs();
    if z <= SERIES_LIMIT {
        let f = match family {
            Family::Cylindrical => g_cyl_series,
            Family::Spherical => g_sph_series,
        };
        [f(m, z), f(m + 1, z), f(m + 2, z)]
    } else {
        let v = match family {
            Family::Cylindrical => j_cyl_miller(m + 2, z),
            Family::Spherical => j_sph_miller(m + 2, z),
        };
        let zm = z.powi(m as i32);
        [v[m] / zm, v[m + 1] / (zm * z), v[m + 2] / (zm * z * z)]
    }
}

/// Scaled radial factor `G_m(z)`.
pub fn g_scaled(family: Family, m: usize, z: f64) -> f64 {
    g_triple(family, m, z)[0]
}

/// Unscaled `J_m(z)` or `j_m(z)`.
pub fn bessel(family: Family, m: usize, z: f64) -> f64 {
    let sign = if z < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
    let z = z.abs();
    sign * g_scaled(family, m, z) * z.powi(m as i32)
}

/// Cylindrical Bessel function `J_m(z)`.
pub fn bessel_j(m: usize, z: f64) -> f64 {
    bessel(Family::Cylindrical, m, z)
}

/// Spherical Bessel function `j_l(z)`.
pub fn spherical_j(l: usize, z: f64) -> f64 {
    bessel(Family::Spherical, l, z)
}

/// Function whose positive zeros are the Dirichlet (`derivative = false`) or Neumann radial roots.
///
/// Returns the value and its derivative; the Neumann form is `m G_m − z² G_{m+1}`,
/// which has the zeros of `Z_m'` away from the origin.
fn root_function(family: Family, m: usize, derivative: bool, z: f64) -> (f64, f64) {
    let g = g_triple(family, m, z);
    if derivative {
        let mf = m as f64;
        let v = mf * g[0] - z * z * g[1];
        let d = -(mf + 2.0) * z * g[1] + z * z * z * g[2];
        (v, d)
    } else {
        (g[0], -z * g[1])
    }
}

/// The first positive zeros below `zmax`, ascending.
///
/// A fixed-step sign scan brackets each root and a safeguarded Newton iteration refines it.
pub fn radial_roots(family: Family, m: usize, derivative: bool, zmax: f64) -> Vec<f64> {
    let step = 0.05;
    let mut roots = Vec::new();
    let mut a = 1e-3;
    let mut fa = root_function(family, m, derivative, a).0;
    while a < zmax {
        let b = a + step;
        let fb = root_function(family, m, derivative, b).0;
        if fa == 0.0 {
            roots.push(a);
        } else if (fa < 0.0) != (fb < 0.0) {
            let r = bracketed_newton(
                |z| root_function(family, m, derivative, z).0,
                |z| root_function(family, m, derivative, z).1,
                a,
                b,
                1e-15,
            );
            if r < zmax {
                roots.push(r);
            }
        }
        a = b;
        fa = fb;
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_and_recurrence_agree_near_the_switch() {
        for m in [0usize, 1, 3, 7] {
            for z in [10.0, 11.5, 12.0] {
                let s = g_cyl_series(m, z) * z.powi(m as i32);
                let r = j_cyl_miller(m, z)[m];
                assert!((s - r).abs() < 1e-12, "m={m} z={z} {s} {r}");
                let s = g_sph_series(m, z) * z.powi(m as i32);
                let r = j_sph_miller(m, z)[m];
                assert!((s - r).abs() < 1e-12, "m={m} z={z} {s} {r}");
            }
        }
    }

    #[test]
    fn first_zero_of_j0() {
        let r = radial_roots(Family::Cylindrical, 0, false, 3.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 2.404_825_557_695_773).abs() < 1e-13);
    }

    #[test]
    fn spherical_closed_forms() {
        let z = 17.3f64;
        assert!((spherical_j(0, z) - z.sin() / z).abs() < 1e-15);
        let j1 = z.sin() / (z * z) - z.cos() / z;
        assert!((spherical_j(1, z) - j1).abs() < 1e-14);
    }
}
