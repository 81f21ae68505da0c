//! Polynomials in at most four variables, used for harmonic angular factors.

use std::collections::BTreeMap;

use crate::geometry::{Mat4, Vec4};

/// Sparse polynomial; exponents are per variable.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Poly {
    terms: Vec<(f64, [u8; 4])>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Poly { terms: vec![(c, [0; 4])] }.cleaned()
    }

    /// The coordinate `x_i`.
    pub fn var(i: usize) -> Self {
        let mut e = [0u8; 4];
        e[i] = 1;
        Poly { terms: vec![(1.0, e)] }
    }

    /// `|x|^2` in `d` variables.
    pub fn r2(d: usize) -> Self {
        let mut p = Poly::zero();
        for i in 0..d {
            let mut e = [0u8; 4];
            e[i] = 2;
            p.terms.push((1.0, e));
        }
        p
    }

    fn cleaned(self) -> Self {
        let mut map: BTreeMap<[u8; 4], f64> = BTreeMap::new();
        for (c, e) in self.terms {
            *map.entry(e).or_insert(0.0) += c;
        }
        Poly { terms: map.into_iter().filter(|(_, c)| *c != 0.0).map(|(e, c)| (c, e)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(f64, [u8; 4])] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, e)| e.iter().map(|&v| v as usize).sum()).max().unwrap_or(0)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut t = self.terms.clone();
        t.extend_from_slice(&o.terms);
        Poly { terms: t }.cleaned()
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly { terms: self.terms.iter().map(|(v, e)| (v * c, *e)).collect() }.cleaned()
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut t = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (a, ea) in &self.terms {
            for (b, eb) in &o.terms {
                let mut e = [0u8; 4];
                for i in 0..4 {
                    e[i] = ea[i] + eb[i];
                }
                t.push((a * b, e));
            }
        }
        Poly { terms: t }.cleaned()
    }

    pub fn pow(&self, k: usize) -> Poly {
        let mut p = Poly::constant(1.0);
        for _ in 0..k {
            p = p.mul(self);
        }
        p
    }

    /// Partial derivative in variable `i`.
    pub fn deriv(&self, i: usize) -> Poly {
        let mut t = Vec::new();
        for (c, e) in &self.terms {
            if e[i] > 0 {
                let mut f = *e;
                f[i] -= 1;
                t.push((c * e[i] as f64, f));
            }
        }
        Poly { terms: t }.cleaned()
    }

    /// Laplacian in the first `d` variables.
    pub fn laplacian(&self, d: usize) -> Poly {
        let mut p = Poly::zero();
        for i in 0..d {
            p = p.add(&self.deriv(i).deriv(i));
        }
        p
    }

    /// Value, gradient and Hessian at `x`.
    pub fn eval_all(&self, x: &Vec4) -> (f64, Vec4, Mat4) {
        let deg = self.degree();
        let mut pw = vec![[1.0f64; 4]; deg + 1];
        for k in 1..=deg {
            for i in 0..4 {
                pw[k][i] = pw[k - 1][i] * x[i];
            }
        }
        let p = |i: usize, k: u8| -> f64 { pw[k as usize][i] };
        let mut v = 0.0;
        let mut g = Vec4::zeros();
        let mut h = Mat4::zeros();
        for (c, e) in &self.terms {
            let base = [p(0, e[0]), p(1, e[1]), p(2, e[2]), p(3, e[3])];
            v += c * base[0] * base[1] * base[2] * base[3];
            for i in 0..4 {
                if e[i] == 0 {
                    continue;
                }
                let mut prod = c * e[i] as f64 * p(i, e[i] - 1);
                for j in 0..4 {
                    if j != i {
                        prod *= base[j];
                    }
                }
                g[i] += prod;
                for j in 0..4 {
                    let hij = if j == i {
                        if e[i] < 2 {
                            continue;
                        }
                        let mut q = c * (e[i] as f64) * (e[i] as f64 - 1.0) * p(i, e[i] - 2);
                        for k in 0..4 {
                            if k != i {
                                q *= base[k];
                            }
                        }
                        q
                    } else {
                        if e[j] == 0 || j < i {
                            continue;
                        }
                        let mut q = c * e[i] as f64 * e[j] as f64 * p(i, e[i] - 1) * p(j, e[j] - 1);
                        for k in 0..4 {
                            if k != i && k != j {
                                q *= base[k];
                            }
                        }
                        q
                    };
                    h[(i, j)] += hij;
                    if j != i {
                        h[(j, i)] += hij;
                    }
                }
            }
        }
        (v, g, h)
    }

    pub fn eval(&self, x: &Vec4) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * (0..4).map(|i| x[i].powi(e[i] as i32)).product::<f64>())
            .sum()
    }

    /// Projection of a homogeneous polynomial of degree `l` in `d` variables onto harmonics.
    pub fn harmonic_projection(&self, l: usize, d: usize) -> Poly {
        let r2 = Poly::r2(d);
        let mut out = self.clone();
        let mut a = 1.0;
        let mut lap = self.clone();
        let mut rpow = Poly::constant(1.0);
        let mut j = 0usize;
        loop {
            let den = 2.0 * (j + 1) as f64 * (2.0 * l as f64 - 2.0 * j as f64 + d as f64 - 4.0);
            lap = lap.laplacian(d);
            if lap.is_zero() || den == 0.0 {
                break;
            }
            a = -a / den;
            rpow = rpow.mul(&r2);
            out = out.add(&rpow.mul(&lap).scale(a));
            j += 1;
        }
        out
    }

    /// Integral of the polynomial over the unit sphere in `R^d`.
    pub fn sphere_integral(&self, d: usize) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * monomial_sphere_integral(&e[..d]))
            .sum()
    }
}

/// `Γ(k/2)` for a positive integer `k`.
fn gamma_half(k: u32) -> f64 {
    let mut g = if k % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut m = 2 - (k % 2);
    while m < k {
        g *= m as f64 / 2.0;
        m += 2;
    }
    g
}

/// `∫_{S^{d-1}} x^e = 2 Π Γ((e_i+1)/2) / Γ((|e|+d)/2)`, zero if any exponent is odd.
pub fn monomial_sphere_integral(e: &[u8]) -> f64 {
    if e.iter().any(|&v| v % 2 == 1) {
        return 0.0;
    }
    let num: f64 = e.iter().map(|&v| gamma_half(v as u32 + 1)).product();
    let tot: u32 = e.iter().map(|&v| v as u32).sum::<u32>() + e.len() as u32;
    2.0 * num / gamma_half(tot)
}

/// Real and imaginary parts of `(x_0 + i x_1)^m`.
pub fn complex_power(m: usize) -> (Poly, Poly) {
    let mut re = Poly::constant(1.0);
    let mut im = Poly::zero();
    let (x, y) = (Poly::var(0), Poly::var(1));
    for _ in 0..m {
        let nre = re.mul(&x).add(&im.mul(&y).scale(-1.0));
        let nim = re.mul(&y).add(&im.mul(&x));
        re = nre;
        im = nim;
    }
    (re, im)
}

/// Harmonic polynomial of degree `l` in three variables with azimuthal order `m`.
///
/// `sine` selects the imaginary part; `m = 0` always uses the real part.
pub fn harmonic3(l: usize, m: usize, sine: bool) -> Poly {
    let (re, im) = complex_power(m);
    let base = if sine && m > 0 { im } else { re };
    Poly::var(2).pow(l - m).mul(&base).harmonic_projection(l, 3)
}

/// Harmonic polynomial of degree `l` in four variables built from a degree-`j` three-variable harmonic.
pub fn harmonic4(l: usize, j: usize, m: usize, sine: bool) -> Poly {
    Poly::var(3).pow(l - j).mul(&harmonic3(j, m, sine)).harmonic_projection(l, 4)
}
