//! Independent reference routines shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `J_n(z)` from Bessel's integral, trapezoid rule on the periodic integrand.
pub fn bessel_j_integral(n: usize, z: f64) -> f64 {
    let k = 4000;
    let h = PI / k as f64;
    let mut s = 0.0;
    for i in 0..=k {
        let t = i as f64 * h;
        let w = if i == 0 || i == k { 0.5 } else { 1.0 };
        s += w * (n as f64 * t - z * t.sin()).cos();
    }
    s * h / PI
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w));
    }
    out
}

/// Bisection root of a continuous function with a sign change on `[a, b]`.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) < 0.0) == (fa < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
