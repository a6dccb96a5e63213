//! Gauss-Hermite and Gauss-Legendre nodes by Newton iteration on the
//! recurrence relations. Orders used here are small (tens), where this
//! converges in a handful of iterations per root.

use std::f64::consts::PI;

const EPS: f64 = 3e-15;
const MAX_NEWTON: usize = 60;

/// Nodes and weights for integrals of the form `int exp(-t^2) f(t) dt`.
///
/// Roots are returned in ascending order; weights sum to sqrt(pi).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be >= 1");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        // Initial guesses for successive roots, largest first.
        z = match i {
            0 => {
                let c = (2.0 * n as f64 + 1.0).sqrt();
                c - 1.85575 * c.powf(-1.0 / 3.0)
            }
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[n - 1],
            3 => 1.91 * z - 0.91 * x[n - 2],
            _ => 2.0 * z - x[n - i + 1],
        };
        let mut pp = 0.0;
        for _ in 0..MAX_NEWTON {
            // Orthonormal Hermite-function recurrence.
            let mut p1 = PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j as f64 - 1.0) / j as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS {
                break;
            }
        }
        // The i-th computed root is the i-th largest; store ascending.
        let hi = n - 1 - i;
        let lo = i;
        // For odd n the central root is exactly zero.
        let root = if lo == hi { 0.0 } else { z };
        x[hi] = root;
        x[lo] = -root;
        w[hi] = 2.0 / (pp * pp);
        w[lo] = w[hi];
    }
    (x, w)
}

/// Nodes and weights for `int_{-1}^{1} f(t) dt`, ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be >= 1");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..MAX_NEWTON {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS {
                break;
            }
        }
        let root = if i == m - 1 && n % 2 == 1 { 0.0 } else { z };
        x[i] = -root;
        x[n - 1 - i] = root;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
