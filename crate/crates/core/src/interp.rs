//! Natural cubic spline on a strictly increasing grid.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots (natural boundary: zero at the ends).
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::invalid(
                "spline needs at least 2 knots and equal-length arrays",
            ));
        }
        for w in xs.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid("spline knots must be strictly increasing"));
            }
        }
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas solve of the tridiagonal natural-spline system.
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let h0 = xs[i + 1] - xs[i];
                let h1 = xs[i + 2] - xs[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0);
            }
            for i in 1..m {
                let lower = xs[i + 1] - xs[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
            }
        }
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            second,
        })
    }

    /// Evaluate at `x`, which must lie within the knot span (up to a tiny
    /// roundoff slack at the ends).
    pub fn eval(&self, x: f64) -> Result<f64> {
        let n = self.xs.len();
        let span = self.xs[n - 1] - self.xs[0];
        let slack = 1e-12 * span;
        if x < self.xs[0] - slack || x > self.xs[n - 1] + slack {
            return Err(Error::invalid(format!(
                "spline evaluation at {x} outside knot span [{}, {}]",
                self.xs[0],
                self.xs[n - 1]
            )));
        }
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let j = self.xs.partition_point(|&k| k <= x).clamp(1, n - 1) - 1;
        let h = self.xs[j + 1] - self.xs[j];
        let t = x - self.xs[j];
        let (m0, m1) = (self.second[j], self.second[j + 1]);
        let slope = (self.ys[j + 1] - self.ys[j]) / h - h * (2.0 * m0 + m1) / 6.0;
        Ok(self.ys[j] + t * (slope + t * (m0 / 2.0 + t * (m1 - m0) / (6.0 * h))))
    }
}
