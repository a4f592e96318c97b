//! Monotone piecewise cubic Hermite interpolation (Fritsch–Carlson slopes)
//! with exact integration of the piecewise cubic.

use super::RdError;

#[derive(Clone, Debug, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

fn same_sign(a: f64, b: f64) -> bool {
    (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0)
}

/// One-sided three-point slope at an end knot, limited so the end segment
/// keeps the sign of its secant and does not overshoot.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if !same_sign(d, d0) {
        0.0
    } else if !same_sign(d0, d1) && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self, RdError> {
        let n = x.len();
        if n != y.len() {
            return Err(RdError::Interpolation(format!(
                "{} abscissae but {} ordinates",
                n,
                y.len()
            )));
        }
        if n < 2 {
            return Err(RdError::Interpolation("need at least two knots".into()));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(RdError::Interpolation("knots must be finite".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        if h.iter().any(|&d| d <= 0.0) {
            return Err(RdError::Interpolation(
                "abscissae must be strictly increasing".into(),
            ));
        }
        let secant: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();

        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = secant[0];
            slopes[1] = secant[0];
        } else {
            for k in 1..n - 1 {
                let (a, b) = (secant[k - 1], secant[k]);
                if same_sign(a, b) {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / a + w2 / b);
                }
            }
            slopes[0] = end_slope(h[0], h[1], secant[0], secant[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], secant[n - 2], secant[n - 3]);
        }
        Ok(Pchip {
            x: x.to_vec(),
            y: y.to_vec(),
            slopes,
        })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, xq: f64) -> usize {
        let last = self.x.len() - 2;
        match self.x.partition_point(|&v| v <= xq) {
            0 => 0,
            i => (i - 1).min(last),
        }
    }

    /// Power-basis coefficients of segment `k` in `s = x - x_k`.
    fn coefficients(&self, k: usize) -> [f64; 4] {
        let h = self.x[k + 1] - self.x[k];
        let delta = (self.y[k + 1] - self.y[k]) / h;
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        [
            self.y[k],
            d0,
            (3.0 * delta - 2.0 * d0 - d1) / h,
            (d0 + d1 - 2.0 * delta) / (h * h),
        ]
    }

    /// Value at `xq`. Outside the knot range the end cubic is extended.
    pub fn eval(&self, xq: f64) -> f64 {
        let k = self.segment(xq);
        if xq == self.x[k] {
            return self.y[k];
        }
        if xq == self.x[k + 1] {
            return self.y[k + 1];
        }
        let [c0, c1, c2, c3] = self.coefficients(k);
        let s = xq - self.x[k];
        c0 + s * (c1 + s * (c2 + s * c3))
    }

    fn antiderivative(c: [f64; 4], s: f64) -> f64 {
        s * (c[0] + s * (c[1] / 2.0 + s * (c[2] / 3.0 + s * c[3] / 4.0)))
    }

    /// Exact integral over `[a, b]`, which must lie inside the knot range.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64, RdError> {
        let (lo, hi) = self.domain();
        if !(a >= lo && b <= hi && a <= b) {
            return Err(RdError::Interpolation(format!(
                "integration bounds [{a}, {b}] outside [{lo}, {hi}]"
            )));
        }
        let mut total = 0.0;
        for k in 0..self.x.len() - 1 {
            let (x0, x1) = (self.x[k], self.x[k + 1]);
            let from = a.max(x0);
            let to = b.min(x1);
            if to <= from {
                continue;
            }
            let c = self.coefficients(k);
            total += Self::antiderivative(c, to - x0) - Self::antiderivative(c, from - x0);
        }
        Ok(total)
    }
}
