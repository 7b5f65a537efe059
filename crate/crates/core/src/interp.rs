//! Monotone cubic (Fritsch-Carlson) interpolation.

use crate::{Error, Result};

fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Fritsch-Carlson slopes of the monotone cubic interpolant.
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        return vec![del[0], del[0]];
    }
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    d[0] = pchip_end(h[0], h[1], del[0], del[1]);
    d[n - 1] = pchip_end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

pub fn hermite(x: &[f64], y: &[f64], d: &[f64], t: f64) -> f64 {
    let k = x.partition_point(|&v| v <= t).clamp(1, x.len() - 1) - 1;
    let h = x[k + 1] - x[k];
    let s = (t - x[k]) / h;
    let (s2, s3) = (s * s, s * s * s);
    y[k] * (2.0 * s3 - 3.0 * s2 + 1.0)
        + h * d[k] * (s3 - 2.0 * s2 + s)
        + y[k + 1] * (-2.0 * s3 + 3.0 * s2)
        + h * d[k + 1] * (s3 - s2)
}

/// Monotone cubic interpolant through strictly increasing abscissas.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() || x.len() < 4 {
            return Err(Error::domain(format!(
                "interpolation needs at least 4 points and equal lengths (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::domain("interpolation abscissas must be finite and strictly increasing"));
        }
        Ok(Pchip {
            d: pchip_slopes(x, y),
            x: x.to_vec(),
            y: y.to_vec(),
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    pub fn abscissas(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Value at `t`; outside the range the end cubics are extended.
    pub fn eval(&self, t: f64) -> f64 {
        hermite(&self.x, &self.y, &self.d, t)
    }
}
