use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// Least-squares line through (xs, ys) with equal weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

impl FitReport {
    pub fn fit(xs: Vec<f64>, ys: Vec<f64>) -> Result<FitReport> {
        if xs.len() != ys.len() {
            return input(format!("fit needs paired data, got {} xs and {} ys", xs.len(), ys.len()));
        }
        if xs.len() < 3 {
            return input(format!("fit needs at least 3 points, got {}", xs.len()));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return input("fit data must be finite");
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
        if sxx <= 0.0 {
            return input("fit abscissae are all equal");
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let max_residual = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - (slope * x + intercept)).abs())
            .fold(0.0, f64::max);
        Ok(FitReport { xs, ys, slope, intercept, max_residual })
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Geometric sequence from `start` towards `stop` (inclusive up to rounding) with the given ratio.
pub fn geometric_range(start: f64, stop: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > 0.0) {
        return input("geometric range endpoints must be positive");
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return input(format!("geometric ratio must lie in (0,1), got {ratio}"));
    }
    if stop > start {
        return input("geometric range must be decreasing (start > stop)");
    }
    let steps = ((stop / start).ln() / ratio.ln() + 1e-9).floor() as usize;
    Ok((0..=steps).map(|k| start * ratio.powi(k as i32)).collect())
}

/// Checks that `values` form a strictly monotone geometric progression.
pub fn is_geometric(values: &[f64]) -> bool {
    if values.len() < 2 || values.iter().any(|v| !(*v > 0.0)) {
        return false;
    }
    let r0 = values[1] / values[0];
    if (r0 - 1.0).abs() < 1e-12 {
        return false;
    }
    values.windows(2).all(|w| ((w[1] / w[0]) / r0 - 1.0).abs() < 1e-6)
}
