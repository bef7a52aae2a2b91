//! Least-squares regression of latency against ruleset size.
//!
//! R² is computed in original y-space for the linear and quadratic models
//! and in log space for the exponential and power models, since those are
//! fitted as straight lines there.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FitError {
    #[error("need at least 3 distinct x values, got {distinct}")]
    TooFewPoints { distinct: usize },
    #[error("{model} fit needs strictly positive values")]
    NonpositiveValues { model: FitModel },
    #[error("{model} fit is singular")]
    Singular { model: FitModel },
}

impl FitError {
    pub fn code(&self) -> &'static str {
        match self {
            FitError::TooFewPoints { .. } => "TOO_FEW_POINTS",
            FitError::NonpositiveValues { .. } => "NONPOSITIVE_VALUES",
            FitError::Singular { .. } => "SINGULAR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// y = a·x + b
    Linear,
    /// ln y = a·x + b
    Exponential,
    /// ln y = alpha·ln x + b
    LogLog,
    /// y = a·x² + b·x + c
    Quadratic,
}

impl std::fmt::Display for FitModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitModel::Linear => "linear",
            FitModel::Exponential => "exponential",
            FitModel::LogLog => "log-log",
            FitModel::Quadratic => "quadratic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: FitModel,
    pub params: BTreeMap<String, f64>,
    pub r_squared: f64,
    /// Power-law exponent of the log-log model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

impl FitReport {
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn predict(&self, x: f64) -> f64 {
        let p = |n| self.param(n);
        match self.model {
            FitModel::Linear => p("a") * x + p("b"),
            FitModel::Exponential => (p("a") * x + p("b")).exp(),
            FitModel::LogLog => (p("alpha") * x.ln() + p("b")).exp(),
            FitModel::Quadratic => p("a") * x * x + p("b") * x + p("c"),
        }
    }
}

/// Every model that could be fitted, plus why the others could not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSet {
    pub fits: Vec<FitReport>,
    pub failures: Vec<FitError>,
}

impl FitSet {
    pub fn get(&self, model: FitModel) -> Option<&FitReport> {
        self.fits.iter().find(|f| f.model == model)
    }
}

pub fn fit_models(points: &[(f64, f64)]) -> Result<FitSet, FitError> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(FitError::TooFewPoints { distinct: xs.len() });
    }
    let mut set = FitSet {
        fits: Vec::new(),
        failures: Vec::new(),
    };
    for model in [
        FitModel::Linear,
        FitModel::Exponential,
        FitModel::LogLog,
        FitModel::Quadratic,
    ] {
        match fit(model, points) {
            Ok(f) => set.fits.push(f),
            Err(e) => set.failures.push(e),
        }
    }
    Ok(set)
}

pub fn fit(model: FitModel, points: &[(f64, f64)]) -> Result<FitReport, FitError> {
    let positive = |ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(FitError::NonpositiveValues { model })
        }
    };
    let params = |pairs: &[(&str, f64)]| -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    };
    match model {
        FitModel::Linear => {
            let (a, b) = line(points).ok_or(FitError::Singular { model })?;
            let r2 = r_squared(points, |x| a * x + b);
            Ok(FitReport {
                model,
                params: params(&[("a", a), ("b", b)]),
                r_squared: r2,
                exponent: None,
            })
        }
        FitModel::Exponential => {
            positive(points.iter().all(|p| p.1 > 0.0))?;
            let t: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, y.ln())).collect();
            let (a, b) = line(&t).ok_or(FitError::Singular { model })?;
            let r2 = r_squared(&t, |x| a * x + b);
            Ok(FitReport {
                model,
                params: params(&[("a", a), ("b", b)]),
                r_squared: r2,
                exponent: None,
            })
        }
        FitModel::LogLog => {
            positive(points.iter().all(|p| p.0 > 0.0 && p.1 > 0.0))?;
            let t: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
            let (alpha, b) = line(&t).ok_or(FitError::Singular { model })?;
            let r2 = r_squared(&t, |x| alpha * x + b);
            Ok(FitReport {
                model,
                params: params(&[("alpha", alpha), ("b", b)]),
                r_squared: r2,
                exponent: Some(alpha),
            })
        }
        FitModel::Quadratic => {
            let (a, b, c) = parabola(points).ok_or(FitError::Singular { model })?;
            let r2 = r_squared(points, |x| a * x * x + b * x + c);
            Ok(FitReport {
                model,
                params: params(&[("a", a), ("b", b), ("c", c)]),
                r_squared: r2,
                exponent: None,
            })
        }
    }
}

/// 1 - SS_res/SS_tot; 1 for a perfect fit of constant data.
fn r_squared(points: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|&(x, y)| (y - f(x)).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        };
    }
    1.0 - ss_res / ss_tot
}

/// Slope and intercept of the least-squares line.
fn line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let a = sxy / sxx;
    Some((a, my - a * mx))
}

/// Least-squares parabola through the normal equations, with x rescaled to
/// [-1, 1]-ish magnitude for conditioning.
fn parabola(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let scale = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut m = [[0.0f64; 4]; 3];
    for &(x, y) in points {
        let u = x / scale;
        let row = [u * u, u, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            m[i][3] += row[i] * y;
        }
    }
    let [a, b, c] = solve3(m)?;
    Some((a / (scale * scale), b / scale, c))
}

/// Gaussian elimination with partial pivoting on an augmented 3×4 matrix.
fn solve3(mut m: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                let pivot_row = m[col];
                for (v, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                    *v -= f * p;
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|x| (x as f64, 3.0 * x as f64 - 1.0)).collect();
        let f = fit(FitModel::Linear, &pts).unwrap();
        assert!((f.param("a") - 3.0).abs() < 1e-12);
        assert!((f.param("b") + 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_and_nonpositive() {
        assert_eq!(
            fit_models(&[(1.0, 1.0), (1.0, 2.0), (2.0, 2.0)]),
            Err(FitError::TooFewPoints { distinct: 2 })
        );
        let set = fit_models(&[(0.0, 1.0), (1.0, 0.0), (2.0, 3.0)]).unwrap();
        assert_eq!(set.fits.len(), 2);
        assert!(set
            .failures
            .iter()
            .all(|e| e.code() == "NONPOSITIVE_VALUES"));
    }
}
