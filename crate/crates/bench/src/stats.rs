//! Summary statistics over latency samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("cannot summarise an empty sample")]
    Empty,
}

/// Summary of a latency sample, in the sample's unit.
///
/// `skewness` is the moment coefficient E[(x-μ)³]/σ³ with the population σ.
/// `bowley` is (Q₃+Q₁-2Q₂)/(Q₃-Q₁). Either is `None` when undefined: a
/// constant sample for the former, Q₃ = Q₁ for the latter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p99: f64,
    pub std: f64,
    pub skewness: Option<f64>,
    pub bowley: Option<f64>,
}

/// Nearest-rank percentile of an ascending sample: the smallest value with
/// at least `p`% of the sample at or below it.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn compute_stats(samples: &[f64]) -> Result<OverheadStats, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = samples.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let std = m2.sqrt();
    let skewness = (std > 0.0).then(|| m3 / std.powi(3));
    let (q1, q2, q3) = (
        percentile(&sorted, 25.0),
        percentile(&sorted, 50.0),
        percentile(&sorted, 75.0),
    );
    let bowley = (q3 > q1).then(|| (q3 + q1 - 2.0 * q2) / (q3 - q1));
    Ok(OverheadStats {
        count: samples.len(),
        mean,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        p25: q1,
        p50: q2,
        p75: q3,
        p99: percentile(&sorted, 99.0),
        std,
        skewness,
        bowley,
    })
}
