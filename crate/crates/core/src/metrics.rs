//! Evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::ForecastRecord;
use crate::series::TimeSeries;

/// Targets with `|x| < DEFAULT_REL_FLOOR` are left out of relative errors.
pub const DEFAULT_REL_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub median_abs_error: f64,
    pub median_rel_error_pct: f64,
    pub n_points: usize,
    pub n_excluded: usize,
}

/// Median of a slice; `None` when empty. Even lengths average the two middle
/// values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// `|x_{t+Δ} − x̂_{t+Δ}|` for every record, in record order.
pub fn abs_errors(truth: &TimeSeries, records: &[ForecastRecord]) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            truth
                .get(r.target_t)
                .map(|x| (x - r.prediction).abs())
                .ok_or(Error::SeriesTooShort {
                    len: truth.len(),
                    needed: r.target_t + 1,
                })
        })
        .collect()
}

/// Median over records of `|x − x̂| / |x|` in percent, plus the median
/// absolute error over the same points.
pub fn median_relative_error(
    truth: &TimeSeries,
    records: &[ForecastRecord],
    rel_floor: f64,
) -> Result<ErrorSummary> {
    let mut abs = Vec::with_capacity(records.len());
    let mut rel = Vec::with_capacity(records.len());
    let mut n_excluded = 0;
    for r in records {
        let x = truth.get(r.target_t).ok_or(Error::SeriesTooShort {
            len: truth.len(),
            needed: r.target_t + 1,
        })?;
        if x.abs() < rel_floor {
            n_excluded += 1;
            continue;
        }
        let e = (x - r.prediction).abs();
        abs.push(e);
        rel.push(100.0 * e / x.abs());
    }
    let (Some(median_abs_error), Some(median_rel_error_pct)) = (median(&abs), median(&rel)) else {
        return Err(Error::EmptyEvaluation);
    };
    Ok(ErrorSummary {
        median_abs_error,
        median_rel_error_pct,
        n_points: rel.len(),
        n_excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    /// `100 · (median baseline error / median memory error − 1)`;
    /// `+∞` when the memory median is zero and the baseline's is not.
    pub percent: f64,
    /// The memory median error was exactly zero.
    pub memory_median_zero: bool,
}

/// Median relative prediction improvement of `memory` over `baseline`,
/// computed on absolute errors.
pub fn improvement(baseline_errors: &[f64], memory_errors: &[f64]) -> Result<Improvement> {
    let (Some(base), Some(mem)) = (median(baseline_errors), median(memory_errors)) else {
        return Err(Error::EmptyEvaluation);
    };
    if mem == 0.0 {
        return Ok(Improvement {
            percent: if base == 0.0 { 0.0 } else { f64::INFINITY },
            memory_median_zero: true,
        });
    }
    Ok(Improvement {
        percent: 100.0 * (base / mem - 1.0),
        memory_median_zero: false,
    })
}
