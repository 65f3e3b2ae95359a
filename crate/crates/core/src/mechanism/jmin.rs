use serde::{Deserialize, Serialize};

use super::dataset::ModulationDataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JminEstimate {
    pub j_min: usize,
    /// Unrounded extrapolated limit of d log|ψ̃| / d log M.
    pub limit: f64,
    /// Centered differences entering the fit.
    pub points: usize,
}

/// Minimum jump count from the small-M behaviour of the population.
///
/// The log-derivative D = d log√P / d log M is formed by centered
/// differences, then fitted as a line in M over the smallest-M
/// `head_fraction` of the dataset; the intercept at M = 0 (log M → −∞) is
/// rounded. Each difference is weighted by (Δlog M)², the inverse of its
/// noise variance under multiplicative noise. Rows with zero population or
/// zero M are skipped.
pub fn estimate_jmin(ds: &ModulationDataset, head_fraction: f64) -> Result<JminEstimate> {
    if !(head_fraction > 0.0 && head_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("head fraction must be in (0, 1], got {head_fraction}")));
    }
    let head = ((head_fraction * ds.len() as f64).ceil() as usize).min(ds.len());
    // One row past the head so that its last point has a right neighbour.
    let usable: Vec<Option<(f64, f64)>> = ds.rows[..(head + 1).min(ds.len())]
        .iter()
        .map(|r| (r.m > 0.0 && r.population > 0.0).then(|| (r.m.ln(), 0.5 * r.population.ln())))
        .collect();
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut points = 0;
    for i in 1..head.min(usable.len().saturating_sub(1)) {
        let (Some(left), Some(_), Some(right)) = (usable[i - 1], usable[i], usable[i + 1]) else {
            continue;
        };
        let dlog = right.0 - left.0;
        let d = (right.1 - left.1) / dlog;
        let x = ds.rows[i].m;
        let w = dlog * dlog;
        sw += w;
        swx += w * x;
        swy += w * d;
        swxx += w * x * x;
        swxy += w * x * d;
        points += 1;
    }
    if points < 5 {
        return Err(Error::InsufficientData(format!(
            "only {points} usable log-derivative points in the head region (need 5)"
        )));
    }
    let det = sw * swxx - swx * swx;
    if det.abs() <= f64::EPSILON * sw * swxx {
        return Err(Error::Degenerate("head region has no spread in M".into()));
    }
    let limit = (swy * swxx - swx * swxy) / det;
    if !limit.is_finite() || limit < -0.5 {
        return Err(Error::Degenerate(format!("extrapolated limit {limit} is not a jump count")));
    }
    Ok(JminEstimate {
        j_min: limit.round().max(0.0) as usize,
        limit,
        points,
    })
}
