use crate::curvature::curvature_from_support;
use crate::error::{FlowError, Result};
use crate::extents::steiner_point;
use crate::flow::engine::{Termination, Trajectory};
use serde::Serialize;

/// Minimum number of records needed to fit the vanishing law.
pub const MIN_RECORDS: usize = 10;

/// Extinction time and point from the square-root vanishing law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extinction {
    pub time: f64,
    pub point: [f64; 3],
    /// Slope `α` of `r_in² ≈ α (T − t)`.
    pub rate: f64,
    /// RMS misfit of the linear law relative to the largest fitted `r_in²`.
    pub residual: f64,
    pub fitted_records: usize,
}

/// Fits `r_in(t)² ≈ α (T − t)` by least squares over the last 30% of the
/// records; the point is the Steiner point of the last record.
pub fn estimate_extinction(traj: &Trajectory) -> Result<Extinction> {
    if traj.termination != Termination::ExtinctionThreshold {
        return Err(FlowError::InvalidParameter("the trajectory did not reach the extinction threshold".into()));
    }
    let count = traj.states.len();
    if count < MIN_RECORDS {
        return Err(FlowError::InsufficientRecords { needed: MIN_RECORDS, got: count });
    }
    let start = count - (3 * count).div_ceil(10);
    let t: Vec<f64> = traj.states[start..].iter().map(|s| s.t).collect();
    let y: Vec<f64> = traj.extents[start..].iter().map(|e| e.r_in * e.r_in).collect();
    let m = t.len() as f64;
    let (tm, ym) = (t.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let stt: f64 = t.iter().map(|t| (t - tm) * (t - tm)).sum();
    let sty: f64 = t.iter().zip(&y).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    if !(slope < 0.0) {
        return Err(FlowError::InvalidParameter(format!("r_in² is not decreasing over the fitted records (slope {slope})")));
    }
    let rms = (t.iter().zip(&y).map(|(t, y)| (y - intercept - slope * t).powi(2)).sum::<f64>() / m).sqrt();
    let ymax = y.iter().copied().fold(0.0, f64::max);
    let last = traj.states.last().expect("non-empty trajectory");
    let point = steiner_point(last, &curvature_from_support(last)?);
    Ok(Extinction { time: -intercept / slope, point, rate: -slope, residual: rms / ymax, fitted_records: t.len() })
}
