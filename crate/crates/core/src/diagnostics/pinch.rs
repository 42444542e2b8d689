use crate::anisotropy::Anisotropy;
use crate::curvature::CurvatureBundle;
use crate::error::{FlowError, Result};
use crate::extents::ExtentReport;
use crate::state::SupportState;
use serde::{Deserialize, Serialize};

/// Pinching constants in `W = h − ε(H + c) g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinchParams {
    pub eps: f64,
    pub c: f64,
}

impl PinchParams {
    pub fn new(eps: f64, c: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(FlowError::InvalidParameter(format!("ε must lie in (0, 1), got {eps}")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(FlowError::InvalidParameter(format!("c must be non-negative, got {c}")));
        }
        Ok(PinchParams { eps, c })
    }
}

/// `‖f_σ‖_p` against the surface measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FSigmaNorm {
    pub sigma: f64,
    pub p: f64,
    pub value: f64,
}

/// Pinching quantities of one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinchReport {
    /// `min_nodes (λ_min − ε(H + c))`, the smallest eigenvalue of `W` in a `g`-orthonormal frame.
    pub min_w_eigenvalue: f64,
    pub lambda_ratio_max: f64,
    pub f0_max: f64,
    pub f_sigma: Vec<FSigmaNorm>,
}

/// `‖f‖_p = (∫ f^p dμ)^{1/p}` with `dμ` the evolving area measure.
pub fn lp_norm(bundle: &CurvatureBundle, weights: &[f64], f: &[f64], p: f64) -> f64 {
    let sum: f64 = f.iter().zip(weights).zip(&bundle.area_density).map(|((f, w), a)| w * a * f.abs().powf(p)).sum();
    sum.powf(1.0 / p)
}

/// Pinching report for the `(σ, p)` pairs requested.
pub fn pinch_report(bundle: &CurvatureBundle, weights: &[f64], params: PinchParams, norms: &[(f64, f64)]) -> Result<PinchReport> {
    for &(sigma, p) in norms {
        if !(0.0..=0.5).contains(&sigma) || !(p >= 2.0) {
            return Err(FlowError::InvalidParameter(format!("need σ ∈ [0, 1/2] and p ≥ 2, got σ = {sigma}, p = {p}")));
        }
    }
    let n = bundle.dim;
    let mut min_w = f64::INFINITY;
    let mut ratio = 1.0f64;
    for i in 0..bundle.len() {
        let l = bundle.principal_curvatures(i);
        min_w = min_w.min(l[0] - params.eps * (bundle.mean[i] + params.c));
        ratio = ratio.max(l[n - 1] / l[0]);
    }
    let f0_max = bundle.f_sigma(0.0).into_iter().fold(0.0, f64::max);
    let f_sigma = norms.iter().map(|&(sigma, p)| FSigmaNorm { sigma, p, value: lp_norm(bundle, weights, &bundle.f_sigma(sigma), p) }).collect();
    Ok(PinchReport { min_w_eigenvalue: min_w, lambda_ratio_max: ratio, f0_max, f_sigma })
}

/// Extremes of the normal speed and the scale-free product `F_max · r_in`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedReport {
    pub f_max: f64,
    pub f_min: f64,
    pub f_max_r_in: f64,
}

pub fn speed_bound(state: &SupportState, bundle: &CurvatureBundle, psi: &Anisotropy, r_in: f64) -> Result<SpeedReport> {
    let grid = state.grid();
    let center = psi.frame_center(grid.dim, grid.mode)?;
    let (mut f_max, mut f_min) = (0.0f64, f64::INFINITY);
    for i in 0..bundle.len() {
        let f = psi.value_grad3(&bundle.position[i], &center).0 * bundle.scalar[i].sqrt();
        f_max = f_max.max(f);
        f_min = f_min.min(f);
    }
    Ok(SpeedReport { f_max, f_min, f_max_r_in: f_max * r_in })
}

/// Diagnostics of one recorded state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub w_max: f64,
    pub w_min: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub lambda_ratio_max: f64,
    pub min_w_eigenvalue: f64,
    pub f0_max: f64,
    pub f_sigma: Vec<FSigmaNorm>,
    pub f_max: f64,
    pub f_min: f64,
    pub f_max_r_in: f64,
    pub volume: f64,
}

/// Full diagnostics record for a state with known curvature and extents.
pub fn diagnose_state(
    state: &SupportState,
    bundle: &CurvatureBundle,
    extents: &ExtentReport,
    psi: &Anisotropy,
    params: PinchParams,
    norms: &[(f64, f64)],
) -> Result<DiagnosticsRecord> {
    let pinch = pinch_report(bundle, &state.grid().weights, params, norms)?;
    let speed = speed_bound(state, bundle, psi, extents.r_in)?;
    Ok(DiagnosticsRecord {
        t: state.t,
        r_in: extents.r_in,
        r_out: extents.r_out,
        w_max: extents.w_max,
        w_min: extents.w_min,
        h_max: bundle.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        h_min: bundle.mean.iter().copied().fold(f64::INFINITY, f64::min),
        lambda_ratio_max: pinch.lambda_ratio_max,
        min_w_eigenvalue: pinch.min_w_eigenvalue,
        f0_max: pinch.f0_max,
        f_sigma: pinch.f_sigma,
        f_max: speed.f_max,
        f_min: speed.f_min,
        f_max_r_in: speed.f_max_r_in,
        volume: crate::rescale::volume_with_bundle(state, bundle),
    })
}
