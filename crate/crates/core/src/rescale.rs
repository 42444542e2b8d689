//! Parabolic and volume-preserving rescalings, the monotone quantity and
//! the soliton fit.

use crate::anisotropy::Anisotropy;
use crate::curvature::{curvature_from_support, CurvatureBundle};
use crate::error::{FlowError, Result};
use crate::extents::steiner_point;
use crate::flow::{Extinction, Trajectory};
use crate::state::{dot, Gauge, SupportState};
use serde::Serialize;

/// Half of the enclosed volume: `(1/(n+1)) ∫ S/(2K) dσ`.
///
/// ```
/// use std::sync::Arc;
/// use ascflow::rescale::volume;
/// use ascflow::sphere::{build_grid, GridMode};
/// use ascflow::state::{Gauge, InitialBody};
///
/// let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
/// let s = InitialBody::Sphere { radius: 1.0, center: [0.0; 3] }.sample(&grid, Gauge::GaussSupport).unwrap();
/// assert!((volume(&s).unwrap() - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
/// ```
pub fn volume(state: &SupportState) -> Result<f64> {
    Ok(volume_with_bundle(state, &curvature_from_support(state)?))
}

pub fn volume_with_bundle(state: &SupportState, bundle: &CurvatureBundle) -> f64 {
    let grid = state.grid();
    let n = grid.dim;
    let s = state.values();
    let integrand = |i: usize| match state.gauge {
        Gauge::GaussSupport => s[i] / bundle.gauss[i],
        // The cone over the surface from the origin.
        Gauge::RadialAxisym => s[i].powi(n as i32 + 1),
    };
    (0..grid.len()).map(|i| grid.weights[i] * integrand(i)).sum::<f64>() / (2.0 * (n as f64 + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    Parabolic,
    VolumePreserving,
}

/// A rescaled record; the original body is `X = scale · X̂ + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledFrame {
    pub kind: FrameKind,
    pub tau: f64,
    /// Time of the source record.
    pub t: f64,
    pub scale: f64,
    pub shift: [f64; 3],
    pub state: SupportState,
}

impl RescaledFrame {
    fn psi_hat(&self, bundle: &CurvatureBundle, psi: &Anisotropy) -> Result<Vec<f64>> {
        let grid = self.state.grid();
        let center = psi.frame_center(grid.dim, grid.mode)?;
        Ok(bundle
            .position
            .iter()
            .map(|x| {
                let y = std::array::from_fn(|c| self.scale * x[c] + self.shift[c]);
                psi.value_grad3(&y, &center).0
            })
            .collect())
    }

    /// The same frame with the origin moved to its Steiner point.
    pub fn recentered(&self) -> Result<RescaledFrame> {
        let bundle = curvature_from_support(&self.state)?;
        let p = steiner_point(&self.state, &bundle);
        let values = shift_support(&self.state, &p);
        let mut out = self.clone();
        out.state = self.state.with_values(values, self.state.t)?;
        out.shift = std::array::from_fn(|c| self.shift[c] + self.scale * p[c]);
        Ok(out)
    }
}

fn shift_support(state: &SupportState, p: &[f64; 3]) -> Vec<f64> {
    state.grid().nodes.iter().zip(state.values()).map(|(z, s)| s - dot(z, p)).collect()
}

fn require_gauss(traj: &Trajectory) -> Result<()> {
    match traj.states.first() {
        Some(s) if s.gauge == Gauge::GaussSupport => Ok(()),
        Some(_) => Err(FlowError::GaugeMismatch("rescalings act on support-gauge trajectories".into())),
        None => Err(FlowError::InsufficientRecords { needed: 1, got: 0 }),
    }
}

/// `S̃ = (S − z·x₀)/√(2(T − t))` at `τ = −½ log((T − t)/T)`.
pub fn parabolic_rescale(traj: &Trajectory, extinction: &Extinction) -> Result<Vec<RescaledFrame>> {
    require_gauss(traj)?;
    let big_t = extinction.time;
    traj.states
        .iter()
        .map(|s| {
            if !(s.t < big_t) {
                return Err(FlowError::PastExtinction { t: s.t, extinction: big_t });
            }
            let scale = (2.0 * (big_t - s.t)).sqrt();
            let values = shift_support(s, &extinction.point).into_iter().map(|v| v / scale).collect();
            Ok(RescaledFrame {
                kind: FrameKind::Parabolic,
                tau: -0.5 * ((big_t - s.t) / big_t).ln(),
                t: s.t,
                scale,
                shift: extinction.point,
                state: s.with_values(values, s.t)?,
            })
        })
        .collect()
}

/// Records strictly before `T`, for use with [`parabolic_rescale`].
pub fn before_extinction(traj: &Trajectory, extinction: &Extinction) -> Trajectory {
    let keep = traj.states.iter().take_while(|s| s.t < extinction.time).count();
    let mut out = traj.clone();
    out.states.truncate(keep);
    out.extents.truncate(keep);
    out
}

/// `Ŝ = S/V^{1/(n+1)}` at `τ = −log(V/V(0))`; two-dimensional runs only.
pub fn volume_preserving_rescale(traj: &Trajectory) -> Result<Vec<RescaledFrame>> {
    require_gauss(traj)?;
    let n = traj.states[0].dim();
    if n != 2 {
        return Err(FlowError::InvalidParameter(format!("the volume-preserving rescaling is defined for n = 2, got n = {n}")));
    }
    let vols: Vec<f64> = traj.states.iter().map(volume).collect::<Result<_>>()?;
    let mut frames = Vec::with_capacity(vols.len());
    for (k, (s, &v)) in traj.states.iter().zip(&vols).enumerate() {
        if k > 0 && !(v < vols[k - 1]) {
            return Err(FlowError::NonMonotoneVolume { index: k });
        }
        let scale = v.powf(1.0 / (n as f64 + 1.0));
        let state = s.with_values(s.values().iter().map(|x| x / scale).collect(), s.t)?;
        let check = volume(&state)?;
        if (check - 1.0).abs() > 1e-8 {
            return Err(FlowError::InvalidParameter(format!("normalized volume {check} differs from 1 at record {k}")));
        }
        frames.push(RescaledFrame { kind: FrameKind::VolumePreserving, tau: -(v / vols[0]).ln(), t: s.t, scale, shift: [0.0; 3], state });
    }
    Ok(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneSample {
    pub tau: f64,
    /// `Î = (∫ ψ̂²/Ŝ dσ)^{-1}`.
    pub value: f64,
    /// Centered difference over the neighbouring frames; absent at the ends.
    pub derivative: Option<f64>,
}

/// `Î` of each frame, with `ψ̂` the factor at the unrescaled point.
pub fn monotone_i(frames: &[RescaledFrame], psi: &Anisotropy) -> Result<Vec<MonotoneSample>> {
    let values: Vec<f64> = frames
        .iter()
        .map(|f| {
            let s = f.state.values();
            if let Some((node, &value)) = s.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                return Err(FlowError::Recentering { node, value });
            }
            let bundle = curvature_from_support(&f.state)?;
            let ph = f.psi_hat(&bundle, psi)?;
            let w = &f.state.grid().weights;
            Ok(1.0 / (0..s.len()).map(|i| w[i] * ph[i] * ph[i] / s[i]).sum::<f64>())
        })
        .collect::<Result<_>>()?;
    Ok((0..frames.len())
        .map(|k| MonotoneSample {
            tau: frames[k].tau,
            value: values[k],
            derivative: (k > 0 && k + 1 < frames.len()).then(|| (values[k + 1] - values[k - 1]) / (frames[k + 1].tau - frames[k - 1].tau)),
        })
        .collect())
}

/// Least-squares fit of `Ŝ ≈ C ψ̂ (2K̂)^{1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonFit {
    pub c_star: f64,
    /// `‖Ŝ − C*ψ̂(2K̂)^{1/2}‖ / ‖Ŝ‖` in `L²(dσ)`.
    pub residual: f64,
    pub support: Vec<f64>,
    pub psi_hat: Vec<f64>,
    pub gauss: Vec<f64>,
}

impl SolitonFit {
    /// The least-squares objective `‖Ŝ − C ψ̂ (2K̂)^{1/2}‖²` at any `C`.
    pub fn objective(&self, c: f64, weights: &[f64]) -> f64 {
        (0..self.support.len()).map(|i| weights[i] * (self.support[i] - c * self.psi_hat[i] * (2.0 * self.gauss[i]).sqrt()).powi(2)).sum()
    }
}

pub fn soliton_residual(frame: &RescaledFrame, psi: &Anisotropy) -> Result<SolitonFit> {
    if frame.state.dim() != 2 {
        return Err(FlowError::InvalidParameter("the soliton fit is two-dimensional".into()));
    }
    let bundle = curvature_from_support(&frame.state)?;
    let ph = frame.psi_hat(&bundle, psi)?;
    let s = frame.state.values();
    let w = &frame.state.grid().weights;
    let (mut num, mut den, mut norm) = (0.0, 0.0, 0.0);
    for i in 0..s.len() {
        let model = ph[i] * (2.0 * bundle.gauss[i]).sqrt();
        num += w[i] * s[i] * model;
        den += w[i] * model * model;
        norm += w[i] * s[i] * s[i];
    }
    let c_star = num / den;
    let mut fit = SolitonFit { c_star, residual: 0.0, support: s.to_vec(), psi_hat: ph, gauss: bundle.gauss };
    fit.residual = (fit.objective(c_star, w) / norm).sqrt();
    Ok(fit)
}
