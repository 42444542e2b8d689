//! Finite-difference checks of the evolution equations along engine steps.

use crate::anisotropy::Anisotropy;
use crate::curvature::{curvature_from_support, CurvatureBundle};
use crate::error::{FlowError, Result};
use crate::flow::step_gauss;
use crate::sphere::{covariant_derivatives, GridMode};
use crate::state::{dot, Gauge, SupportState};
use nalgebra::Matrix2;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// `∂S/∂t = −F`.
    SupportSpeed,
    /// `∂H/∂t = tr(r⁻²(∇̄∇̄F + F ḡ))`.
    MeanCurvature,
    /// `∂F/∂t = ψH tr(r⁻²∇̄∇̄F)/R^{1/2} + ψ²(H|A|² − tr A³) − ψR (Dψ·ν)`.
    SpeedPrinted,
    /// The printed right side plus `−ψR^{-1/2} tr(r⁻³∇̄∇̄F) − R^{1/2} Dψ·∇̄F`,
    /// the full derivative at a fixed normal.
    SpeedCompleted,
    /// `∂g/∂t = −2F h`, evaluated for umbilic bodies only: at a fixed normal
    /// the tangential motion of any other body adds a Lie derivative.
    Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyRow {
    pub identity: Identity,
    /// `max |finite difference − analytic|` over nodes.
    pub max_abs: f64,
    /// `max |analytic|` over nodes.
    pub scale: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub dt: f64,
    pub t: f64,
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn row(&self, identity: Identity) -> &VerifyRow {
        self.rows.iter().find(|r| r.identity == identity).expect("every identity is reported")
    }
}

/// Frame data: radii matrix and the multiplicity of the second direction.
struct Frame {
    mats: Vec<Matrix2<f64>>,
    mult: f64,
}

fn frame(state: &SupportState, bundle: &CurvatureBundle) -> Frame {
    let grid = state.grid();
    let mult = match grid.mode {
        GridMode::Full2d => 1.0,
        GridMode::Axisym => (grid.dim - 1) as f64,
    };
    let mats = bundle.radii.iter().map(|r| Matrix2::new(r[0], r[1], r[1], r[2])).collect();
    Frame { mats, mult }
}

fn trace(m: &Matrix2<f64>, mult: f64) -> f64 {
    m[(0, 0)] + mult * m[(1, 1)]
}

fn speed(state: &SupportState, bundle: &CurvatureBundle, psi: &Anisotropy) -> Result<Vec<f64>> {
    let grid = state.grid();
    let center = psi.frame_center(grid.dim, grid.mode)?;
    Ok((0..grid.len()).map(|i| psi.value_grad3(&bundle.position[i], &center).0 * bundle.scalar[i].sqrt()).collect())
}

fn row(identity: Identity, fd: &[f64], analytic: &[f64]) -> VerifyRow {
    let max_abs = fd.iter().zip(analytic).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = analytic.iter().map(|a| a.abs()).fold(0.0, f64::max);
    VerifyRow { identity, max_abs, scale, relative: max_abs / scale.max(f64::MIN_POSITIVE) }
}

/// Compares analytic time derivatives at `t + dt` with centered differences
/// over two engine steps of size `dt`.
pub fn verify_evolution(state: &SupportState, psi: &Anisotropy, dt: f64) -> Result<VerifyReport> {
    if state.gauge != Gauge::GaussSupport {
        return Err(FlowError::GaugeMismatch("verification runs in the support gauge".into()));
    }
    let b0 = curvature_from_support(state)?;
    let rho = b0.min_radius();
    if !(dt > 0.0 && dt <= 1e-5 * rho * rho * (1.0 + 1e-9)) {
        return Err(FlowError::InvalidParameter(format!("dt must lie in (0, 1e-5·ρ_min²] = (0, {:.3e}], got {dt}", 1e-5 * rho * rho)));
    }
    let s1 = step_gauss(state, psi, dt)?;
    let s2 = step_gauss(&s1, psi, dt)?;
    let b1 = curvature_from_support(&s1)?;
    let b2 = curvature_from_support(&s2)?;
    let grid = state.grid().clone();
    let len = grid.len();
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| (b - a) / (2.0 * dt)).collect() };

    let f0 = speed(state, &b0, psi)?;
    let f1 = speed(&s1, &b1, psi)?;
    let f2 = speed(&s2, &b2, psi)?;
    // Rejects an under-resolved speed field.
    let df = covariant_derivatives(&grid, &f1)?;
    let fr = frame(&s1, &b1);
    let center = psi.frame_center(grid.dim, grid.mode)?;

    let mut mean_an = Vec::with_capacity(len);
    let mut printed = Vec::with_capacity(len);
    let mut completed = Vec::with_capacity(len);
    for i in 0..len {
        let inv = fr.mats[i].try_inverse().ok_or(FlowError::ConvexityLoss { node: i, min_radius: 0.0 })?;
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        let hf = Matrix2::new(df.hess_tt[i], df.hess_tp[i], df.hess_tp[i], df.hess_pp[i]);
        let f = f1[i];
        mean_an.push(trace(&(inv2 * (hf + Matrix2::identity() * f)), fr.mult));

        let lam = b1.principal_curvatures(i);
        let h = b1.mean[i];
        let a2 = b1.norm_sq[i];
        let a3: f64 = lam.iter().map(|l| l * l * l).sum();
        let r = b1.scalar[i];
        let sr = r.sqrt();
        let (p, dp) = psi.value_grad3(&b1.position[i], &center);
        let nu = b1.normal[i];
        let (et, ep) = (grid.e_theta[i], grid.e_phi[i]);
        let grad_f: [f64; 3] = std::array::from_fn(|c| df.grad_t[i] * et[c] + df.grad_p[i] * ep[c]);
        let pr = p * h * trace(&(inv2 * hf), fr.mult) / sr + p * p * (h * a2 - a3) - p * r * dot(&dp, &nu);
        printed.push(pr);
        completed.push(pr - p / sr * trace(&(inv3 * hf), fr.mult) - sr * dot(&dp, &grad_f));
    }

    let f_neg: Vec<f64> = f1.iter().map(|f| -f).collect();
    let fd_f = diff(&f0, &f2);
    let mut rows = vec![
        row(Identity::SupportSpeed, &diff(state.values(), s2.values()), &f_neg),
        row(Identity::MeanCurvature, &diff(&b0.mean, &b2.mean), &mean_an),
        row(Identity::SpeedPrinted, &fd_f, &printed),
        row(Identity::SpeedCompleted, &fd_f, &completed),
    ];

    // On an umbilic body g = ρ²ḡ and h = ρḡ, with ρ half the width; this
    // avoids differentiating the support function.
    let half_width = |s: &SupportState| -> Vec<f64> { (0..len).map(|i| 0.5 * (s.values()[i] + s.values()[grid.antipode(i)])).collect() };
    let (w0, w1, w2) = (half_width(state), half_width(&s1), half_width(&s2));
    let fd_g: Vec<f64> = (0..len).map(|i| (w2[i] * w2[i] - w0[i] * w0[i]) / (2.0 * dt)).collect();
    let an_g: Vec<f64> = (0..len).map(|i| -2.0 * f1[i] * w1[i]).collect();
    rows.push(row(Identity::Metric, &fd_g, &an_g));
    Ok(VerifyReport { dt, t: s1.t, rows })
}
