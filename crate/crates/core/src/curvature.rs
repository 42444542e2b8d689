//! Curvature of a convex body from its support or radial function.

use crate::error::{FlowError, Result};
use crate::sphere::{covariant_derivatives, Derivatives, GridMode};
use crate::state::{Gauge, SupportState};

/// Per-node curvature data.
///
/// Principal curvatures are stored flat with stride `dim`, ascending per node.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub dim: usize,
    pub gauge: Gauge,
    pub derivs: Derivatives,
    /// Radii matrix `∇̄∇̄S + S ḡ` in the `(e_θ, e_φ)` frame as `(tt, tp, pp)`.
    /// In the radial gauge this is the diagonal of principal radii.
    pub radii: Vec<[f64; 3]>,
    pub lambda: Vec<f64>,
    pub mean: Vec<f64>,
    pub norm_sq: Vec<f64>,
    pub scalar: Vec<f64>,
    pub gauss: Vec<f64>,
    pub position: Vec<[f64; 3]>,
    pub normal: Vec<[f64; 3]>,
    /// `dμ/dσ`: the surface area element against the round measure.
    pub area_density: Vec<f64>,
}

impl CurvatureBundle {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn principal_curvatures(&self, node: usize) -> &[f64] {
        &self.lambda[node * self.dim..(node + 1) * self.dim]
    }

    /// `(|A|² − H²/n)/H^{2−σ}` at every node.
    pub fn f_sigma(&self, sigma: f64) -> Vec<f64> {
        let n = self.dim as f64;
        self.mean.iter().zip(&self.norm_sq).map(|(h, a2)| ((a2 - h * h / n) / h.powf(2.0 - sigma)).max(0.0)).collect()
    }

    pub fn min_radius(&self) -> f64 {
        (0..self.len()).map(|i| 1.0 / self.principal_curvatures(i)[self.dim - 1]).fold(f64::INFINITY, f64::min)
    }
}

/// `(H, |A|², R, K)` of a list of principal curvatures.
///
/// ```
/// let (h, a2, r, k) = ascflow::curvature::symmetric_functions(&[2.0, 8.0]);
/// assert_eq!((h, a2, r, k), (10.0, 68.0, 32.0, 16.0));
/// ```
pub fn symmetric_functions(lambda: &[f64]) -> (f64, f64, f64, f64) {
    let h: f64 = lambda.iter().sum();
    let a2: f64 = lambda.iter().map(|l| l * l).sum();
    // R = 2σ₂, accumulated pairwise to avoid cancellation in H² − |A|².
    let mut sigma2 = 0.0;
    for i in 0..lambda.len() {
        for j in i + 1..lambda.len() {
            sigma2 += lambda[i] * lambda[j];
        }
    }
    let k: f64 = lambda.iter().product();
    (h, a2, 2.0 * sigma2, k)
}

/// Eigenvalues of a symmetric 2×2 matrix `[[a, b], [b, c]]`, ascending.
pub fn sym2_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let m = 0.5 * (a + c);
    let d = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (m - d, m + d)
}

/// Full curvature state of a sampled body.
///
/// ```
/// use std::sync::Arc;
/// use ascflow::curvature::curvature_from_support;
/// use ascflow::sphere::{build_grid, GridMode};
/// use ascflow::state::{Gauge, InitialBody};
///
/// let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
/// let body = InitialBody::Sphere { radius: 2.0, center: [0.0; 3] };
/// let bundle = curvature_from_support(&body.sample(&grid, Gauge::GaussSupport).unwrap()).unwrap();
/// assert!((bundle.gauss[0] - 0.25).abs() < 1e-12);
/// assert!((bundle.scalar[0] - 0.5).abs() < 1e-12);
/// ```
pub fn curvature_from_support(state: &SupportState) -> Result<CurvatureBundle> {
    let grid = state.grid();
    let values = state.values();
    let derivs = covariant_derivatives(grid, values)?;
    let n = grid.dim;
    let len = grid.len();
    let mut radii = Vec::with_capacity(len);
    let mut position = Vec::with_capacity(len);
    let mut normal = Vec::with_capacity(len);
    let mut area_density = Vec::with_capacity(len);
    let mut lambda = Vec::with_capacity(len * n);
    let mut worst = (usize::MAX, f64::INFINITY);

    for i in 0..len {
        let z = grid.nodes[i];
        let (et, ep) = (grid.e_theta[i], grid.e_phi[i]);
        let f = values[i];
        let (gt, gp) = (derivs.grad_t[i], derivs.grad_p[i]);
        let (htt, htp, hpp) = (derivs.hess_tt[i], derivs.hess_tp[i], derivs.hess_pp[i]);
        // (first radius, second radius, smallest radius or the offending value)
        let (rho_a, rho_b, check) = match state.gauge {
            Gauge::GaussSupport => {
                let m = [htt + f, htp, hpp + f];
                radii.push(m);
                position.push([f * z[0] + gt * et[0] + gp * ep[0], f * z[1] + gt * et[1] + gp * ep[1], f * z[2] + gt * et[2] + gp * ep[2]]);
                normal.push(z);
                let (ra, rb) = match grid.mode {
                    GridMode::Full2d => sym2_eigenvalues(m[0], m[1], m[2]),
                    GridMode::Axisym => (m[0], m[2]),
                };
                (ra, rb, ra.min(rb))
            }
            Gauge::RadialAxisym => {
                if f <= 0.0 {
                    return Err(FlowError::StarShapeLoss { node: i, value: f });
                }
                let w = (f * f + gt * gt).sqrt();
                let lm = (f * f + 2.0 * gt * gt - f * htt) / (w * w * w);
                let lt = (f - hpp) / (f * w);
                position.push([f * z[0], f * z[1], f * z[2]]);
                normal.push([(f * z[0] - gt * et[0]) / w, 0.0, (f * z[2] - gt * et[2]) / w]);
                let (ra, rb) = (1.0 / lm, 1.0 / lt);
                radii.push([ra, 0.0, rb]);
                // Smallest radius when convex; otherwise the (non-positive) offending one.
                let min_lambda = lm.min(lt);
                let check = if min_lambda > 0.0 {
                    1.0 / lm.max(lt)
                } else if min_lambda < 0.0 {
                    1.0 / min_lambda
                } else {
                    0.0
                };
                (ra, rb, check)
            }
        };
        if !(check > 0.0) || !rho_a.is_finite() || !rho_b.is_finite() {
            if check < worst.1 || worst.0 == usize::MAX {
                worst = (i, check);
            }
            continue;
        }
        let start = lambda.len();
        match (grid.mode, state.gauge) {
            (GridMode::Full2d, _) => {
                lambda.push(1.0 / rho_b);
                lambda.push(1.0 / rho_a);
            }
            _ => {
                lambda.push(1.0 / rho_a);
                lambda.extend(std::iter::repeat_n(1.0 / rho_b, n - 1));
                lambda[start..].sort_by(f64::total_cmp);
            }
        }
        area_density.push(match state.gauge {
            Gauge::GaussSupport => lambda[start..].iter().map(|l| 1.0 / l).product(),
            Gauge::RadialAxisym => f.powi(n as i32 - 1) * (f * f + gt * gt).sqrt(),
        });
    }
    if worst.0 != usize::MAX {
        return Err(FlowError::ConvexityLoss { node: worst.0, min_radius: worst.1 });
    }

    let mut mean = Vec::with_capacity(len);
    let mut norm_sq = Vec::with_capacity(len);
    let mut scalar = Vec::with_capacity(len);
    let mut gauss = Vec::with_capacity(len);
    for l in lambda.chunks(n) {
        let (h, a2, r, k) = symmetric_functions(l);
        mean.push(h);
        norm_sq.push(a2);
        scalar.push(r);
        gauss.push(k);
    }
    Ok(CurvatureBundle { dim: n, gauge: state.gauge, derivs, radii, lambda, mean, norm_sq, scalar, gauss, position, normal, area_density })
}
