//! Radial anisotropic factors ψ with closed-form jets.

use crate::error::{FlowError, Result};
use crate::sphere::GridMode;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A positive factor `ψ(x) = g(|x − x₀|²)` on `R^{n+1}`.
///
/// An empty `center` means the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Anisotropy {
    Constant {
        a: f64,
    },
    /// `a + b|x − x₀|²`
    Quadratic {
        a: f64,
        b: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// `a − b·exp(−|x − x₀|²/s²)`
    GaussianWell {
        a: f64,
        b: f64,
        s: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
}

impl Default for Anisotropy {
    fn default() -> Self {
        Anisotropy::Constant { a: 1.0 }
    }
}

/// `ψ`, `Dψ` and `D²ψ` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiJet {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// Suprema and infima of the jet over a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JetBounds {
    pub inf_psi: f64,
    pub sup_psi: f64,
    pub sup_grad: f64,
    pub sup_hess: f64,
}

impl Anisotropy {
    pub fn constant(a: f64) -> Result<Self> {
        let d = Anisotropy::Constant { a };
        d.validate()?;
        Ok(d)
    }

    pub fn quadratic(a: f64, b: f64, center: Vec<f64>) -> Result<Self> {
        let d = Anisotropy::Quadratic { a, b, center };
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian_well(a: f64, b: f64, s: f64, center: Vec<f64>) -> Result<Self> {
        let d = Anisotropy::GaussianWell { a, b, s, center };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FlowError::InvalidAnisotropy(m.to_string()));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Anisotropy::Constant { a } => {
                if !(*a > 0.0) || !a.is_finite() {
                    return bad("constant factor must be positive");
                }
            }
            Anisotropy::Quadratic { a, b, center } => {
                if !(*a > 0.0) || !(*b >= 0.0) || !finite(&[*a, *b]) || !finite(center) {
                    return bad("quadratic factor needs a > 0 and b ≥ 0");
                }
            }
            Anisotropy::GaussianWell { a, b, s, center } => {
                if !(*b >= 0.0) || !(a > b) || !(*s > 0.0) || !finite(&[*a, *b, *s]) || !finite(center) {
                    return bad("gaussian well needs a > b ≥ 0 and s > 0");
                }
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Anisotropy::Constant { .. } => true,
            Anisotropy::Quadratic { b, .. } | Anisotropy::GaussianWell { b, .. } => *b == 0.0,
        }
    }

    fn center(&self) -> &[f64] {
        match self {
            Anisotropy::Constant { .. } => &[],
            Anisotropy::Quadratic { center, .. } | Anisotropy::GaussianWell { center, .. } => center,
        }
    }

    /// `(g, g', g'')` of the radial profile at `q = |x − x₀|²`.
    pub fn profile(&self, q: f64) -> (f64, f64, f64) {
        match *self {
            Anisotropy::Constant { a } => (a, 0.0, 0.0),
            Anisotropy::Quadratic { a, b, .. } => (a + b * q, b, 0.0),
            Anisotropy::GaussianWell { a, b, s, .. } => {
                let s2 = s * s;
                let e = (-q / s2).exp();
                (a - b * e, b * e / s2, -b * e / (s2 * s2))
            }
        }
    }

    /// Closed-form jet at a point of any dimension.
    ///
    /// ```
    /// use ascflow::anisotropy::Anisotropy;
    /// let psi = Anisotropy::quadratic(1.0, 0.01, vec![]).unwrap();
    /// let jet = psi.eval_psi(&[1.0, 0.0, 0.0]);
    /// assert!((jet.value - 1.01).abs() < 1e-15);
    /// assert!((jet.grad[0] - 0.02).abs() < 1e-15);
    /// assert!((jet.hess[(1, 1)] - 0.02).abs() < 1e-15);
    /// ```
    pub fn eval_psi(&self, x: &[f64]) -> PsiJet {
        let c = self.center();
        let d = DVector::from_iterator(x.len(), x.iter().enumerate().map(|(i, xi)| xi - c.get(i).copied().unwrap_or(0.0)));
        let (g, g1, g2) = self.profile(d.norm_squared());
        let hess = DMatrix::identity(x.len(), x.len()) * (2.0 * g1) + &d * d.transpose() * (4.0 * g2);
        PsiJet { value: g, grad: d * (2.0 * g1), hess }
    }

    /// Center as a 3-vector in the node representation of a grid mode.
    ///
    /// Axisymmetric grids store the symmetry axis in the third slot and need
    /// the center on that axis.
    pub fn frame_center(&self, n: usize, mode: GridMode) -> Result<[f64; 3]> {
        let c = self.center();
        if c.is_empty() {
            return Ok([0.0; 3]);
        }
        if c.len() != n + 1 {
            return Err(FlowError::InvalidAnisotropy(format!("center has {} components, expected {}", c.len(), n + 1)));
        }
        match mode {
            GridMode::Full2d => Ok([c[0], c[1], c[2]]),
            GridMode::Axisym => {
                if c[..n].iter().any(|&v| v != 0.0) {
                    return Err(FlowError::InvalidAnisotropy("axisymmetric runs need the center on the symmetry axis".into()));
                }
                Ok([0.0, 0.0, c[n]])
            }
        }
    }

    /// Value and gradient at a 3-vector point against a precomputed center.
    #[inline]
    pub fn value_grad3(&self, x: &[f64; 3], center: &[f64; 3]) -> (f64, [f64; 3]) {
        let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
        let (g, g1, _) = self.profile(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        (g, [2.0 * g1 * d[0], 2.0 * g1 * d[1], 2.0 * g1 * d[2]])
    }

    /// Jet bounds over the ball `|x − p| ≤ radius`.
    ///
    /// The jet depends only on `ρ = |x − x₀|`, so the region reduces to an
    /// interval of `ρ`. The interval is sampled densely, refined by doubling
    /// until the bounds settle to 1e-6 relative, and augmented with the
    /// closed-form critical points of each family.
    pub fn jet_bounds(&self, ball_center: &[f64], radius: f64) -> JetBounds {
        let c = self.center();
        let len = ball_center.len().max(c.len());
        let dist = (0..len).map(|i| ball_center.get(i).copied().unwrap_or(0.0) - c.get(i).copied().unwrap_or(0.0)).map(|d| d * d).sum::<f64>().sqrt();
        self.jet_bounds_radial((dist - radius).max(0.0), dist + radius)
    }

    /// Jet bounds over the shell `lo ≤ |x − x₀| ≤ hi`.
    pub fn jet_bounds_radial(&self, lo: f64, hi: f64) -> JetBounds {
        let mut fixed = vec![lo, hi];
        if let Anisotropy::GaussianWell { s, .. } = *self {
            // |Dψ| peaks at ρ = s/√2; the radial Hessian eigenvalue at ρ = s√(3/2).
            fixed.extend([s / 2f64.sqrt(), s * 1.5f64.sqrt()].into_iter().filter(|r| (lo..=hi).contains(r)));
        }
        let eval = |count: usize| -> JetBounds {
            let mut b = JetBounds { inf_psi: f64::INFINITY, sup_psi: 0.0, sup_grad: 0.0, sup_hess: 0.0 };
            let samples = (0..=count).map(|k| lo + (hi - lo) * k as f64 / count as f64);
            for rho in samples.chain(fixed.iter().copied()) {
                let q = rho * rho;
                let (g, g1, g2) = self.profile(q);
                b.inf_psi = b.inf_psi.min(g);
                b.sup_psi = b.sup_psi.max(g);
                b.sup_grad = b.sup_grad.max((2.0 * g1 * rho).abs());
                b.sup_hess = b.sup_hess.max((2.0 * g1).abs().max((2.0 * g1 + 4.0 * g2 * q).abs()));
            }
            b
        };
        let mut count = 64;
        let mut prev = eval(count);
        while count < 1 << 20 {
            count *= 2;
            let next = eval(count);
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            let settled = rel(prev.inf_psi, next.inf_psi) && rel(prev.sup_grad, next.sup_grad) && rel(prev.sup_hess, next.sup_hess);
            prev = next;
            if settled {
                break;
            }
        }
        prev
    }
}

/// The admissibility threshold for `c` from jet bounds:
/// `max{5n² sup|Dψ| / (ε² inf ψ), 3n sup‖D²ψ‖^{1/2} / (ε inf ψ^{1/2}) + 2n³ sup|Dψ| / inf ψ}`.
pub fn admissible_c_from_bounds(bounds: &JetBounds, eps: f64, n: usize) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FlowError::InvalidParameter(format!("ε must lie in (0, 1), got {eps}")));
    }
    let n = n as f64;
    let first = 5.0 * n * n * bounds.sup_grad / (eps * eps * bounds.inf_psi);
    let second = 3.0 * n * bounds.sup_hess.sqrt() / (eps * bounds.inf_psi.sqrt()) + 2.0 * n.powi(3) * bounds.sup_grad / bounds.inf_psi;
    Ok(first.max(second))
}

/// Smallest admissible `c` for pinching over the ball `|x − center| ≤ radius`.
///
/// ```
/// use ascflow::anisotropy::{admissible_c, Anisotropy};
/// let psi = Anisotropy::quadratic(1.0, 0.01, vec![]).unwrap();
/// let c = admissible_c(&psi, &[0.0; 3], 1.0, 0.1, 2).unwrap();
/// assert!((c - 40.0).abs() < 1e-9);
/// ```
pub fn admissible_c(desc: &Anisotropy, center: &[f64], radius: f64, eps: f64, n: usize) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(FlowError::InvalidParameter(format!("region radius must be non-negative, got {radius}")));
    }
    desc.validate()?;
    admissible_c_from_bounds(&desc.jet_bounds(center, radius), eps, n)
}
