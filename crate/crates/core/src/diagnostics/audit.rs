//! Pointwise audit of the null-eigenvector condition used in the proof that
//! pinching is preserved.
//!
//! Indices are 0-based: index 0 is the null direction with the smallest
//! principal curvature.

use crate::anisotropy::{admissible_c_from_bounds, JetBounds};
use crate::diagnostics::pinch::PinchParams;
use crate::error::{FlowError, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Gap below which repeated curvatures are separated.
const SEPARATION: f64 = 1e-9;
/// Gap below which the null direction counts as coincident.
const COINCIDENT: f64 = 1e-12;

/// Pointwise data at a null eigenvector of `W`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullAuditSample {
    pub n: usize,
    pub params: PinchParams,
    /// Diagonal Weingarten values, ascending, with `h[0] = ε(H + c)`.
    pub h: Vec<f64>,
    /// Totally symmetric `h_{ijk}`, flat as `(i n + j) n + k`.
    pub dh: Vec<f64>,
    pub psi: f64,
    /// Tangential components `∇_k ψ`.
    pub grad: Vec<f64>,
    /// `∇₀∇₀ψ`.
    pub psi_11: f64,
    pub lap_psi: f64,
}

impl NullAuditSample {
    /// Validates the sample; repeated curvatures above the null one are
    /// separated by 1e-9.
    #[allow(clippy::too_many_arguments)]
    pub fn new(n: usize, params: PinchParams, mut h: Vec<f64>, dh: Vec<f64>, psi: f64, grad: Vec<f64>, psi_11: f64, lap_psi: f64) -> Result<Self> {
        let bad = |m: String| Err(FlowError::InvalidParameter(m));
        if n < 2 || h.len() != n || dh.len() != n * n * n || grad.len() != n {
            return bad(format!("sample arrays do not match n = {n}"));
        }
        if !(psi > 0.0) {
            return bad(format!("ψ must be positive, got {psi}"));
        }
        if h.windows(2).any(|w| w[1] < w[0]) || !(h[0] > 0.0) {
            return bad("curvatures must be positive and ascending".into());
        }
        if h[1] - h[0] < COINCIDENT {
            return Err(FlowError::CoincidentEigenvalues(0, 1));
        }
        for j in 2..n {
            if h[j] - h[j - 1] < SEPARATION {
                h[j] = h[j - 1] + SEPARATION;
            }
        }
        let total: f64 = h.iter().sum();
        let null = params.eps * (total + params.c);
        if (h[0] - null).abs() > 1e-8 * null.max(1.0) {
            return bad(format!("h[0] = {} is not ε(H + c) = {null}", h[0]));
        }
        let at = |i: usize, j: usize, k: usize| dh[(i * n + j) * n + k];
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = at(i, j, k);
                    scale = scale.max(v.abs());
                    if v != at(j, i, k) || v != at(i, k, j) {
                        return bad("h_ijk must be totally symmetric".into());
                    }
                }
            }
        }
        let ratio = params.eps / (1.0 - params.eps);
        for k in 0..n {
            let rhs = ratio * (1..n).map(|j| at(k, j, j)).sum::<f64>();
            if (at(k, 0, 0) - rhs).abs() > 1e-10 * scale.max(1.0) {
                return bad(format!("h_(k00) violates the null relation at k = {k}"));
            }
        }
        Ok(NullAuditSample { n, params, h, dh, psi, grad, psi_11, lap_psi })
    }

    fn t(&self, i: usize, j: usize, k: usize) -> f64 {
        self.dh[(i * self.n + j) * self.n + k]
    }
}

/// The decomposition as printed alongside the undecomposed expression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QParts {
    pub q0: f64,
    pub q1: f64,
    /// `Q_k` for `k = 1..n`.
    pub qk: Vec<f64>,
    /// `Σ Q_{0kl}` over `0 < k < l`.
    pub q1kl: f64,
    /// `Σ Q_{jkl}` over `0 < j < k < l`.
    pub qjkl: f64,
    /// Sum of the parts.
    pub total: f64,
    /// `Q` recomputed from the expression before decomposition.
    pub pre: f64,
    /// Sum of absolute values of the parts, the scale for relative gaps.
    pub scale: f64,
}

impl QParts {
    pub fn parts_sum(&self) -> f64 {
        self.q0 + self.q1 + self.qk.iter().sum::<f64>() + self.q1kl + self.qjkl
    }

    /// `|pre − total| / scale`.
    pub fn decomposition_gap(&self) -> f64 {
        (self.pre - self.total).abs() / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Evaluates every printed term of the decomposition.
///
/// ```
/// use ascflow::diagnostics::{audit_null_condition, NullAuditSample, PinchParams};
/// let p = PinchParams::new(0.1, 10.0).unwrap();
/// let s = NullAuditSample::new(2, p, vec![2.0, 8.0], vec![0.0; 8], 1.0, vec![0.0; 2], 0.0, 0.0).unwrap();
/// let q = audit_null_condition(&s);
/// assert!((q.total - 160.0 / 32f64.sqrt()).abs() < 1e-12);
/// ```
pub fn audit_null_condition(s: &NullAuditSample) -> QParts {
    let n = s.n;
    let nf = n as f64;
    let (eps, c, psi) = (s.params.eps, s.params.c, s.psi);
    let h = &s.h;
    let big_h: f64 = h.iter().sum();
    let mut sigma2 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sigma2 += h[i] * h[j];
        }
    }
    let r = 2.0 * sigma2;
    let sr = r.sqrt();
    let fd: Vec<f64> = h.iter().map(|hi| (big_h - hi) / sr).collect();
    let fdd = |i: usize, j: usize| -(big_h - h[i]) * (big_h - h[j]) / (r * sr) + if i == j { 0.0 } else { 1.0 / sr };
    // (ḟ^k − ḟ^l)/(h_kk − h_ll) in closed form.
    let dq = -1.0 / sr;
    let t = |i: usize, j: usize, k: usize| s.t(i, j, k);
    let quad = |k: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += fdd(i, j) * t(k, i, i) * t(k, j, j);
            }
        }
        acc
    };
    let c_last = c * eps * psi * fd[n - 1] * h[n - 1] * h[n - 1];
    let jet = sr * (s.psi_11 - eps * s.lap_psi);

    let q0 = jet + c * eps * psi * (0..n - 1).map(|k| fd[k] * h[k] * h[k]).sum::<f64>() + 0.5 * c_last;

    let mut q1 = (1.0 - eps) * psi * quad(0) + c_last / (2.0 * nf);
    for j in 1..n {
        q1 += 2.0 * psi * fd[j] / (h[j] - h[0]) * t(0, j, j).powi(2) - 2.0 * eps * psi * dq * t(0, j, j).powi(2);
    }
    q1 += 2.0 * (1.0 - eps) * (0..n).map(|j| s.grad[0] * fd[j] * t(0, j, j)).sum::<f64>();

    let qk: Vec<f64> = (1..n)
        .map(|k| {
            let mut q = -eps * psi * quad(k) + c_last / (2.0 * nf);
            q += 2.0 * psi * fd[0] / (h[k] - h[0]) * t(k, 0, 0).powi(2) + 2.0 * psi * dq * t(k, 0, 0).powi(2);
            q -= 2.0 * eps * psi * (0..n).filter(|&j| j != k).map(|j| dq * t(k, j, j).powi(2)).sum::<f64>();
            q -= 2.0 * eps * (0..n).map(|j| s.grad[k] * fd[j] * t(k, j, j)).sum::<f64>();
            q
        })
        .collect();

    // The printed distinct-index terms carry no factor ψ.
    let mut q1kl = 0.0;
    let mut qjkl = 0.0;
    for k in 1..n {
        for l in k + 1..n {
            let coeff = (1.0 - eps) * dq + (fd[k] / (h[l] - h[0]) + fd[l] / (h[k] - h[0])) - eps * 2.0 * dq;
            q1kl += 2.0 * coeff * t(0, k, l).powi(2);
            for m in l + 1..n {
                qjkl += -2.0 * eps * 3.0 * dq * t(k, l, m).powi(2);
            }
        }
    }

    // The undecomposed expression, term by term.
    let mut pre = psi * quad(0) - eps * psi * (0..n).map(quad).sum::<f64>();
    for j in 0..n {
        for k in 0..n {
            for l in k + 1..n {
                pre += -2.0 * eps * psi * dq * t(j, k, l).powi(2);
                if j == 0 {
                    pre += 2.0 * psi * dq * t(0, k, l).powi(2);
                }
            }
        }
    }
    for k in 0..n {
        for l in 1..n {
            pre += 2.0 * psi * fd[k] / (h[l] - h[0]) * t(0, k, l).powi(2);
        }
    }
    pre += jet;
    for j in 0..n {
        let inner: f64 = (0..n).map(|i| t(i, j, j) * s.grad[i]).sum();
        pre += 2.0 * fd[j] * (t(0, j, j) * s.grad[0] - eps * inner);
    }
    pre += c * eps * psi * (0..n).map(|k| fd[k] * h[k] * h[k]).sum::<f64>();

    let scale = q0.abs() + q1.abs() + qk.iter().map(|q| q.abs()).sum::<f64>() + q1kl.abs() + qjkl.abs();
    let total = q0 + q1 + qk.iter().sum::<f64>() + q1kl + qjkl;
    QParts { q0, q1, qk, q1kl, qjkl, total, pre, scale }
}

/// How `c` is chosen for each sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CChoice {
    /// `factor ×` the admissible value for the declared jet bounds and the sample's `ε`.
    Admissible {
        factor: f64,
    },
    Fixed {
        c: f64,
    },
}

/// Declared bounds and sampling ranges of an audit batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    pub dims: Vec<usize>,
    /// Samples per dimension.
    pub samples: usize,
    pub seed: u64,
    pub eps_range: [f64; 2],
    pub bounds: JetBounds,
    pub c: CChoice,
    /// Draw `|Dψ|` equal to its bound instead of below it.
    #[serde(default)]
    pub exact_gradient: bool,
}

impl AuditSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FlowError::InvalidParameter(m));
        if self.dims.iter().any(|&n| n < 2) {
            return bad("audit dimensions must be at least 2".into());
        }
        let [lo, hi] = self.eps_range;
        if !(lo > 0.0 && lo <= hi && hi < 0.5) {
            return bad(format!("ε range must satisfy 0 < lo ≤ hi < 1/2, got [{lo}, {hi}]"));
        }
        let b = &self.bounds;
        if !(b.inf_psi > 0.0 && b.inf_psi <= b.sup_psi && b.sup_grad >= 0.0 && b.sup_hess >= 0.0) {
            return bad("jet bounds must satisfy 0 < inf ψ ≤ sup ψ and non-negative derivative bounds".into());
        }
        match self.c {
            CChoice::Admissible { factor } if !(factor >= 1.0) => bad(format!("admissible factor must be ≥ 1, got {factor}")),
            CChoice::Fixed { c } if !(c >= 0.0) => bad(format!("c must be non-negative, got {c}")),
            _ => Ok(()),
        }
    }
}

/// One audited sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord {
    pub index: usize,
    pub n: usize,
    pub eps: f64,
    pub c: f64,
    pub psi: f64,
    pub grad_norm: f64,
    pub hess_norm: f64,
    pub parts: QParts,
}

/// Summary of a batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSummary {
    pub samples: usize,
    pub rejected: usize,
    pub min_total: f64,
    pub min_pre: f64,
    pub negatives: usize,
    /// Largest `|total − Σ parts|`.
    pub max_bookkeeping: f64,
    /// Largest relative gap between the parts and the undecomposed expression.
    pub max_decomposition_gap: f64,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller.
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

/// Draws one admissible sample from stream `index`; retries within the stream
/// until the null direction is strictly the smallest.
pub fn draw_sample(spec: &AuditSpec, n: usize, index: usize) -> Result<(NullAuditSample, usize, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(index as u64);
    let b = spec.bounds;
    let mut rejected = 0;
    loop {
        let eps = rng.random_range(spec.eps_range[0]..=spec.eps_range[1]);
        let c = match spec.c {
            CChoice::Admissible { factor } => factor * admissible_c_from_bounds(&b, eps, n)?,
            CChoice::Fixed { c } => c,
        };
        let params = PinchParams::new(eps, c)?;
        let m = c.max(1.0);
        let mut upper: Vec<f64> = (1..n).map(|_| m * log_uniform(&mut rng, -1.0, 2.0)).collect();
        upper.sort_by(f64::total_cmp);
        let h0 = eps * (upper.iter().sum::<f64>() + c) / (1.0 - eps);
        if !(h0 < upper[0]) || upper[0] - h0 < COINCIDENT {
            rejected += 1;
            if rejected > 10_000 {
                return Err(FlowError::InvalidParameter(format!("no admissible curvature sample after {rejected} draws")));
            }
            continue;
        }
        let mut h = vec![h0];
        h.extend(upper);

        // Gradient tensor: free entries have at most one zero index.
        let scale = m * log_uniform(&mut rng, -3.0, 2.0);
        let mut dh = vec![0.0; n * n * n];
        let set = |dh: &mut Vec<f64>, i: usize, j: usize, k: usize, v: f64| {
            for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                dh[(a * n + b) * n + c] = v;
            }
        };
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let zeros = [i, j, k].iter().filter(|&&x| x == 0).count();
                    if zeros <= 1 {
                        let v = scale * gaussian(&mut rng);
                        set(&mut dh, i, j, k, v);
                    }
                }
            }
        }
        let ratio = eps / (1.0 - eps);
        for k in 0..n {
            let v = ratio * (1..n).map(|j| dh[(k * n + j) * n + j]).sum::<f64>();
            set(&mut dh, k, 0, 0, v);
        }

        // Ambient jet in R^{n+1}; the last axis is the normal.
        let psi = rng.random_range(b.inf_psi..=b.sup_psi);
        let mut d = DVector::from_fn(n + 1, |_, _| gaussian(&mut rng));
        let len = if spec.exact_gradient { b.sup_grad } else { b.sup_grad * rng.random::<f64>() };
        d *= len / d.norm().max(f64::MIN_POSITIVE);
        let mut d2 = DMatrix::from_fn(n + 1, n + 1, |_, _| gaussian(&mut rng));
        d2 = (&d2 + d2.transpose()) * 0.5;
        let spec_norm = SymmetricEigen::new(d2.clone()).eigenvalues.amax();
        let target = b.sup_hess * rng.random::<f64>();
        d2 *= if spec_norm > 0.0 { target / spec_norm } else { 0.0 };
        let hess_norm = SymmetricEigen::new(d2.clone()).eigenvalues.amax();

        let nu = d[n];
        let big_h: f64 = h.iter().sum();
        let psi_11 = d2[(0, 0)] - h[0] * nu;
        let lap_psi = (0..n).map(|k| d2[(k, k)]).sum::<f64>() - big_h * nu;
        let grad: Vec<f64> = (0..n).map(|k| d[k]).collect();
        let sample = NullAuditSample::new(n, params, h, dh, psi, grad, psi_11, lap_psi)?;
        return Ok((sample, rejected, d.norm(), hess_norm));
    }
}

/// Audits `spec.samples` seeded samples per dimension in parallel.
pub fn audit_batch(spec: &AuditSpec) -> Result<(Vec<AuditRecord>, AuditSummary)> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec.dims.iter().flat_map(|&n| (0..spec.samples).map(move |i| (n, i))).collect();
    let out: Vec<(AuditRecord, usize)> = jobs
        .par_iter()
        .map(|&(n, index)| {
            let (sample, rejected, grad_norm, hess_norm) = draw_sample(spec, n, index)?;
            let parts = audit_null_condition(&sample);
            let rec = AuditRecord { index, n, eps: sample.params.eps, c: sample.params.c, psi: sample.psi, grad_norm, hess_norm, parts };
            Ok((rec, rejected))
        })
        .collect::<Result<_>>()?;
    let mut summary = AuditSummary {
        samples: out.len(),
        rejected: 0,
        min_total: f64::INFINITY,
        min_pre: f64::INFINITY,
        negatives: 0,
        max_bookkeeping: 0.0,
        max_decomposition_gap: 0.0,
    };
    for (rec, rejected) in &out {
        let p = &rec.parts;
        summary.rejected += rejected;
        summary.min_total = summary.min_total.min(p.total);
        summary.min_pre = summary.min_pre.min(p.pre);
        summary.negatives += usize::from(p.total < 0.0);
        summary.max_bookkeeping = summary.max_bookkeeping.max((p.total - p.parts_sum()).abs());
        summary.max_decomposition_gap = summary.max_decomposition_gap.max(p.decomposition_gap());
    }
    Ok((out.into_iter().map(|(r, _)| r).collect(), summary))
}
