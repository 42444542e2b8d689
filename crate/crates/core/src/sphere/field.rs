use super::grid::{GridMode, SphereGrid};
use crate::error::{FlowError, Result};
use std::sync::Arc;

/// Largest tolerated fraction of nodal energy above the band limit.
pub const ALIASING_THRESHOLD: f64 = 1e-10;

/// Real samples of a function on the nodes of a grid.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && *self.grid == *other.grid
    }
}

impl ScalarField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FlowError::FieldSize { expected: grid.len(), got: values.len() });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite { node });
        }
        Ok(ScalarField { grid, values })
    }

    /// Samples `f` at every node (given as its 3-vector representative).
    pub fn from_fn(grid: Arc<SphereGrid>, f: impl Fn(&[f64; 3]) -> f64) -> Result<Self> {
        let values = grid.nodes.iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn covariant_derivatives(&self) -> Result<Derivatives> {
        covariant_derivatives(&self.grid, &self.values)
    }

    pub fn integrate(&self) -> f64 {
        integrate(&self.grid, &self.values)
    }
}

/// Gradient and Hessian in the orthonormal frame `(e_θ, e_φ)` at every node.
///
/// In axisymmetric mode the φ-entries describe each of the `n − 1`
/// transverse directions and the mixed entries vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub grad_t: Vec<f64>,
    pub grad_p: Vec<f64>,
    pub hess_tt: Vec<f64>,
    pub hess_tp: Vec<f64>,
    pub hess_pp: Vec<f64>,
}

/// `Σ wᵢ fᵢ`.
pub fn integrate(grid: &SphereGrid, values: &[f64]) -> f64 {
    grid.weights.iter().zip(values).map(|(w, f)| w * f).sum()
}

/// Fraction of the field's quadrature energy not captured by degrees `≤ L`.
/// Always zero in axisymmetric mode.
pub fn aliasing_fraction(grid: &SphereGrid, values: &[f64]) -> f64 {
    match &grid.spectral {
        None => 0.0,
        Some(tables) => {
            let smooth = tables.synthesize_values(&tables.analyze(values));
            residual_fraction(grid, values, &smooth)
        }
    }
}

fn residual_fraction(grid: &SphereGrid, values: &[f64], smooth: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut residual = 0.0;
    for ((w, f), g) in grid.weights.iter().zip(values).zip(smooth) {
        total += w * f * f;
        residual += w * (f - g) * (f - g);
    }
    if total == 0.0 {
        0.0
    } else {
        residual / total
    }
}

/// Covariant gradient and Hessian of a field.
///
/// Full2d mode differentiates the band-limited reconstruction exactly and
/// fails with [`FlowError::GaugeResolution`] when the field is not resolved.
/// Axisym mode uses fourth-order centered differences with even reflection
/// across both poles.
pub fn covariant_derivatives(grid: &SphereGrid, values: &[f64]) -> Result<Derivatives> {
    if values.len() != grid.len() {
        return Err(FlowError::FieldSize { expected: grid.len(), got: values.len() });
    }
    match grid.mode {
        GridMode::Full2d => spectral_derivatives(grid, values),
        GridMode::Axisym => Ok(axisym_derivatives(grid, values)),
    }
}

fn spectral_derivatives(grid: &SphereGrid, values: &[f64]) -> Result<Derivatives> {
    let tables = grid.spectral.as_ref().expect("full2d grid carries spectral tables");
    let syn = tables.synthesize(&tables.analyze(values));
    let fraction = residual_fraction(grid, values, &syn.f);
    if fraction > ALIASING_THRESHOLD {
        return Err(FlowError::GaugeResolution { fraction, threshold: ALIASING_THRESHOLD });
    }
    let total = grid.len();
    let mut d = Derivatives { grad_t: syn.f_t, grad_p: vec![0.0; total], hess_tt: syn.f_tt, hess_tp: vec![0.0; total], hess_pp: vec![0.0; total] };
    for j in 0..grid.n_lat {
        let x = grid.nodes[j * grid.n_lon][2];
        let s = ((1.0 - x) * (1.0 + x)).sqrt();
        let cot = x / s;
        for i in j * grid.n_lon..(j + 1) * grid.n_lon {
            d.grad_p[i] = syn.f_p[i] / s;
            d.hess_tp[i] = (syn.f_tp[i] - cot * syn.f_p[i]) / s;
            d.hess_pp[i] = syn.f_pp[i] / (s * s) + cot * d.grad_t[i];
        }
    }
    Ok(d)
}

fn axisym_derivatives(grid: &SphereGrid, f: &[f64]) -> Derivatives {
    let count = f.len();
    let last = (count - 1) as isize;
    let h = grid.theta[1] - grid.theta[0];
    let at = |j: isize| -> f64 {
        let k = if j < 0 {
            -j
        } else if j > last {
            2 * last - j
        } else {
            j
        };
        f[k as usize]
    };
    let mut d = Derivatives {
        grad_t: vec![0.0; count],
        grad_p: vec![0.0; count],
        hess_tt: vec![0.0; count],
        hess_tp: vec![0.0; count],
        hess_pp: vec![0.0; count],
    };
    for j in 0..count {
        let k = j as isize;
        let (m2, m1, c, p1, p2) = (at(k - 2), at(k - 1), f[j], at(k + 1), at(k + 2));
        let first = if j == 0 || j == count - 1 { 0.0 } else { (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h) };
        let second = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
        d.grad_t[j] = first;
        d.hess_tt[j] = second;
        let z = grid.nodes[j];
        d.hess_pp[j] = if j == 0 || j == count - 1 { second } else { first * z[2] / z[0] };
    }
    d
}

/// Value and Cartesian `(x, y)` gradient at the north and south poles, which
/// are not nodes of the spectral grid. `None` in axisymmetric mode.
pub fn pole_jets(grid: &SphereGrid, values: &[f64]) -> Option<[(f64, [f64; 2]); 2]> {
    grid.spectral.as_ref().map(|t| t.pole_jets(&t.analyze(values)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::build_grid;
    use std::f64::consts::PI;

    #[test]
    fn constants_have_no_derivatives() {
        for (n, mode, res) in [(2, GridMode::Full2d, 16), (4, GridMode::Axisym, 65)] {
            let grid = build_grid(n, mode, res).unwrap();
            let d = covariant_derivatives(&grid, &vec![2.5; grid.len()]).unwrap();
            for v in [&d.grad_t, &d.grad_p, &d.hess_tt, &d.hess_tp, &d.hess_pp] {
                assert!(v.iter().all(|x| x.abs() < 1e-11));
            }
        }
    }

    #[test]
    fn moments() {
        let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
        let one = ScalarField::from_fn(grid.clone(), |_| 1.0).unwrap();
        assert!((one.integrate() - 4.0 * PI).abs() < 1e-12);
        let z = ScalarField::from_fn(grid.clone(), |z| z[2]).unwrap();
        assert!(z.integrate().abs() < 1e-13);
        let z2 = ScalarField::from_fn(grid, |z| z[2] * z[2]).unwrap();
        assert!((z2.integrate() - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unresolved_fields() {
        let grid = build_grid(2, GridMode::Full2d, 8).unwrap();
        let rough: Vec<f64> = grid.nodes.iter().map(|z| (z[0] - 0.3).abs()).collect();
        assert!(matches!(covariant_derivatives(&grid, &rough), Err(FlowError::GaugeResolution { .. })));
    }

    #[test]
    fn field_validation() {
        let grid = Arc::new(build_grid(2, GridMode::Axisym, 16).unwrap());
        assert!(ScalarField::new(grid.clone(), vec![1.0; 3]).is_err());
        let mut v = vec![1.0; 16];
        v[4] = f64::NAN;
        assert_eq!(ScalarField::new(grid, v), Err(FlowError::NonFinite { node: 4 }));
    }
}
