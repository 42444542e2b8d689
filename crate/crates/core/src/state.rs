//! Sampled convex bodies and the initial shapes the flow starts from.

use crate::error::{FlowError, Result};
use crate::sphere::spectral::{lm_index, normalized_legendre};
use crate::sphere::{GridMode, ScalarField, SphereGrid};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Which function of the sphere describes the body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// Support function `S(z)` indexed by the outward normal `z`.
    GaussSupport,
    /// Radial function `r(z)` with `X = r z`, axisymmetric grids only.
    RadialAxisym,
}

/// A body sampled on a grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportState {
    pub gauge: Gauge,
    pub field: ScalarField,
    pub t: f64,
}

impl SupportState {
    pub fn new(gauge: Gauge, field: ScalarField, t: f64) -> Result<Self> {
        if gauge == Gauge::RadialAxisym && field.grid().mode != GridMode::Axisym {
            return Err(FlowError::GaugeMismatch("the radial gauge needs an axisym grid".into()));
        }
        Ok(SupportState { gauge, field, t })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.field.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn dim(&self) -> usize {
        self.grid().dim
    }

    /// Same grid and gauge, new samples.
    pub fn with_values(&self, values: Vec<f64>, t: f64) -> Result<Self> {
        Ok(SupportState { gauge: self.gauge, field: ScalarField::new(self.grid().clone(), values)?, t })
    }
}

/// One real spherical-harmonic mode `(l, m, amplitude)`; negative `m` selects `sin |m|φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub l: usize,
    pub m: i64,
    pub amplitude: f64,
}

/// Initial convex bodies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum InitialBody {
    Sphere {
        radius: f64,
        #[serde(default = "origin")]
        center: [f64; 3],
    },
    /// Semi-axes along `e₁`, `e₂` and the last axis. Axisymmetric grids use `a`
    /// for every transverse direction and need `a = b`.
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// `S = r + Σ amplitude · √(4π) Y_lm`, with `Y_lm` orthonormal on S².
    HarmonicSphere { radius: f64, modes: Vec<Mode> },
}

fn origin() -> [f64; 3] {
    [0.0; 3]
}

impl InitialBody {
    /// Samples the body in the requested gauge.
    pub fn sample(&self, grid: &Arc<SphereGrid>, gauge: Gauge) -> Result<SupportState> {
        self.validate(grid, gauge)?;
        let values: Vec<f64> = match gauge {
            Gauge::GaussSupport => grid.nodes.iter().map(|z| self.support(z)).collect(),
            Gauge::RadialAxisym => grid.nodes.iter().map(|z| self.radial(z)).collect(),
        };
        SupportState::new(gauge, ScalarField::new(grid.clone(), values)?, 0.0)
    }

    /// Radius of a ball about the origin containing the body.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            InitialBody::Sphere { radius, center } => radius + norm(center),
            InitialBody::Ellipsoid { a, b, c } => a.max(*b).max(*c),
            InitialBody::HarmonicSphere { radius, modes } => {
                // |√(4π) Y_lm| ≤ √(2(2l+1)) bounds the perturbation of S.
                radius + modes.iter().map(|m| m.amplitude.abs() * (2.0 * (2 * m.l + 1) as f64).sqrt()).sum::<f64>()
            }
        }
    }

    fn validate(&self, grid: &SphereGrid, gauge: Gauge) -> Result<()> {
        let axisym = grid.mode == GridMode::Axisym;
        let bad = |msg: String| Err(FlowError::InvalidParameter(msg));
        match self {
            InitialBody::Sphere { radius, center } => {
                if !(*radius > 0.0) {
                    return bad(format!("sphere radius must be positive, got {radius}"));
                }
                if axisym && (center[0] != 0.0 || center[1] != 0.0) {
                    return bad("axisymmetric runs need the sphere center on the symmetry axis".into());
                }
                if gauge == Gauge::RadialAxisym && norm(center) >= *radius {
                    return bad("the radial gauge needs the origin inside the body".into());
                }
            }
            InitialBody::Ellipsoid { a, b, c } => {
                if !(*a > 0.0 && *b > 0.0 && *c > 0.0) {
                    return bad("ellipsoid semi-axes must be positive".into());
                }
                if axisym && a != b {
                    return bad("axisymmetric runs need a = b".into());
                }
            }
            InitialBody::HarmonicSphere { radius, modes } => {
                if gauge == Gauge::RadialAxisym {
                    return Err(FlowError::GaugeMismatch("harmonic spheres are given by support functions".into()));
                }
                if !(*radius > 0.0) {
                    return bad(format!("sphere radius must be positive, got {radius}"));
                }
                for m in modes {
                    if m.m.unsigned_abs() as usize > m.l {
                        return bad(format!("mode (l={}, m={}) has |m| > l", m.l, m.m));
                    }
                    if axisym && m.m != 0 {
                        return bad("axisymmetric runs accept only m = 0 modes".into());
                    }
                    if let Some(limit) = grid.band_limit() {
                        if m.l > limit {
                            return bad(format!("mode degree {} exceeds the band limit {limit}", m.l));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn support(&self, z: &[f64; 3]) -> f64 {
        match self {
            InitialBody::Sphere { radius, center } => radius + dot(z, center),
            InitialBody::Ellipsoid { a, b, c } => ((a * z[0]).powi(2) + (b * z[1]).powi(2) + (c * z[2]).powi(2)).sqrt(),
            InitialBody::HarmonicSphere { radius, modes } => {
                radius + modes.iter().map(|m| m.amplitude * (4.0 * PI).sqrt() * real_harmonic(m.l, m.m, z)).sum::<f64>()
            }
        }
    }

    fn radial(&self, z: &[f64; 3]) -> f64 {
        match self {
            InitialBody::Sphere { radius, center } => {
                let zp = dot(z, center);
                zp + (zp * zp - dot(center, center) + radius * radius).sqrt()
            }
            InitialBody::Ellipsoid { a, b, c } => 1.0 / ((z[0] / a).powi(2) + (z[1] / b).powi(2) + (z[2] / c).powi(2)).sqrt(),
            InitialBody::HarmonicSphere { .. } => unreachable!("rejected by validate"),
        }
    }
}

/// Orthonormal real spherical harmonic on S².
pub fn real_harmonic(l: usize, m: i64, z: &[f64; 3]) -> f64 {
    let am = m.unsigned_abs() as usize;
    let p = normalized_legendre(l, z[2].clamp(-1.0, 1.0))[lm_index(l, am)];
    if m == 0 {
        return p;
    }
    let phi = z[1].atan2(z[0]);
    let trig = if m > 0 { (am as f64 * phi).cos() } else { (am as f64 * phi).sin() };
    std::f64::consts::SQRT_2 * p * trig
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}
