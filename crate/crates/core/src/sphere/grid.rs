use super::quadrature::{gauss_legendre, sphere_measure, zonal_weights};
use super::spectral::SpectralTables;
use crate::error::{FlowError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// How the sphere is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    /// Spherical-harmonic representation on S² with band limit `L`.
    Full2d,
    /// Functions of the colatitude only, on S^n for any `n ≥ 2`.
    Axisym,
}

/// Quadrature nodes on S^n with the data needed to differentiate fields.
///
/// Nodes are stored as 3-vectors. In axisymmetric mode they live in the
/// meridian half-plane spanned by `e₁` and the symmetry axis `e_{n+1}`, which
/// is stored in the third slot: `z = (sin θ, 0, cos θ)`.
#[derive(Debug)]
pub struct SphereGrid {
    pub dim: usize,
    pub mode: GridMode,
    /// Requested resolution: `L` in full2d mode, the colatitude count in axisym mode.
    pub resolution: usize,
    pub n_lat: usize,
    pub n_lon: usize,
    /// Colatitude of each ring, ascending.
    pub theta: Vec<f64>,
    pub nodes: Vec<[f64; 3]>,
    /// Unit tangent along increasing θ.
    pub e_theta: Vec<[f64; 3]>,
    /// Unit tangent along increasing φ (a representative transverse direction in axisym mode).
    pub e_phi: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub(crate) spectral: Option<SpectralTables>,
}

impl PartialEq for SphereGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.mode == other.mode
            && self.resolution == other.resolution
            && self.nodes == other.nodes
            && self.weights == other.weights
    }
}

/// Builds a grid on S^n.
///
/// In full2d mode `resolution` is the band limit `L`; the grid has
/// `3L/2 + 1` Gauss–Legendre rings (rounded up to odd so the equator is a ring)
/// and the smallest multiple of four `≥ 3L + 1` longitudes. In axisym mode it
/// is the number of equispaced colatitudes on `[0, π]`, poles included.
///
/// ```
/// use ascflow::sphere::{build_grid, GridMode};
/// let grid = build_grid(2, GridMode::Full2d, 16).unwrap();
/// let total: f64 = grid.weights.iter().sum();
/// assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-12);
/// ```
pub fn build_grid(n: usize, mode: GridMode, resolution: usize) -> Result<SphereGrid> {
    if n < 2 {
        return Err(FlowError::InvalidGrid(format!("dimension must be at least 2, got {n}")));
    }
    if resolution < 8 {
        return Err(FlowError::InvalidGrid(format!("resolution must be at least 8, got {resolution}")));
    }
    match mode {
        GridMode::Full2d if n != 2 => Err(FlowError::InvalidGrid(format!("full2d mode needs n = 2, got {n}; use axisym for higher dimensions"))),
        GridMode::Full2d => Ok(full2d(resolution)),
        GridMode::Axisym => Ok(axisym(n, resolution)),
    }
}

fn full2d(l: usize) -> SphereGrid {
    let mut n_lat = 3 * l / 2 + 1;
    if n_lat.is_multiple_of(2) {
        n_lat += 1;
    }
    let n_lon = (3 * l + 1).div_ceil(4) * 4;
    let (x, w) = gauss_legendre(n_lat);
    // Reverse so that rings run from north to south.
    let x: Vec<f64> = x.into_iter().rev().collect();
    let w: Vec<f64> = w.into_iter().rev().collect();
    let theta: Vec<f64> = x.iter().map(|x| x.acos()).collect();
    let dphi = 2.0 * PI / n_lon as f64;
    let total = n_lat * n_lon;
    let mut nodes = Vec::with_capacity(total);
    let mut e_theta = Vec::with_capacity(total);
    let mut e_phi = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for j in 0..n_lat {
        let (st, ct) = (((1.0 - x[j]) * (1.0 + x[j])).sqrt(), x[j]);
        for k in 0..n_lon {
            let (sp, cp) = (k as f64 * dphi).sin_cos();
            nodes.push([st * cp, st * sp, ct]);
            e_theta.push([ct * cp, ct * sp, -st]);
            e_phi.push([-sp, cp, 0.0]);
            weights.push(w[j] * dphi);
        }
    }
    let spectral = SpectralTables::new(l, x, w, n_lon);
    SphereGrid { dim: 2, mode: GridMode::Full2d, resolution: l, n_lat, n_lon, theta, nodes, e_theta, e_phi, weights, spectral: Some(spectral) }
}

fn axisym(n: usize, count: usize) -> SphereGrid {
    let h = PI / (count - 1) as f64;
    let theta: Vec<f64> = (0..count).map(|j| j as f64 * h).collect();
    let mut nodes = Vec::with_capacity(count);
    let mut e_theta = Vec::with_capacity(count);
    for j in 0..count {
        // Exact zeros and signs at the poles and equator.
        let (s, c) = if j == 0 {
            (0.0, 1.0)
        } else if j == count - 1 {
            (0.0, -1.0)
        } else if 2 * j == count - 1 {
            (1.0, 0.0)
        } else {
            theta[j].sin_cos()
        };
        nodes.push([s, 0.0, c]);
        e_theta.push([c, 0.0, -s]);
    }
    SphereGrid {
        dim: n,
        mode: GridMode::Axisym,
        resolution: count,
        n_lat: count,
        n_lon: 1,
        theta,
        nodes,
        e_theta,
        e_phi: vec![[0.0, 1.0, 0.0]; count],
        weights: zonal_weights(count, n),
        spectral: None,
    }
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Band limit in full2d mode.
    pub fn band_limit(&self) -> Option<usize> {
        self.spectral.as_ref().map(|s| s.l_max)
    }

    /// |S^n|.
    pub fn measure(&self) -> f64 {
        sphere_measure(self.dim)
    }

    /// Index of the node at `−z`.
    pub fn antipode(&self, i: usize) -> usize {
        match self.mode {
            GridMode::Axisym => self.n_lat - 1 - i,
            GridMode::Full2d => {
                let (j, k) = (i / self.n_lon, i % self.n_lon);
                (self.n_lat - 1 - j) * self.n_lon + (k + self.n_lon / 2) % self.n_lon
            }
        }
    }

    /// Factor multiplying `ρ²` in the explicit stability bound: `4/(L(L+1))`
    /// for the spectral grid, `h²` for the colatitude grid.
    pub fn spacing_factor(&self) -> f64 {
        match self.mode {
            GridMode::Full2d => {
                let l = self.resolution as f64;
                4.0 / (l * (l + 1.0))
            }
            GridMode::Axisym => {
                let h = PI / (self.n_lat - 1) as f64;
                h * h
            }
        }
    }
}
