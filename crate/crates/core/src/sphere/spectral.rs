//! Real spherical-harmonic transform on a Gauss–Legendre × equispaced grid.
//!
//! Harmonics are orthonormal on S²: `Y_l0 = P̄_l^0(cosθ)`, and for `m ≥ 1`
//! `√2 P̄_l^m(cosθ) cos mφ` / `√2 P̄_l^m(cosθ) sin mφ`, with `P̄` the fully
//! normalized associated Legendre functions without the Condon–Shortley phase.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

/// Index of `(l, m)` in triangular storage, `0 ≤ m ≤ l`.
#[inline]
pub fn lm_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Fully normalized associated Legendre values `P̄_l^m(x)` for `0 ≤ m ≤ l ≤ l_max`.
pub fn normalized_legendre(l_max: usize, x: f64) -> Vec<f64> {
    let s = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut p = vec![0.0; lm_index(l_max, l_max) + 1];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=l_max {
        if m > 0 {
            let mf = m as f64;
            p[lm_index(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[lm_index(m - 1, m - 1)];
        }
        if m < l_max {
            p[lm_index(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * p[lm_index(m, m)];
        }
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[lm_index(l, m)] = a * (x * p[lm_index(l - 1, m)] - b * p[lm_index(l - 2, m)]);
        }
    }
    p
}

/// θ-derivatives of `P̄_l^m(cos θ)` from the values at the same point.
pub fn legendre_theta_derivative(l_max: usize, p: &[f64]) -> Vec<f64> {
    let mut dp = vec![0.0; p.len()];
    for l in 0..=l_max {
        let lf = l as f64;
        for m in 0..=l {
            let mf = m as f64;
            let up = if m < l { p[lm_index(l, m + 1)] } else { 0.0 };
            dp[lm_index(l, m)] = if m == 0 {
                -(lf * (lf + 1.0)).sqrt() * up
            } else {
                let down = p[lm_index(l, m - 1)];
                0.5 * (((lf + mf) * (lf - mf + 1.0)).sqrt() * down - ((lf - mf) * (lf + mf + 1.0)).sqrt() * up)
            };
        }
    }
    dp
}

/// Coefficients of a band-limited field: `(cos, sin)` per `(l, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub l_max: usize,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(l_max: usize) -> Self {
        let len = lm_index(l_max, l_max) + 1;
        Coefficients { l_max, cos: vec![0.0; len], sin: vec![0.0; len] }
    }

    /// Energy per degree `l` (sum of squared coefficients).
    pub fn degree_energy(&self) -> Vec<f64> {
        (0..=self.l_max).map(|l| (0..=l).map(|m| self.cos[lm_index(l, m)].powi(2) + self.sin[lm_index(l, m)].powi(2)).sum()).collect()
    }
}

/// Field values and derivatives synthesized on the grid, per node.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub f: Vec<f64>,
    pub f_t: Vec<f64>,
    pub f_tt: Vec<f64>,
    pub f_p: Vec<f64>,
    pub f_tp: Vec<f64>,
    pub f_pp: Vec<f64>,
}

pub struct SpectralTables {
    pub l_max: usize,
    pub n_lat: usize,
    pub n_lon: usize,
    /// GL nodes in cos θ (ascending x, so θ descending) and weights.
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    p: Vec<f64>,
    dp: Vec<f64>,
    d2p: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralTables {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralTables").field("l_max", &self.l_max).field("n_lat", &self.n_lat).field("n_lon", &self.n_lon).finish_non_exhaustive()
    }
}

impl SpectralTables {
    /// `x` are the ring positions cos θ_j with matching GL weights.
    pub fn new(l_max: usize, x: Vec<f64>, w: Vec<f64>, n_lon: usize) -> Self {
        let n_lat = x.len();
        let stride = lm_index(l_max, l_max) + 1;
        let mut p = Vec::with_capacity(stride * n_lat);
        let mut dp = Vec::with_capacity(stride * n_lat);
        let mut d2p = Vec::with_capacity(stride * n_lat);
        for &xj in &x {
            let s = ((1.0 - xj) * (1.0 + xj)).sqrt();
            let cot = xj / s;
            let pj = normalized_legendre(l_max, xj);
            let dpj = legendre_theta_derivative(l_max, &pj);
            for l in 0..=l_max {
                let lf = l as f64;
                for m in 0..=l {
                    let k = lm_index(l, m);
                    let mf = m as f64;
                    let d2 = -cot * dpj[k] - (lf * (lf + 1.0) - mf * mf / (s * s)) * pj[k];
                    d2p.push(d2);
                }
            }
            p.extend_from_slice(&pj);
            dp.extend_from_slice(&dpj);
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_lon);
        let inv = planner.plan_fft_inverse(n_lon);
        SpectralTables { l_max, n_lat, n_lon, x, w, p, dp, d2p, fwd, inv }
    }

    fn stride(&self) -> usize {
        lm_index(self.l_max, self.l_max) + 1
    }

    /// Projects nodal values (ring-major, `n_lat × n_lon`) onto degrees `≤ l_max`.
    pub fn analyze(&self, values: &[f64]) -> Coefficients {
        let stride = self.stride();
        let n = self.n_lon as f64;
        let mut coeffs = Coefficients::zeros(self.l_max);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_lon];
        for j in 0..self.n_lat {
            for (b, v) in buf.iter_mut().zip(&values[j * self.n_lon..(j + 1) * self.n_lon]) {
                *b = Complex64::new(*v, 0.0);
            }
            self.fwd.process(&mut buf);
            let pj = &self.p[j * stride..(j + 1) * stride];
            let wj = self.w[j];
            for m in 0..=self.l_max {
                // ∫ f cos mφ dφ and ∫ f sin mφ dφ on this ring.
                let (ic, is) = if m == 0 { (2.0 * PI * buf[0].re / n, 0.0) } else { (2.0 * PI * buf[m].re / n, -2.0 * PI * buf[m].im / n) };
                let norm = if m == 0 { 1.0 } else { SQRT_2 };
                for l in m..=self.l_max {
                    let k = lm_index(l, m);
                    let basis = wj * norm * pj[k];
                    coeffs.cos[k] += basis * ic;
                    coeffs.sin[k] += basis * is;
                }
            }
        }
        coeffs
    }

    /// Evaluates the band-limited field only.
    pub fn synthesize_values(&self, coeffs: &Coefficients) -> Vec<f64> {
        let stride = self.stride();
        let mut out = vec![0.0; self.n_lat * self.n_lon];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_lon];
        for j in 0..self.n_lat {
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            let pj = &self.p[j * stride..(j + 1) * stride];
            for m in 0..=self.l_max {
                let norm = if m == 0 { 1.0 } else { SQRT_2 };
                let (mut a, mut b) = (0.0, 0.0);
                for l in m..=self.l_max {
                    let k = lm_index(l, m);
                    a += coeffs.cos[k] * pj[k];
                    b += coeffs.sin[k] * pj[k];
                }
                buf[m] = Complex64::new(norm * a, -norm * b);
            }
            self.inv.process(&mut buf);
            for (o, b) in out[j * self.n_lon..(j + 1) * self.n_lon].iter_mut().zip(&buf) {
                *o = b.re;
            }
        }
        out
    }

    /// Evaluates the band-limited field with all first and second partials in (θ, φ).
    pub fn synthesize(&self, coeffs: &Coefficients) -> Synthesis {
        let stride = self.stride();
        let total = self.n_lat * self.n_lon;
        let mut out = Synthesis {
            f: vec![0.0; total],
            f_t: vec![0.0; total],
            f_tt: vec![0.0; total],
            f_p: vec![0.0; total],
            f_tp: vec![0.0; total],
            f_pp: vec![0.0; total],
        };
        let zero = Complex64::new(0.0, 0.0);
        let mut spec = [vec![zero; self.n_lon], vec![zero; self.n_lon], vec![zero; self.n_lon]];
        let mut work = vec![zero; self.n_lon];
        for j in 0..self.n_lat {
            let range = j * stride..(j + 1) * stride;
            let tables = [&self.p[range.clone()], &self.dp[range.clone()], &self.d2p[range]];
            for (s, table) in spec.iter_mut().zip(tables) {
                s.iter_mut().for_each(|b| *b = zero);
                for m in 0..=self.l_max {
                    let norm = if m == 0 { 1.0 } else { SQRT_2 };
                    let (mut a, mut b) = (0.0, 0.0);
                    for l in m..=self.l_max {
                        let k = lm_index(l, m);
                        a += coeffs.cos[k] * table[k];
                        b += coeffs.sin[k] * table[k];
                    }
                    s[m] = Complex64::new(norm * a, -norm * b);
                }
            }
            let ring = j * self.n_lon..(j + 1) * self.n_lon;
            // (spectrum, φ-derivative order, destination)
            let jobs: [(usize, u32, &mut Vec<f64>); 6] =
                [(0, 0, &mut out.f), (1, 0, &mut out.f_t), (2, 0, &mut out.f_tt), (0, 1, &mut out.f_p), (1, 1, &mut out.f_tp), (0, 2, &mut out.f_pp)];
            for (which, order, dest) in jobs {
                for m in 0..self.n_lon {
                    let factor = match order {
                        0 => Complex64::new(1.0, 0.0),
                        1 => Complex64::new(0.0, m as f64),
                        _ => Complex64::new(-(m as f64) * (m as f64), 0.0),
                    };
                    work[m] = spec[which][m] * factor;
                }
                self.inv.process(&mut work);
                for (o, b) in dest[ring.clone()].iter_mut().zip(&work) {
                    *o = b.re;
                }
            }
        }
        out
    }

    /// Value and Cartesian gradient (x, y components) of the field at the north
    /// and south poles, which are not grid nodes.
    pub fn pole_jets(&self, coeffs: &Coefficients) -> [(f64, [f64; 2]); 2] {
        let mut result = [(0.0, [0.0; 2]); 2];
        for (slot, x) in [(0usize, 1.0f64), (1, -1.0)] {
            let p = normalized_legendre(self.l_max, x);
            let value: f64 = (0..=self.l_max).map(|l| coeffs.cos[lm_index(l, 0)] * p[lm_index(l, 0)]).sum();
            let (mut a, mut b) = (0.0, 0.0);
            for l in 1..=self.l_max {
                let lf = l as f64;
                // dP̄_l^1/dθ at the poles reduces to ½√(l(l+1)) P̄_l^0(±1).
                let d = 0.5 * (lf * (lf + 1.0)).sqrt() * p[lm_index(l, 0)];
                a += SQRT_2 * coeffs.cos[lm_index(l, 1)] * d;
                b += SQRT_2 * coeffs.sin[lm_index(l, 1)] * d;
            }
            // At the south pole e_θ points along -(cos φ, sin φ).
            let sign = if slot == 0 { 1.0 } else { -1.0 };
            result[slot] = (value, [sign * a, sign * b]);
        }
        result
    }
}
