//! Widths, inner and outer radii and the Steiner point of a sampled body.

use crate::curvature::{curvature_from_support, CurvatureBundle};
use crate::error::{FlowError, Result};
use crate::sphere::{pole_jets, GridMode};
use crate::state::{dot, Gauge, SupportState};
use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtentReport {
    /// `w(z) = S(z) + S(−z)` per sampled direction.
    pub width: Vec<f64>,
    pub w_max: f64,
    pub w_min: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub steiner: [f64; 3],
    pub inner_center: [f64; 3],
    pub outer_center: [f64; 3],
}

impl ExtentReport {
    /// Checks `r_out ≤ w_max/√2` and `r_in ≥ w_min/(n+2)` with slack `tol`.
    pub fn satisfies_width_bounds(&self, n: usize, tol: f64) -> bool {
        self.r_out <= self.w_max / std::f64::consts::SQRT_2 + tol && self.r_in >= self.w_min / (n as f64 + 2.0) - tol
    }
}

/// Support directions, support values and surface points used for extents.
struct Samples {
    dirs: Vec<[f64; 3]>,
    support: Vec<f64>,
    points: Vec<[f64; 3]>,
    /// Index of the antipodal direction in `dirs`.
    antipode: Vec<usize>,
}

pub fn geometry_extents(state: &SupportState) -> Result<ExtentReport> {
    let bundle = curvature_from_support(state)?;
    extents_with_bundle(state, &bundle)
}

/// As [`geometry_extents`] with a precomputed curvature bundle.
pub fn extents_with_bundle(state: &SupportState, bundle: &CurvatureBundle) -> Result<ExtentReport> {
    let grid = state.grid();
    let samples = collect_samples(state, bundle);
    let width: Vec<f64> = (0..samples.dirs.len()).map(|i| samples.support[i] + samples.support[samples.antipode[i]]).collect();
    let w_max = width.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w_min = width.iter().copied().fold(f64::INFINITY, f64::min);
    let steiner = steiner_point(state, bundle);
    let (r_in, inner_center, r_out, outer_center) = match grid.mode {
        GridMode::Full2d => {
            let (r_in, c_in) = inradius_lp(&samples.dirs, &samples.support)?;
            let (r_out, c_out) = enclosing_ball(&samples.points);
            (r_in, c_in, r_out, c_out)
        }
        GridMode::Axisym => {
            let lo = samples.points.iter().map(|p| p[2]).fold(f64::INFINITY, f64::min);
            let hi = samples.points.iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
            let inner = |c: f64| samples.dirs.iter().zip(&samples.support).map(|(z, s)| s - c * z[2]).fold(f64::INFINITY, f64::min);
            let outer = |c: f64| samples.points.iter().map(|p| p[0] * p[0] + (p[2] - c).powi(2)).fold(0.0, f64::max);
            let c_in = golden_section(|c| -inner(c), lo, hi);
            let c_out = golden_section(outer, lo, hi);
            (inner(c_in), [0.0, 0.0, c_in], outer(c_out).sqrt(), [0.0, 0.0, c_out])
        }
    };
    Ok(ExtentReport { width, w_max, w_min, r_in, r_out, steiner, inner_center, outer_center })
}

fn collect_samples(state: &SupportState, bundle: &CurvatureBundle) -> Samples {
    let grid = state.grid();
    let mut dirs = grid.nodes.clone();
    let mut points = bundle.position.clone();
    let mut support = match state.gauge {
        Gauge::GaussSupport => state.values().to_vec(),
        Gauge::RadialAxisym => radial_support(&grid.nodes, &bundle.position),
    };
    let mut antipode: Vec<usize> = (0..grid.len()).map(|i| grid.antipode(i)).collect();
    if let Some(poles) = pole_jets(grid, state.values()) {
        // The spectral grid has no nodes at ±e₃; add them from the expansion.
        let base = dirs.len();
        for (k, (value, grad)) in poles.iter().enumerate() {
            let sign = if k == 0 { 1.0 } else { -1.0 };
            dirs.push([0.0, 0.0, sign]);
            support.push(*value);
            points.push([grad[0], grad[1], sign * value]);
        }
        antipode.push(base + 1);
        antipode.push(base);
    }
    Samples { dirs, support, points, antipode }
}

/// Support values `max_X X·z` of a meridian curve, refined by a parabola
/// through the best sample and its neighbours.
fn radial_support(dirs: &[[f64; 3]], points: &[[f64; 3]]) -> Vec<f64> {
    dirs.iter()
        .map(|z| {
            let dots: Vec<f64> = points.iter().map(|p| dot(p, z)).collect();
            let (k, &best) = dots.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            if k == 0 || k + 1 == dots.len() {
                return best;
            }
            let (a, b, c) = (dots[k - 1], best, dots[k + 1]);
            let denom = a - 2.0 * b + c;
            if denom >= 0.0 {
                return best;
            }
            b - 0.125 * (c - a) * (c - a) / denom
        })
        .collect()
}

/// `(1/|S^n|) ∫ X dσ`, where `dσ` is the round measure on normals.
pub fn steiner_point(state: &SupportState, bundle: &CurvatureBundle) -> [f64; 3] {
    let grid = state.grid();
    let mut s = [0.0; 3];
    for i in 0..grid.len() {
        // In the radial gauge the normal measure is K dμ.
        let w = match state.gauge {
            Gauge::GaussSupport => grid.weights[i],
            Gauge::RadialAxisym => grid.weights[i] * bundle.gauss[i] * bundle.area_density[i],
        };
        for c in 0..3 {
            s[c] += w * bundle.position[i][c];
        }
    }
    let m = grid.measure();
    match grid.mode {
        GridMode::Full2d => [s[0] / m, s[1] / m, s[2] / m],
        GridMode::Axisym => [0.0, 0.0, s[2] / m],
    }
}

/// Minimizer of a unimodal function on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Largest ball inside `{x : x·zⱼ ≤ Sⱼ}`: returns `(radius, center)`.
///
/// Solved through its dual `min Σ Sⱼ yⱼ` subject to `Σ yⱼ zⱼ = 0`, `Σ yⱼ = 1`,
/// `y ≥ 0`; the optimal simplex multipliers are the center and radius.
pub fn inradius_lp(dirs: &[[f64; 3]], support: &[f64]) -> Result<(f64, [f64; 3])> {
    let column = |j: usize| Vector4::new(dirs[j][0], dirs[j][1], dirs[j][2], 1.0);
    let b = Vector4::new(0.0, 0.0, 0.0, 1.0);
    let lp = simplex4(dirs.len(), column, |j| support[j], b)?;
    Ok((lp[3], [lp[0], lp[1], lp[2]]))
}

/// Revised two-phase simplex for `min c·y, A y = b, y ≥ 0` with four rows
/// and `b ≥ 0`. Returns the optimal multipliers `π = c_B B⁻¹`.
fn simplex4(cols: usize, column: impl Fn(usize) -> Vector4<f64>, cost: impl Fn(usize) -> f64, b: Vector4<f64>) -> Result<Vector4<f64>> {
    const TOL: f64 = 1e-11;
    // Indices ≥ cols denote artificial columns (unit vectors).
    let col = |j: usize| if j < cols { column(j) } else { Vector4::ith(j - cols, 1.0) };
    let mut basis = [cols, cols + 1, cols + 2, cols + 3];
    let scale = (0..cols).map(|j| cost(j).abs()).fold(1.0, f64::max);

    for phase in 0..2 {
        let c = |j: usize| -> f64 {
            match (phase, j >= cols) {
                (0, true) => 1.0,
                (0, false) => 0.0,
                (_, true) => 0.0,
                (_, false) => cost(j),
            }
        };
        let mut last_obj = f64::INFINITY;
        let mut stall = 0;
        let mut converged = false;
        for _ in 0..20_000 {
            let bmat = Matrix4::from_columns(&basis.map(col));
            let binv = bmat.try_inverse().ok_or_else(|| FlowError::Optimization("singular basis".into()))?;
            let x = binv * b;
            let cb = Vector4::from(basis.map(c));
            let pi = binv.transpose() * cb;
            let obj = cb.dot(&x);
            if obj < last_obj - TOL * scale {
                stall = 0;
                last_obj = obj;
            } else {
                stall += 1;
            }
            let bland = stall > 50;
            let mut enter = None;
            let mut best = -TOL * scale;
            for j in 0..cols {
                if basis.contains(&j) {
                    continue;
                }
                let d = c(j) - pi.dot(&column(j));
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(j) = enter else {
                converged = true;
                if phase == 1 {
                    return Ok(pi);
                }
                if obj > 1e-9 {
                    return Err(FlowError::Optimization("origin not inside the convex hull of the directions".into()));
                }
                break;
            };
            let u = binv * column(j);
            let mut leave = None;
            let mut ratio = f64::INFINITY;
            for r in 0..4 {
                if u[r] > 1e-12 {
                    let q = x[r].max(0.0) / u[r];
                    if q < ratio - 1e-15 || (bland && (q - ratio).abs() <= 1e-15 && leave.is_some_and(|l: usize| basis[r] < basis[l])) {
                        ratio = q;
                        leave = Some(r);
                    }
                }
            }
            let r = leave.ok_or_else(|| FlowError::Optimization("unbounded program".into()))?;
            basis[r] = j;
        }
        if !converged {
            return Err(FlowError::Optimization("simplex iteration limit reached".into()));
        }
        // Pivot artificials left at zero level out of the basis.
        for r in 0..4 {
            if basis[r] < cols {
                continue;
            }
            let binv = Matrix4::from_columns(&basis.map(col)).try_inverse().expect("basis stays invertible");
            if let Some(j) = (0..cols).find(|&j| !basis.contains(&j) && (binv * column(j))[r].abs() > 1e-9) {
                basis[r] = j;
            }
        }
    }
    unreachable!("phase two returns from the loop")
}

/// Smallest enclosing ball `(radius, center)` by Welzl's randomized
/// incremental algorithm with a fixed shuffle seed.
pub fn enclosing_ball(points: &[[f64; 3]]) -> (f64, [f64; 3]) {
    let mut pts: Vec<Vector3<f64>> = points.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect();
    if pts.is_empty() {
        return (0.0, [0.0; 3]);
    }
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let scale = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let inside = |ball: &(Vector3<f64>, f64), p: &Vector3<f64>| (p - ball.0).norm_squared() <= ball.1 * (1.0 + 1e-12) + 1e-24 * scale * scale;
    let mut ball = (pts[0], 0.0);
    for i in 1..pts.len() {
        if inside(&ball, &pts[i]) {
            continue;
        }
        ball = (pts[i], 0.0);
        for j in 0..i {
            if inside(&ball, &pts[j]) {
                continue;
            }
            let c = 0.5 * (pts[i] + pts[j]);
            ball = (c, (pts[i] - c).norm_squared());
            for k in 0..j {
                if inside(&ball, &pts[k]) {
                    continue;
                }
                if let Some(b3) = circumball3(&pts[i], &pts[j], &pts[k]) {
                    ball = b3;
                }
                for l in 0..k {
                    if inside(&ball, &pts[l]) {
                        continue;
                    }
                    if let Some(b4) = circumball4(&pts[i], &pts[j], &pts[k], &pts[l]) {
                        ball = b4;
                    }
                }
            }
        }
    }
    (ball.1.sqrt(), [ball.0[0], ball.0[1], ball.0[2]])
}

/// Smallest ball with three points on its boundary (center in their plane).
fn circumball3(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Option<(Vector3<f64>, f64)> {
    let (u, v) = (b - a, c - a);
    let w = u.cross(&v);
    let d = 2.0 * w.norm_squared();
    if d <= 1e-30 * u.norm_squared() * v.norm_squared() {
        return None;
    }
    let center = a + (u.norm_squared() * v.cross(&w) + v.norm_squared() * w.cross(&u)) / d;
    Some((center, (a - center).norm_squared()))
}

fn circumball4(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>, d: &Vector3<f64>) -> Option<(Vector3<f64>, f64)> {
    let m = Matrix3::from_rows(&[(b - a).transpose(), (c - a).transpose(), (d - a).transpose()]) * 2.0;
    let rhs = Vector3::new((b - a).norm_squared(), (c - a).norm_squared(), (d - a).norm_squared());
    let offset = m.lu().solve(&rhs)?;
    if !offset.iter().all(|x| x.is_finite()) {
        return None;
    }
    let center = a + offset;
    Some((center, offset.norm_squared()))
}
