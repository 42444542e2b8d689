//! One-dimensional quadrature rules used to build sphere grids.

use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let nf = count as f64;
    for i in 0..count.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(count, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(count, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[count - 1 - i] = x;
        nodes[i] = -x;
        weights[count - 1 - i] = w;
        weights[i] = w;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(degree: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if degree == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=degree {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = degree as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Surface measure |S^n| of the unit n-sphere.
pub fn sphere_measure(n: usize) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * sphere_measure(n - 2),
    }
}

/// Exact value of ∫_0^π cos(kθ) sin^m(θ) dθ.
fn cos_sin_moment(k: usize, m: usize) -> f64 {
    // sin^m θ = (2i)^{-m} Σ_r C(m,r) (-1)^{m-r} e^{i(2r-m)θ}
    let integral = |p: i64| -> Complex64 {
        if p == 0 {
            Complex64::new(PI, 0.0)
        } else if p % 2 == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 / p as f64)
        }
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut binom = 1.0_f64;
    for r in 0..=m {
        if r > 0 {
            binom = binom * (m - r + 1) as f64 / r as f64;
        }
        let sign = if (m - r).is_multiple_of(2) { 1.0 } else { -1.0 };
        let p = 2 * r as i64 - m as i64;
        let k = k as i64;
        total += (integral(p + k) + integral(p - k)) * (0.5 * sign * binom);
    }
    let scale = Complex64::new(0.0, 2.0).powi(m as i32);
    (total / scale).re
}

/// Weights for ∫_{S^n} f dσ of a zonal function sampled at θ_j = jπ/(N-1).
///
/// The density |S^{n-1}| sin^{n-1}θ is split as sin^{n-1-m}θ · sin^mθ with
/// m ∈ {0, 1} chosen so the first factor is a cosine polynomial; the second
/// is handled by a Clenshaw–Curtis rule, whose weights are positive. Pole
/// nodes get weight zero once n ≥ 3, where the density vanishes.
pub fn zonal_weights(count: usize, n: usize) -> Vec<f64> {
    let m = if n % 2 == 1 { 0 } else { 1 };
    let base = clenshaw_curtis(count, m);
    let ring = sphere_measure(n - 1);
    let h = PI / (count - 1) as f64;
    base.iter()
        .enumerate()
        .map(|(j, w)| {
            let s = if j == 0 || j == count - 1 { 0.0 } else { (j as f64 * h).sin() };
            ring * w * s.powi((n - 1 - m) as i32)
        })
        .collect()
}

/// Interpolatory weights for ∫_0^π f(θ) sin^m θ dθ on θ_j = jπ/(N-1), exact
/// for cosine polynomials of degree ≤ N-1.
fn clenshaw_curtis(count: usize, m: usize) -> Vec<f64> {
    let last = count - 1;
    let lf = last as f64;
    let moments: Vec<f64> = (0..=last).map(|k| cos_sin_moment(k, m)).collect();
    (0..=last)
        .map(|j| {
            let cj = if j == 0 || j == last { 0.5 } else { 1.0 };
            let sum: f64 = (0..=last)
                .map(|k| {
                    let ck = if k == 0 || k == last { 0.5 } else { 1.0 };
                    ck * (PI * (k * j) as f64 / lf).cos() * moments[k]
                })
                .sum();
            2.0 / lf * cj * sum
        })
        .collect()
}
