#![allow(clippy::needless_range_loop)]

use ascflow::curvature::curvature_from_support;
use ascflow::sphere::{build_grid, covariant_derivatives, integrate, GridMode, ScalarField};
use ascflow::state::{real_harmonic, Gauge, InitialBody};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn ellipsoid_support(x: &[f64; 3]) -> f64 {
    let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let z = [x[0] / n, x[1] / n, x[2] / n];
    (z[0] * z[0] + z[1] * z[1] + 1.44 * z[2] * z[2]).sqrt()
}

/// Second derivative of `f` along the great circle through `z` with unit tangent `v`.
fn geodesic_second_derivative(f: impl Fn(&[f64; 3]) -> f64, z: [f64; 3], v: [f64; 3]) -> f64 {
    let h = 1e-2;
    let at = |s: f64| {
        let (sn, cs) = s.sin_cos();
        f(&[cs * z[0] + sn * v[0], cs * z[1] + sn * v[1], cs * z[2] + sn * v[2]])
    };
    // Sixth-order central stencil.
    let c = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
    let mut acc = c[0] * at(0.0);
    for k in 1..4 {
        acc += c[k] * (at(k as f64 * h) + at(-(k as f64) * h));
    }
    acc / (h * h)
}

#[test]
fn first_harmonic_hessian_is_minus_the_metric() {
    let grid = build_grid(2, GridMode::Full2d, 16).unwrap();
    let f: Vec<f64> = grid.nodes.iter().map(|z| z[2]).collect();
    let d = covariant_derivatives(&grid, &f).unwrap();
    for i in 0..grid.len() {
        assert!((d.hess_tt[i] + f[i]).abs() < 1e-10);
        assert!((d.hess_pp[i] + f[i]).abs() < 1e-10);
        assert!(d.hess_tp[i].abs() < 1e-10);
    }
}

#[test]
fn laplacian_eigenvalues() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
    for (l, m) in [(1, 1), (2, -1), (4, 3), (6, 0), (8, -8)] {
        let f = ScalarField::from_fn(grid.clone(), |z| real_harmonic(l, m, z)).unwrap();
        let d = f.covariant_derivatives().unwrap();
        let expected = -((l * (l + 1)) as f64);
        for i in 0..grid.len() {
            let trace = d.hess_tt[i] + d.hess_pp[i];
            assert!((trace - expected * f.values()[i]).abs() < 1e-8, "l={l} m={m}");
        }
    }
}

#[test]
fn zonal_laplacian_in_higher_dimensions() {
    // On S^n, Δ cos θ = −n cos θ.
    for n in [2, 3, 5] {
        let grid = build_grid(n, GridMode::Axisym, 257).unwrap();
        let f: Vec<f64> = grid.nodes.iter().map(|z| z[2]).collect();
        let d = covariant_derivatives(&grid, &f).unwrap();
        for i in 0..grid.len() {
            let lap = d.hess_tt[i] + (n - 1) as f64 * d.hess_pp[i];
            assert!((lap + n as f64 * f[i]).abs() < 1e-7, "n={n} node {i}");
        }
    }
}

#[test]
fn ellipsoid_hessian_matches_great_circle_differences() {
    let grid = build_grid(2, GridMode::Full2d, 24).unwrap();
    let f: Vec<f64> = grid.nodes.iter().map(ellipsoid_support).collect();
    let d = covariant_derivatives(&grid, &f).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let i = rng.random_range(0..grid.len());
        let (z, u, w) = (grid.nodes[i], grid.e_theta[i], grid.e_phi[i]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let diag = [(u[0] + w[0]) * s, (u[1] + w[1]) * s, (u[2] + w[2]) * s];
        let huu = geodesic_second_derivative(ellipsoid_support, z, u);
        let hww = geodesic_second_derivative(ellipsoid_support, z, w);
        let hdd = geodesic_second_derivative(ellipsoid_support, z, diag);
        let huw = hdd - 0.5 * (huu + hww);
        assert!((d.hess_tt[i] - huu).abs() < 1e-8, "node {i}: {} vs {huu}", d.hess_tt[i]);
        assert!((d.hess_pp[i] - hww).abs() < 1e-8, "node {i}: {} vs {hww}", d.hess_pp[i]);
        assert!((d.hess_tp[i] - huw).abs() < 1e-8, "node {i}: {} vs {huw}", d.hess_tp[i]);
    }
}

#[test]
fn higher_dimensional_measures() {
    let grid = build_grid(3, GridMode::Axisym, 128).unwrap();
    let one = vec![1.0; grid.len()];
    assert!((integrate(&grid, &one) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
}

#[test]
fn round_sphere_curvature() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
    let b = curvature_from_support(&InitialBody::Sphere { radius: 2.0, center: [0.0; 3] }.sample(&grid, Gauge::GaussSupport).unwrap()).unwrap();
    for i in 0..b.len() {
        let l = b.principal_curvatures(i);
        assert!((l[0] - 0.5).abs() < 1e-12 && (l[1] - 0.5).abs() < 1e-12);
        assert!((b.mean[i] - 1.0).abs() < 1e-12);
        assert!((b.norm_sq[i] - 0.5).abs() < 1e-12);
        assert!((b.scalar[i] - 0.5).abs() < 1e-12);
        assert!((b.gauss[i] - 0.25).abs() < 1e-12);
    }
}

#[test]
fn translated_sphere_positions() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
    let p = [0.3, 0.0, 0.0];
    let b = curvature_from_support(&InitialBody::Sphere { radius: 2.0, center: p }.sample(&grid, Gauge::GaussSupport).unwrap()).unwrap();
    for i in 0..b.len() {
        let z = grid.nodes[i];
        for c in 0..3 {
            assert!((b.position[i][c] - (2.0 * z[c] + p[c])).abs() < 1e-12);
        }
        assert!((b.gauss[i] - 0.25).abs() < 1e-12);
    }
}

#[test]
fn ellipsoid_curvature_at_axis_ends() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 24).unwrap());
    let e = InitialBody::Ellipsoid { a: 1.0, b: 1.0, c: 1.2 };
    let b = curvature_from_support(&e.sample(&grid, Gauge::GaussSupport).unwrap()).unwrap();
    // The equator ring passes through z = e₁ at longitude zero.
    let eq = (grid.n_lat / 2) * grid.n_lon;
    assert!((grid.nodes[eq][0] - 1.0).abs() < 1e-15);
    let l = b.principal_curvatures(eq);
    assert!((l[0] - 1.0 / 1.44).abs() < 1e-10 && (l[1] - 1.0).abs() < 1e-10);
    assert!((b.mean[eq] - 1.694444444444).abs() < 1e-9);
    let f0 = b.f_sigma(0.0)[eq];
    assert!((f0 - 0.016259).abs() < 1e-6, "{f0}");

    // The pole is not a full2d node; the axisym grid has it.
    let axi = Arc::new(build_grid(2, GridMode::Axisym, 129).unwrap());
    let b = curvature_from_support(&e.sample(&axi, Gauge::GaussSupport).unwrap()).unwrap();
    let l = b.principal_curvatures(0);
    assert!((l[0] - 1.2).abs() < 1e-6 && (l[1] - 1.2).abs() < 1e-6, "{l:?}");
    assert!((b.gauss[0] - 1.44).abs() < 1e-5);
}

#[test]
fn radial_gauge_matches_support_gauge() {
    let grid = Arc::new(build_grid(2, GridMode::Axisym, 257).unwrap());
    let e = InitialBody::Ellipsoid { a: 1.0, b: 1.0, c: 1.2 };
    let radial = curvature_from_support(&e.sample(&grid, Gauge::RadialAxisym).unwrap()).unwrap();
    // At the axis ends the normal coincides with the node direction.
    for (node, expect) in [(0, [1.2, 1.2]), (128, [1.0 / 1.44, 1.0])] {
        let l = radial.principal_curvatures(node);
        assert!((l[0] - expect[0]).abs() < 1e-6 && (l[1] - expect[1]).abs() < 1e-6, "{node}: {l:?}");
    }
}

#[test]
fn convexity_loss_is_reported() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
    let f = ScalarField::from_fn(grid.clone(), |z| 0.1 + 0.5 * real_harmonic(2, 0, z)).unwrap();
    let s = ascflow::state::SupportState::new(Gauge::GaussSupport, f, 0.0).unwrap();
    assert!(matches!(curvature_from_support(&s), Err(ascflow::FlowError::ConvexityLoss { .. })));
}

#[test]
fn sphere_extents() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
    let p = [0.1, -0.2, 0.3];
    let s = InitialBody::Sphere { radius: 2.0, center: p }.sample(&grid, Gauge::GaussSupport).unwrap();
    let e = ascflow::extents::geometry_extents(&s).unwrap();
    assert!((e.w_max - 4.0).abs() < 1e-12 && (e.w_min - 4.0).abs() < 1e-12);
    assert!((e.r_in - 2.0).abs() < 1e-10 && (e.r_out - 2.0).abs() < 1e-10);
    for c in 0..3 {
        assert!((e.steiner[c] - p[c]).abs() < 1e-12);
        assert!((e.inner_center[c] - p[c]).abs() < 1e-8);
        assert!((e.outer_center[c] - p[c]).abs() < 1e-8);
    }
}

#[test]
fn ellipsoid_extents_in_every_gauge() {
    let e = InitialBody::Ellipsoid { a: 1.0, b: 1.0, c: 1.2 };
    let full = Arc::new(build_grid(2, GridMode::Full2d, 24).unwrap());
    let axi = Arc::new(build_grid(2, GridMode::Axisym, 257).unwrap());
    for (grid, gauge, tol) in [(&full, Gauge::GaussSupport, 1e-9), (&axi, Gauge::GaussSupport, 1e-9), (&axi, Gauge::RadialAxisym, 1e-6)] {
        let r = ascflow::extents::geometry_extents(&e.sample(grid, gauge).unwrap()).unwrap();
        assert!((r.w_max - 2.4).abs() < tol, "{gauge:?} {}", r.w_max);
        assert!((r.w_min - 2.0).abs() < tol, "{gauge:?} {}", r.w_min);
        assert!((r.r_out - 1.2).abs() < tol, "{gauge:?} {}", r.r_out);
        assert!((r.r_in - 1.0).abs() < tol, "{gauge:?} {}", r.r_in);
        assert!(r.r_out <= r.w_max / 2f64.sqrt());
        assert!(r.satisfies_width_bounds(2, 0.0));
        assert!(r.steiner.iter().all(|x| x.abs() < 1e-6), "{gauge:?} {:?}", r.steiner);
    }
}
