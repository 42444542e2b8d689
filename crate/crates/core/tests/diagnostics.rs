use ascflow::anisotropy::{Anisotropy, JetBounds};
use ascflow::curvature::curvature_from_support;
use ascflow::diagnostics::*;
use ascflow::extents::geometry_extents;
use ascflow::sphere::{build_grid, GridMode};
use ascflow::state::{Gauge, InitialBody, Mode};
use proptest::prelude::*;
use std::sync::Arc;

fn ellipsoid(k: f64) -> InitialBody {
    InitialBody::Ellipsoid { a: k, b: k, c: 1.2 * k }
}

#[test]
fn round_sphere_pinching() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
    let s = InitialBody::Sphere { radius: 1.0, center: [0.0; 3] }.sample(&grid, Gauge::GaussSupport).unwrap();
    let b = curvature_from_support(&s).unwrap();
    let rep = pinch_report(&b, &grid.weights, PinchParams::new(0.1, 1.0).unwrap(), &[(0.0, 2.0), (0.5, 4.0)]).unwrap();
    assert!((rep.min_w_eigenvalue - 0.7).abs() < 1e-12);
    assert!(rep.f0_max < 1e-12);
    assert!(rep.f_sigma.iter().all(|f| f.value < 1e-10));
    assert!((rep.lambda_ratio_max - 1.0).abs() < 1e-12);
    let more_c = pinch_report(&b, &grid.weights, PinchParams::new(0.1, 2.0).unwrap(), &[]).unwrap();
    assert!((rep.min_w_eigenvalue - more_c.min_w_eigenvalue - 0.1).abs() < 1e-12);
}

#[test]
fn ellipsoid_pole_pinching() {
    // Node 0 of the axisymmetric grid is the pole, where both curvatures are 1.2.
    let grid = Arc::new(build_grid(2, GridMode::Axisym, 129).unwrap());
    let s = ellipsoid(1.0).sample(&grid, Gauge::GaussSupport).unwrap();
    let b = curvature_from_support(&s).unwrap();
    let w = b.principal_curvatures(0)[0] - 0.1 * (b.mean[0] + 1.0);
    assert!((w - 0.86).abs() < 1e-6, "{w}");
}

#[test]
fn invalid_norms_are_rejected() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 8).unwrap());
    let s = InitialBody::Sphere { radius: 1.0, center: [0.0; 3] }.sample(&grid, Gauge::GaussSupport).unwrap();
    let b = curvature_from_support(&s).unwrap();
    let p = PinchParams::new(0.1, 0.0).unwrap();
    assert!(pinch_report(&b, &grid.weights, p, &[(0.6, 2.0)]).is_err());
    assert!(pinch_report(&b, &grid.weights, p, &[(0.1, 1.5)]).is_err());
    assert!(PinchParams::new(1.5, 0.0).is_err());
    assert!(PinchParams::new(0.1, -1.0).is_err());
}

#[test]
fn speed_extremes() {
    let one = Anisotropy::constant(1.0).unwrap();
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
    for r in [0.5, 2.0] {
        let s = InitialBody::Sphere { radius: r, center: [0.0; 3] }.sample(&grid, Gauge::GaussSupport).unwrap();
        let b = curvature_from_support(&s).unwrap();
        let ext = geometry_extents(&s).unwrap();
        let sp = speed_bound(&s, &b, &one, ext.r_in).unwrap();
        assert!((sp.f_max - 2f64.sqrt() / r).abs() < 1e-10);
        assert!((sp.f_max_r_in - 2f64.sqrt()).abs() < 1e-9);
    }
    let grid = Arc::new(build_grid(2, GridMode::Axisym, 129).unwrap());
    let mut products = Vec::new();
    for k in [1.0, 3.0] {
        let s = ellipsoid(k).sample(&grid, Gauge::GaussSupport).unwrap();
        let b = curvature_from_support(&s).unwrap();
        let ext = geometry_extents(&s).unwrap();
        let sp = speed_bound(&s, &b, &one, ext.r_in).unwrap();
        assert!((sp.f_max * k - (2.0 * 1.44f64).sqrt()).abs() < 1e-6);
        assert!((sp.f_min * k - (2.0 / 1.44f64).sqrt()).abs() < 1e-6);
        products.push(sp.f_max_r_in);
    }
    assert!((products[0] - products[1]).abs() < 1e-9);
}

#[test]
fn f0_is_dilation_invariant() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 24).unwrap());
    let f0 = |k: f64| curvature_from_support(&ellipsoid(k).sample(&grid, Gauge::GaussSupport).unwrap()).unwrap().f_sigma(0.0);
    for (a, b) in f0(1.0).iter().zip(f0(0.3)) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn audit_worked_example() {
    let p = PinchParams::new(0.1, 10.0).unwrap();
    let s = NullAuditSample::new(2, p, vec![2.0, 8.0], vec![0.0; 8], 1.0, vec![0.0; 2], 0.0, 0.0).unwrap();
    let q = audit_null_condition(&s);
    assert!((q.total - 28.284271247461902).abs() < 1e-10);
    assert!((q.pre - q.total).abs() < 1e-12);
}

#[test]
fn audit_rejects_broken_null_relation() {
    let p = PinchParams::new(0.1, 10.0).unwrap();
    let mut dh = vec![0.0; 8];
    dh[7] = 1.0; // h_111 alone violates h_100 = ε/(1−ε) h_111
    assert!(NullAuditSample::new(2, p, vec![2.0, 8.0], dh, 1.0, vec![0.0; 2], 0.0, 0.0).is_err());
    assert!(NullAuditSample::new(2, p, vec![2.5, 8.0], vec![0.0; 8], 1.0, vec![0.0; 2], 0.0, 0.0).is_err());
}

#[test]
fn negative_q_without_the_constant() {
    let spec = AuditSpec {
        dims: vec![2],
        samples: 500,
        seed: 3,
        eps_range: [0.05, 0.3],
        bounds: JetBounds { inf_psi: 1.0, sup_psi: 1.0, sup_grad: 1.0, sup_hess: 0.0 },
        c: CChoice::Fixed { c: 0.0 },
        exact_gradient: true,
    };
    let (records, summary) = audit_batch(&spec).unwrap();
    assert!(summary.negatives > 0);
    assert!(records.iter().all(|r| (r.grad_norm - 1.0).abs() < 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn admissible_samples_are_non_negative(seed in any::<u64>(), n in 2usize..5) {
        let spec = AuditSpec {
            dims: vec![n],
            samples: 20,
            seed,
            eps_range: [0.05, 0.3],
            bounds: JetBounds { inf_psi: 0.5, sup_psi: 2.0, sup_grad: 0.5, sup_hess: 1.0 },
            c: CChoice::Admissible { factor: 1.0 },
            exact_gradient: false,
        };
        let (records, summary) = audit_batch(&spec).unwrap();
        prop_assert!(summary.min_total >= -1e-10);
        for r in records {
            prop_assert!((r.parts.total - r.parts.parts_sum()).abs() <= 1e-12 * r.parts.scale.max(1.0));
        }
    }
}

#[test]
fn sphere_evolution_identities() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
    let s = InitialBody::Sphere { radius: 1.0, center: [0.0; 3] }.sample(&grid, Gauge::GaussSupport).unwrap();
    let rep = verify_evolution(&s, &Anisotropy::constant(1.0).unwrap(), 1e-5).unwrap();
    // ∂F/∂t = 2 and ∂H/∂t = 2√2 at r = 1.
    assert!((rep.row(Identity::SpeedPrinted).scale - 2.0).abs() < 1e-3);
    assert!((rep.row(Identity::MeanCurvature).scale - 2.0 * 2f64.sqrt()).abs() < 1e-3);
    for r in &rep.rows {
        assert!(r.relative < 1e-7, "{r:?}");
    }
    assert!(rep.row(Identity::Metric).relative < 1e-10);
}

#[test]
fn perturbed_sphere_identities() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 32).unwrap());
    let body = InitialBody::HarmonicSphere { radius: 2.0, modes: vec![Mode { l: 2, m: 0, amplitude: 0.05 }, Mode { l: 3, m: 1, amplitude: 0.05 }] };
    let s = body.sample(&grid, Gauge::GaussSupport).unwrap();
    let psi = Anisotropy::quadratic(1.0, 0.01, vec![]).unwrap();
    let rep = verify_evolution(&s, &psi, 1e-5).unwrap();
    assert!(rep.row(Identity::SupportSpeed).relative < 1e-6);
    assert!(rep.row(Identity::MeanCurvature).relative < 1e-6);
    assert!(rep.row(Identity::SpeedCompleted).relative < 1e-6);
    // The printed form leaves out the r⁻³ and transport terms.
    assert!(rep.row(Identity::SpeedPrinted).relative > 1e-2);
}

#[test]
fn verification_preconditions() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 16).unwrap());
    let s = InitialBody::Sphere { radius: 1.0, center: [0.0; 3] }.sample(&grid, Gauge::GaussSupport).unwrap();
    let one = Anisotropy::constant(1.0).unwrap();
    assert!(verify_evolution(&s, &one, 1e-3).is_err());
    let ax = Arc::new(build_grid(2, GridMode::Axisym, 65).unwrap());
    let r = InitialBody::Sphere { radius: 1.0, center: [0.0; 3] }.sample(&ax, Gauge::RadialAxisym).unwrap();
    assert!(verify_evolution(&r, &one, 1e-6).is_err());
}
