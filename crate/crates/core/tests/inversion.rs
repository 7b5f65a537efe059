use std::f64::consts::PI;

use lebedev::inversion::*;
use lebedev::specfun::{c, gamma_real, C64};
use lebedev::transforms::{adjoint_point, mellin, Domain, RealFunction};
use lebedev::QuadConfig;

// mpmath: the bracket at α = 0.5, τ = 1, x = 0.5 as A - (2/x) cosh(πτ/2) / (Γ(α/2) Γ(-α/2))
const INVK: (f64, f64) = (-0.287088114619518597, 1.51132920328130074);

const T_MAX: f64 = 120.0;
const STEP: f64 = 0.125;
const XS: [f64; 3] = [0.5, 1.0, 2.0];

fn cfg() -> QuadConfig {
    QuadConfig::default()
}

fn round_trip(alpha: f64, f: &RealFunction) -> Vec<(f64, f64)> {
    let ft = SampledTransform::from_mellin(f, alpha, T_MAX, STEP, &cfg()).unwrap();
    let inv = invert_forward_grid(&ft, &XS, &cfg()).unwrap();
    inv.iter().map(|v| (v.value, f.eval(v.x))).collect()
}

fn assert_relative(alpha: f64, f: &RealFunction) {
    for (got, want) in round_trip(alpha, f) {
        assert!((got - want).abs() < 1e-3 * want.abs(), "alpha {alpha}, {}: {got} vs {want}", f.name);
    }
}

#[test]
fn kernel_oracle_and_symmetry() {
    let v = inv_kernel(0.5, 1.0, 0.5).unwrap();
    assert!((v.value - INVK.0).abs() < 1e-12);
    assert!(v.cancellation_ratio >= 1.0);
    let (a, _, _) = kernel_series(0.5, c(1.0, 0.0), 0.5).unwrap();
    assert!((a.im - INVK.1).abs() < 1e-12);
    let (b, _, _) = kernel_series(0.5, c(-1.0, 0.0), 0.5).unwrap();
    assert!((a - b.conj()).norm() < 1e-14);
    // finite next to the pole of Γ(-α/2)
    assert!(inv_kernel(0.999, 2.0, 1.0).unwrap().value.is_finite());
    assert!(inv_kernel(1.5, 1.0, 1.0).is_err());
    assert!(inv_kernel(0.5, 1.0, 0.0).is_err());
}

#[test]
fn special_kernels_match_generic() {
    for (tau, x) in [(0.5, 0.7), (2.0, 1.5), (7.0, 3.0)] {
        let t = c(tau, 0.0);
        let g1 = kernel_series(1.0, t, x).unwrap().0;
        let k1 = kernel_alpha1(t, x).unwrap();
        assert!((g1 - k1).norm() < 1e-12 * (1.0 + k1.norm()), "{tau} {x}");
        let g0 = kernel_series(0.0, t, x).unwrap().0;
        let k0 = kernel_alpha0(t, x).unwrap();
        assert!((g0 - k0).norm() < 1e-12 * (1.0 + k0.norm()), "{tau} {x}");
        // conjugate pairs cancel the imaginary part of the full-line integral
        assert!((kernel_alpha0(c(-tau, 0.0), x).unwrap() - k0.conj()).norm() < 1e-14 * (1.0 + k0.norm()));
    }
    assert_eq!(kernel_alpha1(c(0.0, 0.0), 1.0).unwrap().im, 0.0);
}

#[test]
fn moment_matched_constants() {
    let f = moment_matched_test_function(0.0, TestFamily::ExpLinear).unwrap();
    assert!((f.eval(0.0) - 1.0).abs() < 1e-15);
    let f = moment_matched_test_function(0.5, TestFamily::ExpLinear).unwrap();
    let want = gamma_real(1.5).unwrap() / gamma_real(0.5).unwrap();
    assert!((f.eval(0.0) - want).abs() < 1e-15 && (want - 0.5).abs() < 1e-15);
    for (alpha, fam) in [
        (0.25, TestFamily::ExpPoly { a: 1.0 }),
        (0.5, TestFamily::ExpLinear),
        (1.0, TestFamily::ExpPoly { a: 1.0 }),
        (0.0, TestFamily::ExpPoly { a: 2.0 }),
    ] {
        let f = moment_matched_test_function(alpha, fam).unwrap();
        let m = mellin(&f, c(1.0 - alpha, 0.0), &cfg()).unwrap().value;
        assert!(m.norm() < 1e-10, "{alpha} {fam:?}: {m}");
    }
    assert!(moment_matched_test_function(1.0, TestFamily::ExpLinear).is_err());
}

#[test]
fn forward_round_trip_generic() {
    for alpha in [0.25, 0.5, 0.75] {
        let f = moment_matched_test_function(alpha, TestFamily::ExpPoly { a: 1.0 }).unwrap();
        assert_relative(alpha, &f);
    }
}

#[test]
fn forward_round_trip_alpha0() {
    let f = moment_matched_test_function(0.0, TestFamily::ExpPoly { a: 2.0 }).unwrap();
    assert_relative(0.0, &f);
}

#[test]
fn forward_round_trip_alpha1() {
    let f = moment_matched_test_function(1.0, TestFamily::ExpPoly { a: 1.5 }).unwrap();
    assert_relative(1.0, &f);
}

#[test]
fn forward_round_trip_through_zero() {
    // these families vanish at one of the sample points, where only absolute error is meaningful
    for (alpha, fam) in [
        (0.0, TestFamily::ExpLinear),
        (0.5, TestFamily::ExpLinear),
        (1.0, TestFamily::ExpPoly { a: 1.0 }),
    ] {
        let f = moment_matched_test_function(alpha, fam).unwrap();
        for (got, want) in round_trip(alpha, &f) {
            let tol = if want == 0.0 { 1e-4 } else { 1e-3 * want.abs() };
            assert!((got - want).abs() < tol, "alpha {alpha}: {got} vs {want}");
        }
    }
}

#[test]
fn forward_inversion_zero_and_linearity() {
    let taus: Vec<f64> = (0..=80).map(|k| k as f64 * 0.5).collect();
    let z = SampledTransform::new(0.5, &taus, &vec![0.0; taus.len()]).unwrap();
    assert_eq!(invert_forward(&z, 1.0, &cfg()).unwrap().value, 0.0);
    assert_eq!(invert_forward_alpha0(&SampledTransform::new(0.0, &taus, &vec![0.0; taus.len()]).unwrap(), 1.0, &cfg()).unwrap().value, 0.0);

    let f1 = moment_matched_test_function(0.5, TestFamily::ExpPoly { a: 1.0 }).unwrap();
    let f2 = moment_matched_test_function(0.5, TestFamily::ExpPoly { a: 2.0 }).unwrap();
    let a = SampledTransform::from_mellin(&f1, 0.5, T_MAX, STEP, &cfg()).unwrap();
    let b = SampledTransform::from_mellin(&f2, 0.5, T_MAX, STEP, &cfg()).unwrap();
    let sum: Vec<f64> = a.taus.iter().map(|&t| a.value(t) + 2.0 * b.value(t)).collect();
    let s = SampledTransform::new(0.5, &a.taus, &sum).unwrap();
    for x in XS {
        let va = invert_forward(&a, x, &cfg()).unwrap().value;
        let vb = invert_forward(&b, x, &cfg()).unwrap().value;
        let vs = invert_forward(&s, x, &cfg()).unwrap().value;
        let want = f1.eval(x) + 2.0 * f2.eval(x);
        assert!((vs - va - 2.0 * vb).abs() < 1e-3 * want.abs(), "{x}");
    }
}

#[test]
fn wrong_alpha_route_rejected() {
    let taus: Vec<f64> = (0..=80).map(|k| k as f64 * 0.5).collect();
    let z = SampledTransform::new(0.5, &taus, &vec![0.0; taus.len()]).unwrap();
    assert!(invert_forward_alpha0(&z, 1.0, &cfg()).is_err());
    assert!(invert_forward_alpha1(&z, 1.0, &cfg()).is_err());
    let z0 = SampledTransform::new(0.0, &taus, &vec![0.0; taus.len()]).unwrap();
    assert!(invert_forward(&z0, 1.0, &cfg()).is_err());
    assert!(SampledTransform::new(0.5, &[0.5, 1.0], &[1.0, 1.0]).is_err());
    // samples that do not decay like a transform are refused by the tail check
    assert!(SampledTransform::new(0.5, &taus, &vec![1.0; taus.len()]).is_err());
}

#[test]
fn epsilon_kernel_routes() {
    let (a, e, x, u) = (0.5, 0.5, 1.0, 2.0);
    let s = epsilon_kernel(a, e, x, u).unwrap();
    let r = epsilon_kernel_contour(a, e, x, u, 0.2, &cfg()).unwrap();
    assert!(r.converged);
    assert!((s - r.value).norm() < 1e-8 * (1.0 + s.norm()), "{s} vs {}", r.value);
    let m = epsilon_kernel(a, e, -x, u).unwrap();
    assert!((m - s.conj()).norm() < 1e-14 * (1.0 + s.norm()));
    for alpha in [1.0, 2.0] {
        assert!(epsilon_kernel(alpha, 0.5, 1.0, 1.5).unwrap().norm().is_finite());
    }
}

#[test]
fn alpha0_adjoint_kernel_reduces() {
    for t in [0.3, 1.0, 2.5] {
        let g = adjoint_kernel_term(0.0, 0.25, 1.0, t).unwrap();
        let h = adjoint_kernel_term_alpha0(0.25, 1.0, t).unwrap();
        assert!((g - h).norm() < 1e-12 * (1.0 + h.norm()), "{t}: {g} vs {h}");
    }
}

#[test]
fn gamma_product_integral() {
    let (l, r) = gamma_product_identity(1.0, 0.0, &cfg()).unwrap();
    assert!((r - 4.0 * PI).abs() < 1e-13);
    assert!((l - 4.0 * PI).abs() < 1e-6 * 4.0 * PI);
    for e in [0.5, 1.0, 2.0] {
        for x in [0.0, 0.5, 1.0, 2.0] {
            let (l, r) = gamma_product_identity(e, x, &cfg()).unwrap();
            assert!((l - r).abs() < 1e-6 * r, "{e} {x}: {l} vs {r}");
        }
    }
    assert!(gamma_product_identity(0.0, 1.0, &cfg()).is_err());
}

fn gaussian_adjoint(alpha: f64) -> impl Fn(f64) -> lebedev::Result<f64> + Sync {
    let g0 = RealFunction::gaussian(1.0);
    move |t: f64| adjoint_point(&g0, alpha, t, &cfg()).and_then(|r| r.checked("G")).map(|r| r.value)
}

#[test]
fn adjoint_round_trip() {
    let sched = EpsilonSchedule::default();
    for alpha in [0.0, 0.5, 1.0] {
        let g = gaussian_adjoint(alpha);
        let inv = AdjointInverter::new(&g, alpha).unwrap();
        for x in XS {
            let r = inv.invert(x, &sched, &cfg()).unwrap();
            let want = (-x * x).exp();
            assert!((r.value - want).abs() < 1e-2, "alpha {alpha} x {x}: {} vs {want}", r.value);
            assert!(r.monotone || r.converged, "alpha {alpha} x {x}: {:?}", r.iterates);
            let mono = r.iterates.windows(3).all(|w| (w[1] - w[0]) * (w[2] - w[1]) >= 0.0);
            assert_eq!(mono, r.monotone);
        }
    }
}

#[test]
fn regularized_integral_routes() {
    // for ε > α no continuation is needed and the direct double integral applies
    let g = gaussian_adjoint(0.5);
    let inv = AdjointInverter::new(&g, 0.5).unwrap();
    let gg = RealFunction::gaussian(1.0);
    for e in [0.75, 1.0] {
        let a = inv.regularized(e, 1.0, &cfg()).unwrap().value;
        let b = regularized_value(&gg, e, 1.0, &cfg()).unwrap().value;
        assert!((a - b).abs() < 1e-6, "{e}: {a} vs {b}");
    }
}

#[test]
fn alpha1_limit_agrees() {
    let g = gaussian_adjoint(1.0);
    let lim = invert_adjoint_alpha1_limit(&g, 1.0, &cfg()).unwrap().value;
    let eps = invert_adjoint(&g, 1.0, 1.0, &EpsilonSchedule::default(), &cfg()).unwrap().value;
    assert!((lim - eps).abs() < 1e-2);
    assert!((lim - (-1.0f64).exp()).abs() < 1e-2);
}

#[test]
fn adjoint_inversion_of_zero() {
    let z = |_t: f64| Ok(0.0);
    let r = invert_adjoint(&z, 0.5, 1.0, &EpsilonSchedule::default(), &cfg()).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(invert_adjoint_alpha1_limit(&z, 1.0, &cfg()).unwrap().value, 0.0);
}

#[test]
fn schedule_validation() {
    assert!(EpsilonSchedule::new(0.5, 0.5, 8, 1e-3).is_ok());
    assert!(EpsilonSchedule::new(1.5, 0.5, 8, 1e-3).is_err());
    assert!(EpsilonSchedule::new(0.5, 1.0, 8, 1e-3).is_err());
    assert!(EpsilonSchedule::new(0.5, 0.5, 1, 1e-3).is_err());
    let s = EpsilonSchedule::default();
    assert_eq!(s.eps(3), 0.0625);
    let g = |_t: f64| Ok(1.0);
    assert!(invert_adjoint(&g, 0.5, 0.0, &s, &cfg()).is_err());
}

#[test]
fn nonfinite_adjoint_input_rejected() {
    let g = |_t: f64| Ok(f64::NAN);
    assert!(AdjointInverter::new(&g, 0.5).is_err());
    let _unused: C64 = c(0.0, 0.0);
    let _ = Domain::HalfLine;
}
