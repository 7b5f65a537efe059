use std::f64::consts::PI;

use lebedev::quadrature::{integrate_real_line, integrate_semi_infinite_points};
use lebedev::specfun::{beta_real, c};
use lebedev::transforms::*;
use lebedev::QuadConfig;

// mpmath oracles
const FWD_EXP_A0_T0: f64 = 2.0814860680238743085;
const FWD_EXP_A05_T1: f64 = 1.10662401149824568;
const FWD_XGAUSS_A1_T05: f64 = 0.529282385183621395;
const ADJ_GAUSS: [(f64, f64, f64); 3] = [(0.0, 1.0, 0.2887213687524337), (0.5, 1.0, 0.302415495893943097), (1.0, 0.5, 1.80604708562543095)];
const MEIJER_EXP_A0_X2: f64 = 0.604599788078072617;

fn cfg() -> QuadConfig {
    QuadConfig::default()
}

#[test]
fn forward_oracles() {
    let f = RealFunction::exp_decay(1.0);
    let r = forward(&f, 0.0, &[0.0], &cfg()).unwrap();
    assert!(r.all_converged());
    assert!((r.values[0] - FWD_EXP_A0_T0).abs() < 1e-9, "{}", r.values[0]);
    let v = forward_point(&f, 0.5, 1.0, &cfg()).unwrap().value;
    assert!((v - FWD_EXP_A05_T1).abs() < 1e-9, "{v}");
    let v = forward_point(&RealFunction::x_gauss(), 1.0, 0.5, &cfg()).unwrap().value;
    assert!((v - FWD_XGAUSS_A1_T05).abs() < 1e-9, "{v}");
}

#[test]
fn forward_zero_and_positivity() {
    let z = forward(&RealFunction::zero(Domain::HalfLine), 0.5, &[0.0, 1.0, 2.0], &cfg()).unwrap();
    assert!(z.values.iter().all(|&v| v == 0.0));
    let taus = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
    let r = forward(&RealFunction::exp_decay(1.0), 0.0, &taus, &cfg()).unwrap();
    for &v in &r.values {
        assert!(v >= 0.0 && v <= r.values[0]);
    }
    // vanishing at infinity
    assert!(r.values[5] < r.values[0] / 1e3);
}

#[test]
fn forward_rejects_bad_input() {
    let g = RealFunction::gaussian(1.0);
    assert!(forward(&g, 0.0, &[0.0], &cfg()).is_err());
    assert!(forward(&RealFunction::exp_decay(1.0), -1.0, &[0.0], &cfg()).is_err());
    assert!(forward(&RealFunction::exp_decay(1.0), 0.0, &[1.0, 0.0], &cfg()).is_err());
    // x^{-1} e^{-x} is not in L^0
    let bad = RealFunction::new("1/x", Domain::HalfLine, 1.0, |x| (-x).exp() / x);
    assert!(forward(&bad, 0.0, &[0.0], &cfg()).is_err());
}

#[test]
fn adjoint_oracles() {
    let g = RealFunction::gaussian(1.0);
    for (a, x, want) in ADJ_GAUSS {
        let v = adjoint_point(&g, a, x, &cfg()).unwrap();
        assert!(v.converged);
        assert!((v.value - want).abs() < 1e-9 * want, "{a} {x}: {} vs {want}", v.value);
    }
    let z = adjoint(&RealFunction::zero(Domain::RealLine), 0.0, &[0.5, 1.0], &cfg()).unwrap();
    assert!(z.values.iter().all(|&v| v == 0.0));
}

#[test]
fn adjoint_sees_only_even_part() {
    let even = RealFunction::new("cosh-gauss", Domain::RealLine, 4.0, |t| (-t * t).exp() * (1.0 + 0.0 * t));
    let odd_added = RealFunction::new("skewed", Domain::RealLine, 4.0, |t| (-t * t).exp() * (1.0 + t.sin()));
    let xs = [0.5, 1.0, 2.0];
    let a = adjoint(&even, 0.5, &xs, &cfg()).unwrap();
    let b = adjoint(&odd_added, 0.5, &xs, &cfg()).unwrap();
    for (u, v) in a.values.iter().zip(&b.values) {
        assert!((u - v).abs() < 1e-14 * u.abs());
    }
}

#[test]
fn fourier_gaussian_pair() {
    let h = RealFunction::gaussian(1.0);
    for tau in [0.0, 1.0, 2.5] {
        let v = fourier(&h, tau, &cfg()).unwrap();
        assert!((v.value - c(PI.sqrt() * (-tau * tau / 4.0).exp(), 0.0)).norm() < 1e-12);
        assert!(v.value.im.abs() < 1e-15);
    }
    let z = fourier(&RealFunction::zero(Domain::RealLine), 1.0, &cfg()).unwrap();
    assert_eq!(z.value, c(0.0, 0.0));
}

#[test]
fn meijer_k_values() {
    let f = RealFunction::exp_decay(1.0);
    let v = meijer_k(&f, 0.0, 0.0, &cfg()).unwrap();
    assert!((v.value - MEIJER_EXP_A0_X2).abs() < 1e-10);
    let w = meijer_k_at(&f, 0.0, 2.0, &cfg()).unwrap();
    assert!((w.value - v.value).abs() < 1e-14);
    assert_eq!(meijer_k(&RealFunction::zero(Domain::HalfLine), 0.5, 1.0, &cfg()).unwrap().value, 0.0);
    // a narrow bump at u0 samples K_α(x u0)
    let (u0, w0) = (1.5, 0.02);
    let bump = RealFunction::new("bump", Domain::HalfLine, 1.0, move |u| {
        (-((u - u0) / w0).powi(2)).exp() / (w0 * PI.sqrt())
    });
    let v = meijer_k_at(&bump, 0.5, 2.0, &cfg()).unwrap().value;
    let k = lebedev::specfun::bessel_k_real(0.5, 3.0, &cfg()).unwrap();
    assert!((v - k).abs() < 2e-3 * k, "{v} {k}");
}

#[test]
fn composition_matches_forward() {
    let taus = [0.0, 1.0, 2.0];
    let f = RealFunction::exp_decay(1.0);
    let a = forward(&f, 0.0, &taus, &cfg()).unwrap();
    let b = forward_via_composition(&f, 0.0, &taus, &cfg()).unwrap();
    for k in 0..3 {
        assert!((a.values[k] - b.values[k]).abs() < 1e-6);
    }
    let g = RealFunction::x_gauss();
    let a = forward_point(&g, 1.0, 0.5, &cfg()).unwrap().value;
    let b = forward_via_composition(&g, 1.0, &[0.5], &cfg()).unwrap().values[0];
    assert!((a - b).abs() < 1e-6);
    let z = forward_via_composition(&RealFunction::zero(Domain::HalfLine), 0.5, &taus, &cfg()).unwrap();
    assert!(z.values.iter().all(|&v| v == 0.0));
}

#[test]
fn mellin_values() {
    let f = RealFunction::exp_decay(1.0);
    assert!((mellin(&f, c(2.0, 0.0), &cfg()).unwrap().value - c(1.0, 0.0)).norm() < 1e-12);
    assert!((mellin(&f, c(0.5, 0.0), &cfg()).unwrap().value - c(PI.sqrt(), 0.0)).norm() < 1e-10);
    // ∫(1 - x/2)e^{-x} dx = 1 - Γ(2)/2
    let g = RealFunction::new("(1-x/2)e^-x", Domain::HalfLine, 1.0, |x| (1.0 - x / 2.0) * (-x).exp());
    assert!((mellin(&g, c(1.0, 0.0), &cfg()).unwrap().value - c(0.5, 0.0)).norm() < 1e-12);
    let h = RealFunction::new("(1-x)e^-x", Domain::HalfLine, 1.0, |x| (1.0 - x) * (-x).exp());
    assert!(mellin(&h, c(1.0, 0.0), &cfg()).unwrap().value.norm() < 1e-12);
}

#[test]
fn mellin_route_matches_forward() {
    let f = RealFunction::exp_decay(1.0);
    let a = forward_point(&f, 0.5, 1.0, &cfg()).unwrap().value;
    let b = forward_via_mellin(&f, 0.5, 1.0, 0.4, &cfg()).unwrap().value;
    assert!((a - b).abs() < 1e-6, "{a} {b}");
    let f2 = RealFunction::exp_decay(2.0);
    let a = forward_point(&f2, 0.0, 0.0, &cfg()).unwrap().value;
    let b = forward_via_mellin(&f2, 0.0, 0.0, 0.5, &cfg()).unwrap().value;
    assert!((a - b).abs() < 1e-6, "{a} {b}");
    let z = forward_via_mellin(&RealFunction::zero(Domain::HalfLine), 0.5, 1.0, 0.4, &cfg()).unwrap();
    assert_eq!(z.value, 0.0);
}

#[test]
fn duality() {
    // ∫ F_α g dτ = ∫ f G_α dx. F_1 of e^{-x} diverges, so α = 1 pairs with x e^{-x²}.
    let g = RealFunction::gaussian(1.0);
    let inner = QuadConfig::default().with_rel_tol(1e-12);
    for (alpha, f) in [(0.0, RealFunction::exp_decay(1.0)), (1.0, RealFunction::x_gauss())] {
        let lhs = integrate_real_line(|t: f64| forward_point(&f, alpha, t, &inner).unwrap().value * g.eval(t), 2.0, &cfg())
            .unwrap()
            .value;
        let rhs = integrate_semi_infinite_points(
            |x: f64| f.eval(x) * adjoint_point(&g, alpha, x, &inner).unwrap().value,
            0.0,
            &[1e-3, 0.1, 1.0],
            f.decay_hint,
            &cfg(),
        )
        .unwrap()
        .value;
        assert!((lhs - rhs).abs() < 1e-5, "{alpha}: {lhs} vs {rhs}");
    }
}

#[test]
fn linearity() {
    let f1 = RealFunction::exp_decay(1.0);
    let f2 = RealFunction::gauss_half();
    let sum = RealFunction::new("sum", Domain::HalfLine, 1.0, |x| 2.0 * (-x).exp() - 0.5 * (-x * x).exp());
    for tau in [0.0, 1.5] {
        let a = forward_point(&f1, 0.5, tau, &cfg()).unwrap().value;
        let b = forward_point(&f2, 0.5, tau, &cfg()).unwrap().value;
        let s = forward_point(&sum, 0.5, tau, &cfg()).unwrap().value;
        assert!((s - 2.0 * a + 0.5 * b).abs() < 1e-9);
    }
}

#[test]
fn bound_constants() {
    let b = BoundParams::new(0.0, 2.0, 1.0).unwrap();
    let e = bound_embedding_uncorrected(&b, 0.0).unwrap();
    assert!((e - (PI / 8.0).powi(2)).abs() < 1e-14);
    let want = (1.0 / 8.0 * beta_real(0.5, 0.5).unwrap()).powi(2);
    assert!((e - want).abs() < 1e-14);
    assert!(bound_adjoint_pointwise(&b, 0.0).unwrap().is_finite());
    assert!(bound_embedding(&BoundParams::new(0.6, 2.0, 1.0).unwrap(), 0.5).is_err());
    let v = bound_values(&BoundParams::new(0.6, 2.0, 1.0).unwrap(), 0.5, &cfg());
    assert!(v.embedding.is_none() && !v.violations.is_empty());
    // e^{-x} at ν = 1/2, p = 4: ‖f‖_{L^0} = 2.0815 and ‖f‖_{ν,p} = 1/2 exceed the uncorrected constant
    let b4 = BoundParams::new(0.5, 4.0, 1.0).unwrap();
    assert!(bound_embedding_uncorrected(&b4, 0.0).unwrap() * 0.5 < 2.08);
    assert!(bound_embedding(&b4, 0.0).unwrap() * 0.5 > 2.08);
    // the corrected adjoint-norm constant is twice the uncorrected one
    let b5 = BoundParams::new(0.5, 1.5, 1.0).unwrap();
    let r = bound_adjoint_norm(&b5, 0.0).unwrap() / bound_adjoint_norm_uncorrected(&b5, 0.0).unwrap();
    assert!((r - 2.0).abs() < 1e-14);
}

#[test]
fn bounds_hold_on_test_inputs() {
    let f = RealFunction::exp_decay(1.0);
    let g = RealFunction::gaussian(1.0);
    let c = cfg();
    for (nu, p, alpha) in [(0.2, 2.0, 0.5), (0.5, 4.0, 0.0)] {
        let b = BoundParams::new(nu, p, 1.0).unwrap();
        let n = norm_nu_p(&f, nu, p, &c).unwrap();
        let lhs = l_alpha_norm(&f, alpha, &c).unwrap().value;
        assert!(lhs < bound_embedding(&b, alpha).unwrap() * n);
        let lhs = forward_lp_norm(&f, alpha, p, &c).unwrap();
        assert!(lhs < bound_forward_lp(&b, alpha).unwrap() * n);
    }
    let b = BoundParams::new(0.0, 2.0, 1.0).unwrap();
    let gn = norm_lp_line(&g, 2.0, &c).unwrap();
    for x in [0.1, 1.0, 2.0] {
        let lhs = adjoint_point(&g, 0.5, x, &c).unwrap().value.abs();
        assert!(lhs < bound_adjoint_pointwise(&b, 0.5).unwrap() * x.powf(-1.25) * gn);
    }
}

#[test]
fn hilbert_schmidt() {
    let c = cfg();
    let v: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|&x| hs_inner(x, &c).unwrap().value).collect();
    assert!(v.iter().all(|&u| u > 0.0));
    assert!(v[0] > v[1] && v[1] > v[2]);
    let n = hs_norm_f0(&c).unwrap();
    assert!(n.converged);
    assert!((n.value - PI * PI / 2.0).abs() < 1e-4 * PI * PI / 2.0, "{}", n.value);
}
