use proptest::prelude::*;

use lebedev::kernel::{phi_direct, KernelParams};
use lebedev::quadrature::{integrate_finite, integrate_semi_infinite};
use lebedev::specfun::{bessel_k, c, gamma, hyp1f2, hyp2f3, recip_gamma};
use lebedev::transforms::{adjoint_point, forward_point, Domain, RealFunction};
use lebedev::QuadConfig;

fn few(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(few(64))]

    #[test]
    fn gamma_recurrence(re in -6.0f64..12.0, im in -15.0f64..15.0) {
        let z = c(re, im);
        prop_assume!((z - z.re.round()).norm() > 1e-3 || z.re > 0.5);
        let lhs = gamma(z + 1.0).unwrap();
        let rhs = z * gamma(z).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm());
    }

    #[test]
    fn recip_gamma_inverts_gamma(re in -6.0f64..12.0, im in -10.0f64..10.0) {
        let z = c(re, im);
        if let Ok(g) = gamma(z) {
            prop_assert!((recip_gamma(z) * g - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn hyp_parameter_cancellation(a in 0.1f64..2.0, ai in -1.0f64..1.0, b in 0.2f64..2.0, z in 0.0f64..4.0) {
        // a matching numerator/denominator pair drops out of ₂F₃
        let p = c(a, ai);
        let full = hyp2f3(p, c(0.5, 0.2), p, c(b, 0.0), c(1.3, 0.0), z).unwrap();
        let reduced = hyp1f2(c(0.5, 0.2), c(b, 0.0), c(1.3, 0.0), z).unwrap();
        prop_assert!((full.value - reduced.value).norm() < 1e-13 * (1.0 + reduced.value.norm()));
        prop_assert!(full.cancellation_ratio >= 1.0);
    }
}

proptest! {
    #![proptest_config(few(24))]

    #[test]
    fn bessel_k_symmetry_and_conjugation(re in -2.0f64..2.0, im in -6.0f64..6.0, xi in 0usize..4) {
        let cfg = QuadConfig::default();
        let x = [0.5, 1.0, 2.0, 5.0][xi];
        let mu = c(re, im);
        let a = bessel_k(mu, x, &cfg).unwrap();
        let b = bessel_k(-mu, x, &cfg).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        let cj = bessel_k(mu.conj(), x, &cfg).unwrap();
        prop_assert!((cj - a.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn kernel_even_positive_and_bounded(alpha in 0.0f64..2.0, tau in 0.0f64..10.0, x in 0.2f64..5.0) {
        let cfg = QuadConfig::default();
        let p = phi_direct(KernelParams { alpha, tau }, x, &cfg).unwrap().value;
        let m = phi_direct(KernelParams { alpha, tau: -tau }, x, &cfg).unwrap().value;
        let top = phi_direct(KernelParams { alpha, tau: 0.0 }, x, &cfg).unwrap().value;
        prop_assert_eq!(p, m);
        prop_assert!(p > 0.0);
        prop_assert!(p <= top * (1.0 + 1e-12));
    }

    #[test]
    fn quadrature_linearity(k1 in 0.5f64..3.0, k2 in 0.5f64..3.0, w in 0.0f64..4.0, s in -3.0f64..3.0) {
        let cfg = QuadConfig::default();
        let f = move |x: f64| (-k1 * x).exp() * (w * x).cos();
        let g = move |x: f64| (-k2 * x * x).exp();
        let a = integrate_semi_infinite(f, 0.0, k1, &cfg).unwrap();
        let b = integrate_semi_infinite(g, 0.0, k2, &cfg).unwrap();
        let h = integrate_semi_infinite(|x: f64| s * f(x) + g(x), 0.0, k1.min(k2), &cfg).unwrap();
        prop_assert!((h.value - s * a.value - b.value).abs() <= h.err_est + s.abs() * a.err_est + b.err_est + 1e-14);
        let i = integrate_finite(|x: f64| s * x.sin() + x * x, 0.0, 2.0, &cfg).unwrap();
        let want = s * (1.0 - 2f64.cos()) + 8.0 / 3.0;
        prop_assert!((i.value - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }
}

proptest! {
    // F_α of e^{-x} needs α clearly below 1 for the origin probe to accept it
    #![proptest_config(few(8))]

    #[test]
    fn transforms_are_linear(s in -2.0f64..2.0, alpha in 0.0f64..0.8, tau in 0.0f64..3.0, x in 0.5f64..2.0) {
        let cfg = QuadConfig::default();
        let f1 = RealFunction::exp_decay(1.0);
        let f2 = RealFunction::gauss_half();
        let sum = RealFunction::new("sum", Domain::HalfLine, 1.0, move |x| s * (-x).exp() + (-x * x).exp());
        let a = forward_point(&f1, alpha, tau, &cfg).unwrap();
        let b = forward_point(&f2, alpha, tau, &cfg).unwrap();
        let v = forward_point(&sum, alpha, tau, &cfg).unwrap();
        prop_assert!((v.value - s * a.value - b.value).abs() <= 1e-8 * (1.0 + v.value.abs()));

        let g1 = RealFunction::gaussian(1.0);
        let g2 = RealFunction::gaussian(2.0);
        let gs = RealFunction::new("gsum", Domain::RealLine, 8.0, move |t| s * (-t * t).exp() + (-2.0 * t * t).exp());
        let a = adjoint_point(&g1, alpha, x, &cfg).unwrap();
        let b = adjoint_point(&g2, alpha, x, &cfg).unwrap();
        let v = adjoint_point(&gs, alpha, x, &cfg).unwrap();
        prop_assert!((v.value - s * a.value - b.value).abs() <= 1e-8 * (1.0 + v.value.abs()));
    }
}
