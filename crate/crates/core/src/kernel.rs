//! The kernel `Φ_{α,τ}(x) = |K_{(iτ+α)/2}(x)|²` by several independent routes, its
//! x-derivatives, and the differential-difference residual it satisfies.
//!
//! Every route returns a [`QuadResult`] whose `converged` flag the caller must honour;
//! [`phi`] is the checked shortcut used by the transforms.

use std::cell::RefCell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_breakpoints, integrate_contour_vertical, QuadConfig, QuadResult};
use crate::specfun::{bessel_k_quad, c, ln_gamma, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub alpha: f64,
    pub tau: f64,
}

impl KernelParams {
    pub fn new(alpha: f64, tau: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!("kernel needs alpha >= 0 and finite tau, got ({alpha}, {tau})")));
        }
        Ok(KernelParams { alpha, tau })
    }

    /// The Macdonald order `(α + iτ)/2`.
    pub fn order(&self) -> C64 {
        c(self.alpha / 2.0, self.tau / 2.0)
    }
}

/// Abscissa and tolerances of a vertical Mellin-Barnes contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourConfig {
    pub mu: f64,
    pub cfg: QuadConfig,
}

/// Collects the first error raised inside an integrand, which cannot return `Result`.
pub(crate) struct Trap(RefCell<Option<Error>>);

impl Trap {
    pub(crate) fn new() -> Self {
        Trap(RefCell::new(None))
    }

    pub(crate) fn take<T: Default>(&self, r: Result<T>) -> T {
        match r {
            Ok(v) => v,
            Err(e) => {
                let mut slot = self.0.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                T::default()
            }
        }
    }

    pub(crate) fn check(self) -> Result<()> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Tolerances for integrals nested inside another quadrature.
pub(crate) fn inner_cfg(cfg: &QuadConfig) -> QuadConfig {
    QuadConfig {
        rel_tol: (cfg.rel_tol * 0.01).max(1e-14),
        tail_cut_tol: cfg.tail_cut_tol.min(1e-16),
        initial_truncation: None,
        ..*cfg
    }
}

/// `K_mu(z)` as a checked value, used inside integrands.
pub(crate) fn k_value(mu: C64, z: f64, cfg: &QuadConfig) -> Result<C64> {
    Ok(bessel_k_quad(mu, z, cfg)?.checked("bessel_k")?.value)
}

/// Cut `T` for `∫_0^T g(t) K_nu(2x cosh t) dt` where `g` grows at most like `e^{growth t}`.
pub(crate) fn cosh_cut(x: f64, nu: f64, growth: f64, tail_tol: f64) -> f64 {
    let need = (1.0 / tail_tol).ln() + 5.0 + nu * nu;
    let h = |t: f64| 2.0 * x * t.cosh() - growth * t - 0.5 * (2.0 * x * t.cosh()).ln().max(0.0);
    let mut hi = 1.0;
    while h(hi) < need && hi < 700.0 {
        hi *= 1.5;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < need {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("kernel needs x > 0, got {x}")))
    }
}

/// `|K_mu(x)|²` for an arbitrary complex order.
pub(crate) fn phi_order(mu: C64, x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    check_x(x)?;
    let k = bessel_k_quad(mu, x, cfg)?;
    let m = k.value.norm();
    Ok(QuadResult {
        value: m * m,
        err_est: 2.0 * m * k.err_est + k.err_est * k.err_est,
        evals: k.evals,
        converged: k.converged,
        l1: m * m,
    })
}

/// `Φ` straight from the `K` integral. Conjugate orders give bit-identical values, so the
/// result is exactly even in `τ`.
pub fn phi_direct(p: KernelParams, x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    phi_order(p.order(), x, cfg)
}

/// Checked `Φ` value.
pub fn phi(p: KernelParams, x: f64, cfg: &QuadConfig) -> Result<f64> {
    Ok(phi_direct(p, x, cfg)?.checked("phi")?.value)
}

/// `∫ K_α(2x cosh t) e^{iτt} dt` over the real line, kept complex.
pub fn phi_integral_complex(p: KernelParams, x: f64, cfg: &QuadConfig) -> Result<QuadResult<C64>> {
    check_x(x)?;
    let inner = inner_cfg(cfg);
    let t_max = cosh_cut(x, p.alpha, 0.0, cfg.tail_cut_tol);
    let trap = Trap::new();
    let nu = c(p.alpha, 0.0);
    let res = integrate_breakpoints(
        |t: f64| {
            let k = trap.take(k_value(nu, 2.0 * x * t.cosh(), &inner)).re;
            C64::from_polar(k, p.tau * t)
        },
        &[-t_max, 0.0, t_max],
        cfg,
    );
    trap.check()?;
    Ok(res)
}

/// `Φ` from the Fourier representation `∫ K_α(2x cosh t) e^{iτt} dt` (real part).
pub fn phi_integral(p: KernelParams, x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    let r = phi_integral_complex(p, x, cfg)?;
    let converged = r.converged && r.value.im.abs() <= r.err_est + 64.0 * f64::EPSILON * r.l1;
    Ok(QuadResult {
        value: r.value.re,
        err_est: r.err_est,
        evals: r.evals,
        converged,
        l1: r.l1,
    })
}

/// `Φ` from `∫ K_{iτ}(2x cosh t) e^{αt} dt`, folded onto `t >= 0`.
pub fn phi_cosh_route(p: KernelParams, x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    check_x(x)?;
    let inner = inner_cfg(cfg);
    let t_max = cosh_cut(x, 0.0, p.alpha, cfg.tail_cut_tol);
    let trap = Trap::new();
    let mu = c(0.0, p.tau);
    let res = integrate_breakpoints(
        |t: f64| {
            let k = trap.take(k_value(mu, 2.0 * x * t.cosh(), &inner)).re;
            2.0 * k * (p.alpha * t).cosh()
        },
        &[0.0, t_max],
        cfg,
    );
    trap.check()?;
    Ok(res)
}

/// First or second x-derivative of `Φ`, differentiating the Fourier representation under the
/// integral sign with the recurrences for `K'_α` and `K''_α`.
pub fn phi_derivatives(p: KernelParams, x: f64, order: u8, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    check_x(x)?;
    if order != 1 && order != 2 {
        return Err(Error::domain(format!("derivative order must be 1 or 2, got {order}")));
    }
    let inner = inner_cfg(cfg);
    let a = p.alpha;
    let t_max = cosh_cut(x, a + 2.0, 2.0, cfg.tail_cut_tol);
    let trap = Trap::new();
    let k = |nu: f64, z: f64| trap.take(k_value(c(nu, 0.0), z, &inner)).re;
    let res = integrate_breakpoints(
        |t: f64| {
            let ch = t.cosh();
            let z = 2.0 * x * ch;
            let d = if order == 1 {
                -0.5 * (k(a - 1.0, z) + k(a + 1.0, z)) * 2.0 * ch
            } else {
                (0.25 * (k(a + 2.0, z) + k(a - 2.0, z)) + 0.5 * k(a, z)) * 4.0 * ch * ch
            };
            2.0 * d * (p.tau * t).cos()
        },
        &[0.0, t_max],
        cfg,
    );
    trap.check()?;
    Ok(res)
}

/// Residual of `Φ'' + Φ'/x + (τ/x)² Φ - Φ_{2+α} - 2Φ_α - Φ_{2-α}` with its natural scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeResidual {
    pub residual: f64,
    /// `1 + |Φ_{2+α,τ}(x)|`, the size of the largest term.
    pub scale: f64,
    pub err_est: f64,
    pub converged: bool,
}

pub fn ode_residual(p: KernelParams, x: f64, cfg: &QuadConfig) -> Result<OdeResidual> {
    let d2 = phi_derivatives(p, x, 2, cfg)?;
    let d1 = phi_derivatives(p, x, 1, cfg)?;
    let f0 = phi_direct(p, x, cfg)?;
    let fp = phi_order(c((2.0 + p.alpha) / 2.0, p.tau / 2.0), x, cfg)?;
    let fm = phi_order(c((2.0 - p.alpha) / 2.0, p.tau / 2.0), x, cfg)?;
    let t2 = (p.tau / x).powi(2);
    let residual = d2.value + d1.value / x + t2 * f0.value - fp.value - 2.0 * f0.value - fm.value;
    let err_est = d2.err_est + d1.err_est / x + (t2 + 2.0) * f0.err_est + fp.err_est + fm.err_est;
    Ok(OdeResidual {
        residual,
        scale: 1.0 + fp.value.abs(),
        err_est,
        converged: d2.converged && d1.converged && f0.converged && fp.converged && fm.converged,
    })
}

/// `Φ` from its Mellin-Barnes integral over `Re s = μ`, `μ > α`.
pub fn phi_mellin_barnes(p: KernelParams, x: f64, contour: &ContourConfig) -> Result<QuadResult<f64>> {
    check_x(x)?;
    if !(contour.mu > p.alpha) {
        return Err(Error::domain(format!(
            "Mellin-Barnes contour needs mu > alpha, got mu = {}, alpha = {}",
            contour.mu, p.alpha
        )));
    }
    let (a, tau, lx) = (p.alpha, p.tau, x.ln());
    let i = C64::i();
    let trap = Trap::new();
    let r = integrate_contour_vertical(
        |s: C64| {
            let lg = |z: C64| trap.take(ln_gamma(z));
            let l = lg((s + i * tau) * 0.5) + lg((s - i * tau) * 0.5) + lg((s + a) * 0.5) + lg((s - a) * 0.5)
                - lg(s * 0.5)
                - lg((s + 1.0) * 0.5)
                - s * lx;
            l.exp()
        },
        contour.mu,
        &[-tau.abs(), tau.abs()],
        PI / 2.0,
        &contour.cfg,
    )?;
    trap.check()?;
    let scale = 1.0 / (8.0 * PI.sqrt());
    // r.value already carries the factor i from ds = i dt.
    let v = r.value / i * scale;
    Ok(QuadResult {
        value: v.re,
        err_est: r.err_est * scale,
        evals: r.evals,
        converged: r.converged,
        l1: r.l1 * scale,
    })
}
