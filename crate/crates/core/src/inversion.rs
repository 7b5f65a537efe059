//! Inversion formulas: `f` from sampled `F_α` (the `0 < α < 1` kernel and its `α = 0`, `α = 1`
//! forms), `g` from `G_α` through the ε-regularized kernel, and the beta-integral identity the
//! regularization rests on.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{hermite, pchip_slopes};
use crate::kernel::Trap;
use crate::quadrature::{
    integrate_breakpoints, integrate_contour_vertical, integrate_real_line_points, integrate_semi_infinite, QuadConfig,
    QuadResult,
};
use crate::specfun::{bessel_i, beta_real, c, gamma, hyp1f2, hyp2f3, hyp_coefficients, ln_gamma, recip_gamma, C64};
use crate::transforms::{check_grid, forward_via_mellin, Domain, RealFunction};

/// Kernel values whose hypergeometric series cancel beyond this ratio are rejected.
pub const CANCELLATION_LIMIT: f64 = 1e8;

/// Which closed form of the `F_α` inversion kernel applies.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    Generic(f64),
    Zero,
    One,
}

fn form(alpha: f64) -> Result<Form> {
    if alpha == 0.0 {
        Ok(Form::Zero)
    } else if alpha == 1.0 {
        Ok(Form::One)
    } else if alpha > 0.0 && alpha < 1.0 {
        Ok(Form::Generic(alpha))
    } else {
        Err(Error::domain(format!("inversion of F_alpha needs 0 <= alpha <= 1, got {alpha}")))
    }
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("inversion needs x > 0, got {x}")))
    }
}

/// The complex part `A(τ)` of the bracket, for complex `τ`:
/// `(x/2)^{iτ-1} ₂F₃(iτ/2, (1+iτ)/2; 1+iτ, (iτ-α)/2, (iτ+α)/2; x²) / (Γ((iτ-α)/2) Γ((iτ+α)/2))`.
///
/// Returns the value, the series cancellation ratio and an absolute error estimate.
pub fn kernel_series(alpha: f64, tau: C64, x: f64) -> Result<(C64, f64, f64)> {
    check_x(x)?;
    let it = C64::i() * tau;
    let pre = ((it - 1.0) * (x / 2.0).ln()).exp() * recip_gamma((it - alpha) * 0.5) * recip_gamma((it + alpha) * 0.5);
    let s = hyp2f3(it * 0.5, (it + 1.0) * 0.5, it + 1.0, (it - alpha) * 0.5, (it + alpha) * 0.5, x * x)?;
    Ok((pre * s.value, s.cancellation_ratio, pre.norm() * s.abs_err_est))
}

/// `A` at `α = 0`: `(iτ/2) d/dx I²_{iτ/2}(x)`.
pub fn kernel_alpha0(tau: C64, x: f64) -> Result<C64> {
    let nu = C64::i() * tau * 0.5;
    let d = bessel_i(nu - 1.0, x)? + bessel_i(nu + 1.0, x)?;
    Ok(nu * bessel_i(nu, x)? * d)
}

/// `A` at `α = 1`: `((iτ-1)/2) I²_{(iτ-1)/2}(x) + ((iτ+1)/2) I²_{(iτ+1)/2}(x)`.
pub fn kernel_alpha1(tau: C64, x: f64) -> Result<C64> {
    let it = C64::i() * tau;
    let (n1, n2) = ((it - 1.0) * 0.5, (it + 1.0) * 0.5);
    let (i1, i2) = (bessel_i(n1, x)?, bessel_i(n2, x)?);
    Ok(n1 * i1 * i1 + n2 * i2 * i2)
}

fn kernel_a(f: Form, tau: C64, x: f64) -> Result<(C64, f64, f64)> {
    match f {
        Form::Generic(a) => kernel_series(a, tau, x),
        Form::Zero => Ok((kernel_alpha0(tau, x)?, 1.0, 0.0)),
        Form::One => Ok((kernel_alpha1(tau, x)?, 1.0, 0.0)),
    }
}

/// Coefficient of `cosh(πτ/2)` in the bracket: `-(2/x) / (Γ(α/2) Γ(-α/2))`.
fn correction(alpha: f64, x: f64) -> f64 {
    (-2.0 / x * recip_gamma(c(alpha / 2.0, 0.0)) * recip_gamma(c(-alpha / 2.0, 0.0))).re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseKernelValue {
    /// `Re A(τ) + c_α cosh(πτ/2)`, the real bracket integrated against `F_α`.
    pub value: f64,
    pub cancellation_ratio: f64,
    pub err_est: f64,
}

/// The real bracket of the `F_α` inversion formula at one `(τ, x)`. `α = 0` and `α = 1` use
/// their Bessel-product forms.
pub fn inv_kernel(alpha: f64, tau: f64, x: f64) -> Result<InverseKernelValue> {
    let f = form(alpha)?;
    check_x(x)?;
    let (a, ratio, err) = kernel_a(f, c(tau, 0.0), x)?;
    if ratio > CANCELLATION_LIMIT {
        return Err(Error::Cancellation {
            ratio,
            limit: CANCELLATION_LIMIT,
        });
    }
    Ok(InverseKernelValue {
        value: a.re + correction(alpha, x) * (PI * tau / 2.0).cosh(),
        cancellation_ratio: ratio,
        err_est: err,
    })
}

/// `ln cosh(z)` for `z >= 0` without overflow.
fn ln_cosh(z: f64) -> f64 {
    let z = z.abs();
    z + (-2.0 * z).exp().ln_1p() - std::f64::consts::LN_2
}

/// Exponents `a` of the tail basis `|Γ(a + iτ/2)|²` of a moment-matched `F_α`.
pub fn tail_exponents(alpha: f64) -> Result<Vec<f64>> {
    Ok(match form(alpha)? {
        Form::Generic(a) => vec![-a / 2.0, a / 2.0 - 1.0, -a / 2.0 - 1.0, a / 2.0 - 2.0, -a / 2.0 - 2.0],
        Form::Zero => vec![-1.0, -2.0, -3.0, -4.0],
        Form::One => vec![-0.5, -1.5, -2.5, -3.5],
    })
}

/// `ln(|Γ(a + iτ/2)|² cosh(πτ/2))`.
fn ln_basis(a: f64, tau: f64) -> Result<f64> {
    Ok(2.0 * ln_gamma(c(a, tau / 2.0))?.re + ln_cosh(PI * tau / 2.0))
}

/// `F_α(τ) ≈ Σ c_a |Γ(a + iτ/2)|²` beyond the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub exponents: Vec<f64>,
    pub coefs: Vec<f64>,
    pub window: (f64, f64),
    /// Relative least-squares residual on the fit window.
    pub residual: f64,
}

/// Fits above this relative residual mean the data do not follow the tail model.
pub const TAIL_RESIDUAL_LIMIT: f64 = 1e-3;

impl TailModel {
    /// Least-squares fit on `[T/2, T]` to values scaled by `cosh(πτ/2)`.
    pub fn fit(alpha: f64, taus: &[f64], scaled: &[f64]) -> Result<Self> {
        let exps = tail_exponents(alpha)?;
        let t_end = *taus.last().ok_or_else(|| Error::domain("empty grid"))?;
        let idx: Vec<usize> = (0..taus.len()).filter(|&k| taus[k] >= t_end / 2.0).collect();
        if idx.len() < exps.len() + 4 || !(t_end >= 8.0) {
            return Err(Error::TailModel(format!(
                "the last grid octave needs at least {} points and T >= 8 (got {} points, T = {t_end})",
                exps.len() + 4,
                idx.len()
            )));
        }
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&k| scaled[k]));
        let window = (taus[idx[0]], t_end);
        let ynorm = y.norm();
        if ynorm == 0.0 {
            return Ok(TailModel {
                coefs: vec![0.0; exps.len()],
                exponents: exps,
                window,
                residual: 0.0,
            });
        }
        let mut m = DMatrix::<f64>::zeros(idx.len(), exps.len());
        for (r, &k) in idx.iter().enumerate() {
            for (j, &a) in exps.iter().enumerate() {
                m[(r, j)] = ln_basis(a, taus[k])?.exp();
            }
        }
        // relative weights: the model is asymptotic, so the far end of the window matters most
        let mut y = y;
        for r in 0..idx.len() {
            let w = 1.0 / y[r].abs().max(f64::MIN_POSITIVE);
            m.row_mut(r).scale_mut(w);
            y[r] *= w;
        }
        let ynorm = y.norm();
        let scales: Vec<f64> = (0..exps.len()).map(|j| m.column(j).norm()).collect();
        for (j, s) in scales.iter().enumerate() {
            m.column_mut(j).scale_mut(1.0 / s);
        }
        let sol = m
            .clone()
            .svd(true, true)
            .solve(&y, 1e-14)
            .map_err(|e| Error::TailModel(e.to_string()))?;
        let residual = (&m * &sol - &y).norm() / ynorm;
        let coefs = sol.iter().zip(&scales).map(|(v, s)| v / s).collect();
        let model = TailModel {
            exponents: exps,
            coefs,
            window,
            residual,
        };
        if !(residual <= TAIL_RESIDUAL_LIMIT) {
            return Err(Error::TailModel(format!(
                "sampled transform does not follow the tail model (relative residual {residual:e}); \
                 check the moment condition of the input"
            )));
        }
        Ok(model)
    }

    /// `F(τ) cosh(πτ/2)` from the model.
    pub fn scaled_value(&self, tau: f64) -> f64 {
        self.exponents
            .iter()
            .zip(&self.coefs)
            .map(|(&a, &k)| if k == 0.0 { 0.0 } else { k * ln_basis(a, tau).map(f64::exp).unwrap_or(f64::NAN) })
            .sum()
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.scaled_value(tau) * (-ln_cosh(PI * tau / 2.0)).exp()
    }

    /// Analytic continuation `Σ c_a Γ(a + iτ/2) Γ(a - iτ/2)` to complex `τ`.
    pub fn value_complex(&self, tau: C64) -> Result<C64> {
        let h = C64::i() * tau * 0.5;
        let mut s = c(0.0, 0.0);
        for (&a, &k) in self.exponents.iter().zip(&self.coefs) {
            if k != 0.0 {
                s += k * (ln_gamma(h + a)? + ln_gamma(a - h)?).exp();
            }
        }
        Ok(s)
    }
}

/// Samples of an even `F_α` on `[0, T]` with a tail model beyond `T`.
///
/// The interpolated quantity is `F(τ) cosh(πτ/2)`, which is even and varies slowly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledTransform {
    pub alpha: f64,
    pub taus: Vec<f64>,
    pub scaled: Vec<f64>,
    slopes: Vec<f64>,
    pub tail: TailModel,
}

impl SampledTransform {
    pub fn new(alpha: f64, taus: &[f64], values: &[f64]) -> Result<Self> {
        check_grid(taus)?;
        if taus.len() != values.len() {
            return Err(Error::domain("abscissas and values differ in length"));
        }
        if taus[0] != 0.0 {
            return Err(Error::domain("sampled F must start at tau = 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sampled F has non-finite values"));
        }
        let scaled: Vec<f64> = taus.iter().zip(values).map(|(&t, &v)| v * ln_cosh(PI * t / 2.0).exp()).collect();
        let tail = TailModel::fit(alpha, taus, &scaled)?;
        let mut slopes = pchip_slopes(taus, &scaled);
        // evenness
        slopes[0] = 0.0;
        Ok(SampledTransform {
            alpha,
            taus: taus.to_vec(),
            scaled,
            slopes,
            tail,
        })
    }

    /// Samples `F_α f` by the Mellin route on `0, step, ..., t_max`. `f` must carry a
    /// closed-form Mellin transform.
    pub fn from_mellin(f: &RealFunction, alpha: f64, t_max: f64, step: f64, cfg: &QuadConfig) -> Result<Self> {
        let m = f
            .moment_data
            .as_ref()
            .ok_or_else(|| Error::domain(format!("{} has no closed-form Mellin transform", f.name)))?;
        if !(step > 0.0) || !(t_max > step) {
            return Err(Error::domain("need 0 < step < t_max"));
        }
        let hi = 1.0 - alpha;
        let lo = m.strip_lo.max(hi - 2.0);
        if !(lo < hi) {
            return Err(Error::domain(format!("no Mellin abscissa for {} with alpha = {alpha}", f.name)));
        }
        let nu = 0.5 * (lo + hi);
        let n = (t_max / step).round() as usize;
        let taus: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
        let vals: Result<Vec<f64>> = taus
            .par_iter()
            .map(|&t| Ok(forward_via_mellin(f, alpha, t, nu, cfg)?.checked("forward_via_mellin")?.value))
            .collect();
        SampledTransform::new(alpha, &taus, &vals?)
    }

    pub fn t_max(&self) -> f64 {
        *self.taus.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.scaled.iter().all(|&v| v == 0.0)
    }

    /// `F(τ) cosh(πτ/2)`.
    pub fn scaled_at(&self, tau: f64) -> f64 {
        let t = tau.abs();
        if t <= self.t_max() {
            hermite(&self.taus, &self.scaled, &self.slopes, t)
        } else {
            self.tail.scaled_value(t)
        }
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.scaled_at(tau) * (-ln_cosh(PI * tau / 2.0)).exp()
    }
}

/// `f(x)` recovered from sampled `F_α`, with the pieces of the τ-integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionValue {
    pub x: f64,
    pub value: f64,
    pub err_est: f64,
    /// Quadrature over the sampled range `[0, T]`.
    pub direct: f64,
    /// The non-oscillating `cosh(πτ/2)` part beyond `T`.
    pub smooth_tail: f64,
    /// The oscillating part beyond `T`, integrated on the ray `τ = T - iy`.
    pub chirp_tail: f64,
    pub converged: bool,
}

/// Above this τ the smooth tail uses the leading Stirling term.
const STIRLING_TAU: f64 = 1e4;

fn invert_any(ft: &SampledTransform, x: f64, cfg: &QuadConfig) -> Result<InversionValue> {
    check_x(x)?;
    let f = form(ft.alpha)?;
    if ft.is_zero() {
        return Ok(InversionValue {
            x,
            value: 0.0,
            err_est: 0.0,
            direct: 0.0,
            smooth_tail: 0.0,
            chirp_tail: 0.0,
            converged: true,
        });
    }
    let corr = correction(ft.alpha, x);
    let t_end = ft.t_max();
    let trap = Trap::new();
    let bracket = |tau: f64| -> Result<f64> {
        let (a, ratio, _) = kernel_a(f, c(tau, 0.0), x)?;
        if ratio > CANCELLATION_LIMIT {
            return Err(Error::Cancellation {
                ratio,
                limit: CANCELLATION_LIMIT,
            });
        }
        Ok(a.re * (-ln_cosh(PI * tau / 2.0)).exp() + corr)
    };
    let direct = integrate_breakpoints(|t: f64| trap.take(bracket(t)) * ft.scaled_at(t), &ft.taus, cfg);

    // corr ∫_T^∞ cosh(πτ/2) F dτ with τ = T e^v, then the Stirling form beyond STIRLING_TAU
    let mut smooth = QuadResult {
        value: 0.0,
        err_est: 0.0,
        evals: 0,
        converged: true,
        l1: 0.0,
    };
    if corr != 0.0 {
        let tb = STIRLING_TAU.max(10.0 * t_end);
        let v_end = (tb / t_end).ln();
        let pts: Vec<f64> = (0..=8).map(|k| v_end * k as f64 / 8.0).collect();
        smooth = integrate_breakpoints(
            |v: f64| {
                let tau = t_end * v.exp();
                corr * tau * ft.tail.scaled_value(tau)
            },
            &pts,
            cfg,
        );
        let far: f64 = ft
            .tail
            .exponents
            .iter()
            .zip(&ft.tail.coefs)
            .map(|(&a, &k)| k * 2.0 * PI * (tb / 2.0).powf(2.0 * a) / (-2.0 * a))
            .sum();
        smooth.value += corr * far;
    }

    let decay = (t_end / x).ln().max(0.5);
    let chirp = integrate_semi_infinite(
        |y: f64| {
            let tau = c(t_end, -y);
            let a = trap.take(kernel_a(f, tau, x)).0;
            let m = trap.take(ft.tail.value_complex(tau));
            (a * m * c(0.0, -1.0)).re
        },
        0.0,
        decay,
        cfg,
    )?;
    trap.check()?;
    let k = 2.0 / PI;
    Ok(InversionValue {
        x,
        value: k * (direct.value + smooth.value + chirp.value),
        err_est: k * (direct.err_est + smooth.err_est + chirp.err_est),
        direct: k * direct.value,
        smooth_tail: k * smooth.value,
        chirp_tail: k * chirp.value,
        converged: direct.converged && smooth.converged && chirp.converged,
    })
}

fn need_alpha(ft: &SampledTransform, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!("{what}, but the sampled transform has alpha = {}", ft.alpha)))
    }
}

/// `f(x) = (1/π) ∫ [Re A(τ) + c_α cosh(πτ/2)] F_α(τ) dτ` for `0 < α < 1`. The caller asserts
/// the moment condition `f*(1 - α) = 0`.
pub fn invert_forward(ft: &SampledTransform, x: f64, cfg: &QuadConfig) -> Result<InversionValue> {
    need_alpha(ft, ft.alpha > 0.0 && ft.alpha < 1.0, "invert_forward needs 0 < alpha < 1")?;
    invert_any(ft, x, cfg)
}

/// `f(x) = (i/2π) ∫ τ (d/dx) I²_{iτ/2}(x) F_0(τ) dτ`; needs `∫ f = 0`.
pub fn invert_forward_alpha0(ft: &SampledTransform, x: f64, cfg: &QuadConfig) -> Result<InversionValue> {
    need_alpha(ft, ft.alpha == 0.0, "invert_forward_alpha0 needs alpha = 0")?;
    invert_any(ft, x, cfg)
}

/// The `α = 1` formula with kernel `Re A_1(τ) + cosh(πτ/2)/(πx)`; needs `f*(0) = 0`.
pub fn invert_forward_alpha1(ft: &SampledTransform, x: f64, cfg: &QuadConfig) -> Result<InversionValue> {
    need_alpha(ft, ft.alpha == 1.0, "invert_forward_alpha1 needs alpha = 1")?;
    invert_any(ft, x, cfg)
}

/// Inversion on a grid of `x`, choosing the formula from `ft.alpha`.
pub fn invert_forward_grid(ft: &SampledTransform, xs: &[f64], cfg: &QuadConfig) -> Result<Vec<InversionValue>> {
    check_grid(xs)?;
    xs.par_iter().map(|&x| invert_any(ft, x, cfg)).collect()
}

/// Geometric ε-sequence `ε_k = eps0 ratio^k`, `k < max_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub eps0: f64,
    pub ratio: f64,
    pub max_steps: usize,
    pub conv_tol: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            eps0: 0.5,
            ratio: 0.5,
            max_steps: 8,
            conv_tol: 1e-3,
        }
    }
}

impl EpsilonSchedule {
    pub fn new(eps0: f64, ratio: f64, max_steps: usize, conv_tol: f64) -> Result<Self> {
        let s = EpsilonSchedule {
            eps0,
            ratio,
            max_steps,
            conv_tol,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0 <= 1.0) || !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::domain("epsilon schedule needs 0 < eps0 <= 1 and 0 < ratio < 1"));
        }
        if self.max_steps < 2 || !(self.conv_tol > 0.0) {
            return Err(Error::domain("epsilon schedule needs max_steps >= 2 and conv_tol > 0"));
        }
        Ok(())
    }

    pub fn eps(&self, k: usize) -> f64 {
        self.eps0 * self.ratio.powi(k as i32)
    }
}

fn check_eps_x(eps: f64, x: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("need eps > 0, got {eps}")));
    }
    if !(x != 0.0 && x.is_finite()) {
        return Err(Error::domain(format!("need finite x != 0, got {x}")));
    }
    Ok(())
}

/// `Ŝ_{α,ε}(u, x)` in closed form: two conjugate-parameter `₂F₃` terms in `1/u²`.
pub fn epsilon_kernel(alpha: f64, eps: f64, x: f64, u: f64) -> Result<C64> {
    check_eps_x(eps, x)?;
    if !(u > 0.0) {
        return Err(Error::domain(format!("epsilon_kernel needs u > 0, got {u}")));
    }
    let term = |xx: f64| -> Result<C64> {
        let ix = c(0.0, xx);
        let e = ix + eps;
        let pre = 2.0
            * (-e * (2.0 * u).ln()).exp()
            * gamma(e)?
            * gamma(-ix)?
            * recip_gamma((e + alpha) * 0.5)
            * recip_gamma((e - alpha) * 0.5);
        let s = hyp2f3(e * 0.5, (e + 1.0) * 0.5, ix + 1.0, (e + alpha) * 0.5, (e - alpha) * 0.5, 1.0 / (u * u))?;
        Ok(pre * s.value)
    };
    Ok(term(x)? + term(-x)?)
}

/// `Ŝ_{α,ε}(u, x)` from its Mellin-Barnes integral over `Re s = mu_half`, `0 < mu_half < ε/2`.
pub fn epsilon_kernel_contour(alpha: f64, eps: f64, x: f64, u: f64, mu_half: f64, cfg: &QuadConfig) -> Result<QuadResult<C64>> {
    check_eps_x(eps, x)?;
    if !(mu_half > 0.0 && mu_half < eps / 2.0) || !(u > 0.0) {
        return Err(Error::domain("contour needs 0 < mu_half < eps/2 and u > 0"));
    }
    let trap = Trap::new();
    let (ep, em) = (c(eps, x) * 0.5, c(eps, -x) * 0.5);
    let lu = u.ln();
    let r = integrate_contour_vertical(
        |s: C64| {
            let lg = |z: C64| trap.take(ln_gamma(z));
            let l = lg(s) + lg(s + 0.5) + lg(ep - s) + lg(em - s) - 2.0 * s * lu;
            l.exp() * recip_gamma(s + alpha / 2.0) * recip_gamma(s - alpha / 2.0)
        },
        mu_half,
        &[-x.abs() / 2.0, x.abs() / 2.0],
        PI,
        cfg,
    )?;
    trap.check()?;
    let k = 1.0 / (2.0 * PI * PI.sqrt());
    Ok(QuadResult {
        value: r.value / C64::i() * k,
        err_est: r.err_est * k,
        evals: r.evals,
        converged: r.converged,
        l1: r.l1 * k,
    })
}

/// `Γ(-ix) / (Γ(ε-ix) Γ((ε+α+ix)/2) Γ((ε+ix-α)/2))`.
fn adjoint_prefactor(alpha: f64, eps: f64, x: f64) -> Result<C64> {
    let ix = c(0.0, x);
    let e = ix + eps;
    let g = if eps == 0.0 { c(1.0, 0.0) } else { gamma(-ix)? * recip_gamma(c(eps, -x)) };
    Ok(g * recip_gamma((e + alpha) * 0.5) * recip_gamma((e - alpha) * 0.5))
}

/// First term of the ε-regularized adjoint inversion kernel,
/// `Γ(-ix)(t/2)^{ε+ix-1} / (Γ(ε-ix)Γ((ε+α+ix)/2)Γ((ε+ix-α)/2)) ₂F₃((ε+ix)/2, (ε+ix+1)/2; 1+ix, (ε+α+ix)/2, (ε+ix-α)/2; t²)`.
/// The second term is its complex conjugate. At `ε = 0` it is the `F_α` kernel `A` with
/// `(τ, x)` renamed `(x, t)`.
pub fn adjoint_kernel_term(alpha: f64, eps: f64, x: f64, t: f64) -> Result<C64> {
    if !(eps >= 0.0) || !(t > 0.0) || x == 0.0 {
        return Err(Error::domain("adjoint kernel needs eps >= 0, t > 0, x != 0"));
    }
    let ix = c(0.0, x);
    let e = ix + eps;
    let pre = adjoint_prefactor(alpha, eps, x)? * ((e - 1.0) * (t / 2.0).ln()).exp();
    let s = hyp2f3(e * 0.5, (e + 1.0) * 0.5, ix + 1.0, (e + alpha) * 0.5, (e - alpha) * 0.5, t * t)?;
    Ok(pre * s.value)
}

/// The `α = 0` term written with `₁F₂` after the parameter cancellation.
pub fn adjoint_kernel_term_alpha0(eps: f64, x: f64, t: f64) -> Result<C64> {
    check_eps_x(eps, x)?;
    let ix = c(0.0, x);
    let e = ix + eps;
    let r = recip_gamma(e * 0.5);
    let pre = gamma(-ix)? * ((e - 1.0) * (t / 2.0).ln()).exp() * recip_gamma(c(eps, -x)) * r * r;
    Ok(pre * hyp1f2((e + 1.0) * 0.5, ix + 1.0, e * 0.5, t * t)?.value)
}

/// Small-`t` series `Σ_n e_n t^{c0 + 2n}` of an inversion kernel.
struct PowerSeries {
    c0: C64,
    coefs: Vec<C64>,
}

const SERIES_TERMS: usize = 10;

impl PowerSeries {
    fn adjoint(alpha: f64, eps: f64, x: f64) -> Result<Self> {
        let ix = c(0.0, x);
        let e = ix + eps;
        let c0 = e - 1.0;
        let k = adjoint_prefactor(alpha, eps, x)? * (-c0 * std::f64::consts::LN_2).exp();
        let h = hyp_coefficients(
            &[e * 0.5, (e + 1.0) * 0.5],
            &[ix + 1.0, (e + alpha) * 0.5, (e - alpha) * 0.5],
            SERIES_TERMS,
        )?;
        Ok(PowerSeries {
            c0,
            coefs: h.into_iter().map(|v| v * k).collect(),
        })
    }

    /// The `α = 1`, `ε = 0` kernel from the Bessel-square series.
    fn alpha1(x: f64) -> Self {
        let ix = c(0.0, x);
        let c0 = ix - 1.0;
        let sq = |nu: C64, n: usize| -> C64 {
            (0..=n)
                .map(|k| recip_gamma(nu + (k + 1) as f64) * recip_gamma(nu + (n - k + 1) as f64) / (fact(k) * fact(n - k)))
                .sum()
        };
        let (n1, n2) = ((ix - 1.0) * 0.5, (ix + 1.0) * 0.5);
        let mut coefs = vec![c(0.0, 0.0); SERIES_TERMS];
        for n in 0..SERIES_TERMS {
            let p = c0 + 2.0 * n as f64;
            coefs[n] += n1 * sq(n1, n) * (-p * std::f64::consts::LN_2).exp();
            if n + 1 < SERIES_TERMS {
                coefs[n + 1] += n2 * sq(n2, n) * (-(p + 2.0) * std::f64::consts::LN_2).exp();
            }
        }
        PowerSeries { c0, coefs }
    }

    /// Analytic continuation of `∫_0^{t0} (series) t^p ln^m t dt`.
    fn moment(&self, p: f64, m: u8, t0: f64) -> C64 {
        let l = t0.ln();
        self.coefs
            .iter()
            .enumerate()
            .map(|(n, &e)| {
                let cc = self.c0 + (2 * n) as f64 + p + 1.0;
                let pw = (cc * l).exp();
                let j = if m == 0 { pw / cc } else { pw * (l / cc - 1.0 / (cc * cc)) };
                e * j
            })
            .sum()
    }
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Exponents `(p, m)` of `t^p ln^m t` in the small-`t` expansion of `G_α`, up to `p < 3`.
///
/// They are the residues of `G*_α(s) ∝ Γ((s+α)/2) Γ((s-α)/2)`; where the two pole families
/// meet the pole is double and brings a logarithm.
pub fn small_t_exponents(alpha: f64) -> Vec<(f64, u8)> {
    let mut ps: Vec<f64> = (0..3).flat_map(|k| [-alpha + 2.0 * k as f64, alpha + 2.0 * k as f64]).filter(|&p| p < 3.0).collect();
    ps.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, u8)> = Vec::new();
    for p in ps {
        match out.last() {
            Some(&(q, 0)) if (p - q).abs() < 1e-9 => out.push((q, 1)),
            Some(&(q, 1)) if (p - q).abs() < 1e-9 => {}
            _ => out.push((p, 0)),
        }
    }
    out
}

/// Fitted small-`t` expansion `Σ coef t^p ln^m t` of `G_α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallTExpansion {
    pub terms: Vec<(f64, u8, f64)>,
    /// Relative least-squares residual on the fit window.
    pub residual: f64,
}

const FIT_WINDOW: (f64, f64) = (1e-6, 1e-2);
const FIT_POINTS: usize = 25;
/// Split point: below it `G` is replaced by its expansion.
const T_SPLIT: f64 = 1e-3;

impl SmallTExpansion {
    pub fn value(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(p, m, k)| k * t.powf(p) * if m == 0 { 1.0 } else { t.ln() }).sum()
    }
}

pub type GFn<'a> = &'a (dyn Fn(f64) -> Result<f64> + Sync);

/// Memoized `G`, shared between the fit and every ε.
struct Memo<'a> {
    g: GFn<'a>,
    map: Mutex<HashMap<u64, f64>>,
}

impl<'a> Memo<'a> {
    fn new(g: GFn<'a>) -> Self {
        Memo {
            g,
            map: Mutex::new(HashMap::new()),
        }
    }

    fn get(&self, t: f64) -> Result<f64> {
        if let Some(&v) = self.map.lock().unwrap().get(&t.to_bits()) {
            return Ok(v);
        }
        let v = (self.g)(t)?;
        if !v.is_finite() {
            return Err(Error::domain(format!("G is not finite at t = {t}")));
        }
        self.map.lock().unwrap().insert(t.to_bits(), v);
        Ok(v)
    }
}

/// Least-squares fit of the small-`t` expansion of `G_α` on `[1e-6, 1e-2]`.
pub fn fit_small_t(g: GFn<'_>, alpha: f64) -> Result<SmallTExpansion> {
    fit_memo(&Memo::new(g), alpha)
}

fn fit_memo(g: &Memo<'_>, alpha: f64) -> Result<SmallTExpansion> {
    let basis = small_t_exponents(alpha);
    let (la, lb) = (FIT_WINDOW.0.ln(), FIT_WINDOW.1.ln());
    let ts: Vec<f64> = (0..FIT_POINTS).map(|k| (la + (lb - la) * k as f64 / (FIT_POINTS - 1) as f64).exp()).collect();
    let ys: Result<Vec<f64>> = ts.par_iter().map(|&t| g.get(t)).collect();
    let y = DVector::from_vec(ys?);
    let ynorm = y.norm();
    if ynorm == 0.0 {
        return Ok(SmallTExpansion {
            terms: basis.iter().map(|&(p, m)| (p, m, 0.0)).collect(),
            residual: 0.0,
        });
    }
    let mut m = DMatrix::<f64>::zeros(ts.len(), basis.len());
    for (r, &t) in ts.iter().enumerate() {
        for (j, &(p, lm)) in basis.iter().enumerate() {
            m[(r, j)] = t.powf(p) * if lm == 0 { 1.0 } else { t.ln() };
        }
    }
    // row weights make the fit relative
    for r in 0..ts.len() {
        let w = 1.0 / y[r].abs().max(f64::MIN_POSITIVE);
        m.row_mut(r).scale_mut(w);
    }
    let yw = DVector::from_iterator(ts.len(), y.iter().map(|v| v.signum()));
    let scales: Vec<f64> = (0..basis.len()).map(|j| m.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        m.column_mut(j).scale_mut(1.0 / s);
    }
    let sol = m.clone().svd(true, true).solve(&yw, 1e-15).map_err(|e| Error::domain(e.to_string()))?;
    let residual = (&m * &sol - &yw).norm() / yw.norm();
    Ok(SmallTExpansion {
        terms: basis.iter().zip(sol.iter().zip(&scales)).map(|(&(p, lm), (v, s))| (p, lm, v / s)).collect(),
        residual,
    })
}

/// `∫_0^∞ Re[k(t)] G(t) dt`, continued analytically through the small-`t` expansion below
/// `T_SPLIT`.
fn continued_integral(
    k: impl Fn(f64) -> Result<C64>,
    series: &PowerSeries,
    exp: &SmallTExpansion,
    g: &Memo<'_>,
    cfg: &QuadConfig,
) -> Result<QuadResult<f64>> {
    let near: C64 = exp.terms.iter().map(|&(p, m, cf)| series.moment(p, m, T_SPLIT) * cf).sum();
    let trap = Trap::new();
    let ls = T_SPLIT.ln();
    let pts: Vec<f64> = (0..=6).map(|j| ls * (1.0 - j as f64 / 6.0)).collect();
    let mid = integrate_breakpoints(
        |y: f64| {
            let t = y.exp();
            trap.take(k(t)).re * trap.take(g.get(t)) * t
        },
        &pts,
        cfg,
    );
    let far = integrate_semi_infinite(|s: f64| trap.take(k(1.0 + s)).re * trap.take(g.get(1.0 + s)), 0.0, 2.0, cfg)?;
    trap.check()?;
    Ok(QuadResult {
        value: near.re + mid.value + far.value,
        err_est: mid.err_est + far.err_est + 1e-12 * near.norm(),
        evals: mid.evals + far.evals,
        converged: mid.converged && far.converged,
        l1: near.norm() + mid.l1 + far.l1,
    })
}

/// `I(ε, x)`, the ε-regularized value of `g(x)` computed from `G_α`.
fn regularized_from_adjoint(g: &Memo<'_>, exp: &SmallTExpansion, alpha: f64, eps: f64, x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    let series = PowerSeries::adjoint(alpha, eps, x)?;
    let r = continued_integral(|t| adjoint_kernel_term(alpha, eps, x, t), &series, exp, g, cfg)?;
    let pref = if eps == 0.0 {
        0.5 / PI
    } else {
        (ln_gamma(c(2.0 * eps, 0.0))?.re - ln_gamma(c(eps, 0.0))?.re).exp() / PI
    };
    Ok(QuadResult {
        value: 2.0 * pref * r.value,
        err_est: 2.0 * pref * r.err_est,
        l1: 2.0 * pref * r.l1,
        ..r
    })
}

/// Outcome of the ε-limit, with the whole sequence for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjointInversion {
    pub x: f64,
    /// Extrapolated limit.
    pub value: f64,
    pub eps: Vec<f64>,
    pub iterates: Vec<f64>,
    /// Two-point Richardson values, one per step after the first.
    pub extrapolated: Vec<f64>,
    /// The continued integral at `ε = 0` itself.
    pub at_zero: f64,
    pub monotone: bool,
    pub converged: bool,
    pub fit_residual: f64,
}

/// `G_α` prepared for repeated ε-limit inversion: memoized values and the fitted small-`t`
/// expansion are shared by every `x`.
pub struct AdjointInverter<'a> {
    memo: Memo<'a>,
    expansion: SmallTExpansion,
    alpha: f64,
}

impl<'a> AdjointInverter<'a> {
    pub fn new(g: GFn<'a>, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::domain(format!("alpha must be >= 0, got {alpha}")));
        }
        let memo = Memo::new(g);
        let expansion = fit_memo(&memo, alpha)?;
        Ok(AdjointInverter { memo, expansion, alpha })
    }

    pub fn expansion(&self) -> &SmallTExpansion {
        &self.expansion
    }

    /// `I(ε, x)`; `ε = 0` gives the continued limit integral directly.
    pub fn regularized(&self, eps: f64, x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
        if !(eps >= 0.0) || !(x != 0.0 && x.is_finite()) {
            return Err(Error::domain(format!("need eps >= 0 and finite x != 0, got ({eps}, {x})")));
        }
        regularized_from_adjoint(&self.memo, &self.expansion, self.alpha, eps, x.abs(), cfg)
    }

    /// `g(x) = lim_{ε→0+} I(ε, x)`.
    pub fn invert(&self, x: f64, sched: &EpsilonSchedule, cfg: &QuadConfig) -> Result<AdjointInversion> {
        sched.validate()?;
        if !(x != 0.0 && x.is_finite()) {
            return Err(Error::domain(format!("invert_adjoint needs finite x != 0, got {x}")));
        }
        let mut eps = Vec::new();
        let mut iterates: Vec<f64> = Vec::new();
        let mut extrapolated: Vec<f64> = Vec::new();
        let mut converged = false;
        let r = sched.ratio;
        for k in 0..sched.max_steps {
            let e = sched.eps(k);
            let v = self.regularized(e, x, cfg)?.value;
            eps.push(e);
            iterates.push(v);
            if k >= 1 {
                extrapolated.push((v - r * iterates[k - 1]) / (1.0 - r));
            }
            let n = extrapolated.len();
            // Raw iterates can agree by accident at a turning point, so only the
            // extrapolated sequence decides.
            if n >= 2 && (extrapolated[n - 1] - extrapolated[n - 2]).abs() < sched.conv_tol {
                converged = true;
                break;
            }
        }
        let at_zero = self.regularized(0.0, x, cfg)?.value;
        let monotone = iterates.windows(3).all(|w| (w[1] - w[0]) * (w[2] - w[1]) >= 0.0);
        Ok(AdjointInversion {
            x,
            value: *extrapolated.last().unwrap_or(&iterates[0]),
            eps,
            iterates,
            extrapolated,
            at_zero,
            monotone,
            converged,
            fit_residual: self.expansion.residual,
        })
    }
}

/// `g(x) = lim_{ε→0+} I(ε, x)` from `G_α`, with `I` the ε-regularized integral.
///
/// Where the `t`-integral diverges at the origin (`ε <= α`) it is continued analytically
/// through the fitted small-`t` expansion of `G_α`. The limit is a two-point Richardson
/// extrapolation on the geometric schedule; a non-monotone or non-settling sequence is
/// flagged in the result.
pub fn invert_adjoint(g: GFn<'_>, alpha: f64, x: f64, sched: &EpsilonSchedule, cfg: &QuadConfig) -> Result<AdjointInversion> {
    AdjointInverter::new(g, alpha)?.invert(x, sched, cfg)
}

/// The `α = 1` limit formula `g(x) = (1/π) ∫_0^∞ Re[A_1(x; t)] G_1(t) dt`, with `A_1` the
/// Bessel-square kernel and the small-`t` end continued analytically.
pub fn invert_adjoint_alpha1_limit(g: GFn<'_>, x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    if !(x != 0.0 && x.is_finite()) {
        return Err(Error::domain(format!("need finite x != 0, got {x}")));
    }
    let xa = x.abs();
    let memo = Memo::new(g);
    let exp = fit_memo(&memo, 1.0)?;
    let series = PowerSeries::alpha1(xa);
    let r = continued_integral(|t| kernel_alpha1(c(xa, 0.0), t), &series, &exp, &memo, cfg)?;
    Ok(QuadResult {
        value: r.value / PI,
        err_est: r.err_est / PI,
        l1: r.l1 / PI,
        ..r
    })
}

/// `I(ε, x) = (1/(4π B(ε,ε))) ∫ |B((ε+i(x-τ))/2, (ε+i(x+τ))/2)|² g(τ) dτ`, the smoothed `g`
/// that the regularized inversion produces, computed straight from `g`.
pub fn regularized_value(g: &RealFunction, eps: f64, x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    if g.domain != Domain::RealLine {
        return Err(Error::domain(format!("{} must live on the real line", g.name)));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("need eps > 0, got {eps}")));
    }
    let den = 2.0 * ln_gamma(c(eps, x))?.re;
    let k = 1.0 / (4.0 * PI * beta_real(eps, eps)?);
    let trap = Trap::new();
    let xa = x.abs();
    let mut pts = vec![-xa, xa];
    for w in [eps, 5.0 * eps] {
        pts.extend([-xa - w, -xa + w, xa - w, xa + w]);
    }
    let r = integrate_real_line_points(
        |t: f64| {
            let l = 2.0 * (trap.take(ln_gamma(c(eps, x - t) * 0.5)).re + trap.take(ln_gamma(c(eps, x + t) * 0.5)).re) - den;
            k * l.exp() * g.eval(t)
        },
        &pts,
        PI + g.decay_hint,
        cfg,
    )?;
    trap.check()?;
    Ok(r)
}

/// Both sides of `∫ |Γ((ε+i(x-t))/2) Γ((ε+i(x+t))/2)|² dt = 4π |Γ(ε+ix)|² B(ε,ε)`.
pub fn gamma_product_identity(eps: f64, x: f64, cfg: &QuadConfig) -> Result<(f64, f64)> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("need eps > 0, got {eps}")));
    }
    let trap = Trap::new();
    let xa = x.abs();
    let lhs = integrate_real_line_points(
        |t: f64| (2.0 * (trap.take(ln_gamma(c(eps, x - t) * 0.5)).re + trap.take(ln_gamma(c(eps, x + t) * 0.5)).re)).exp(),
        &[-xa, xa],
        PI,
        cfg,
    )?
    .checked("gamma product integral")?;
    trap.check()?;
    let rhs = 4.0 * PI * (2.0 * ln_gamma(c(eps, x))?.re).exp() * beta_real(eps, eps)?;
    Ok((lhs.value, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum TestFamily {
    /// `(c - x) e^{-x}`
    ExpLinear,
    /// `(c - x) x^a e^{-x}`
    ExpPoly { a: f64 },
}

/// Member of `family` with `c` chosen so the Mellin moment of the inversion theorem for this
/// `α` vanishes: `f*(1 - α) = 0`.
///
/// `f*(s) = Γ(s + a)(c - s - a)`, so `c = 1 - α + a`; for `a = 0` this is `Γ(2-α)/Γ(1-α)`.
pub fn moment_matched_test_function(alpha: f64, family: TestFamily) -> Result<RealFunction> {
    let a = match family {
        TestFamily::ExpLinear => 0.0,
        TestFamily::ExpPoly { a } => a,
    };
    let s = 1.0 - alpha;
    if !(s + a > 0.0) {
        return Err(Error::domain(format!(
            "f*(s) = Γ(s+a)(c-s-a) cannot vanish at s = {s} for a = {a}: Γ has a pole there"
        )));
    }
    let cc = s + a;
    Ok(RealFunction::exp_poly(cc, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_sets() {
        assert_eq!(small_t_exponents(0.0), vec![(0.0, 0), (0.0, 1), (2.0, 0), (2.0, 1)]);
        assert_eq!(small_t_exponents(1.0), vec![(-1.0, 0), (1.0, 0), (1.0, 1)]);
        assert_eq!(small_t_exponents(0.5).len(), 4);
    }

    #[test]
    fn alpha1_series_matches_closed_form() {
        let x = 1.3;
        let s = PowerSeries::alpha1(x);
        for t in [1e-3, 0.05, 0.3] {
            let direct = kernel_alpha1(c(x, 0.0), t).unwrap();
            let ser: C64 = s.coefs.iter().enumerate().map(|(n, &e)| e * ((s.c0 + 2.0 * n as f64) * f64::ln(t)).exp()).sum();
            assert!((direct - ser).norm() < 1e-12 * direct.norm(), "{t}");
        }
    }

    #[test]
    fn adjoint_series_matches_closed_form() {
        let s = PowerSeries::adjoint(0.5, 0.25, 1.0).unwrap();
        for t in [1e-3, 0.05, 0.3] {
            let direct = adjoint_kernel_term(0.5, 0.25, 1.0, t).unwrap();
            let ser: C64 = s.coefs.iter().enumerate().map(|(n, &e)| e * ((s.c0 + 2.0 * n as f64) * f64::ln(t)).exp()).sum();
            assert!((direct - ser).norm() < 1e-12 * direct.norm(), "{t}");
        }
    }
}
