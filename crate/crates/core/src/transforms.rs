//! Forward transform `F_α`, adjoint `G_α`, the Fourier and Meijer-K building blocks of the
//! composition route, the Mellin route, and the closed-form constants of the norm bounds.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{inner_cfg, k_value, phi_direct, phi_order, KernelParams, Trap};
use crate::quadrature::{integrate_contour_vertical, integrate_semi_infinite, QuadConfig, QuadResult, Scalar};
use crate::specfun::{bessel_k_quad, beta_real, c, gamma, gamma_real, ln_gamma, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    HalfLine,
    RealLine,
}

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type MellinFn = Arc<dyn Fn(C64) -> Result<C64> + Send + Sync>;

/// Closed-form Mellin transform `f*(s)`, valid for `Re s > strip_lo`.
#[derive(Clone)]
pub struct MomentData {
    pub strip_lo: f64,
    pub mellin: MellinFn,
}

/// A real function with its domain and the exponential decay rate of its tails.
#[derive(Clone)]
pub struct RealFunction {
    pub name: String,
    pub domain: Domain,
    /// `f` is eventually dominated by `exp(-decay_hint |x|)`; 0 means no exponential decay
    /// is claimed.
    pub decay_hint: f64,
    eval: Eval,
    pub moment_data: Option<MomentData>,
    /// Known to vanish identically, which lets every transform short-circuit.
    pub is_zero: bool,
}

impl std::fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFunction")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("decay_hint", &self.decay_hint)
            .finish()
    }
}

impl RealFunction {
    pub fn new(name: &str, domain: Domain, decay_hint: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RealFunction {
            name: name.to_string(),
            domain,
            decay_hint,
            eval: Arc::new(f),
            moment_data: None,
            is_zero: false,
        }
    }

    pub fn with_mellin(mut self, strip_lo: f64, m: impl Fn(C64) -> Result<C64> + Send + Sync + 'static) -> Self {
        self.moment_data = Some(MomentData {
            strip_lo,
            mellin: Arc::new(m),
        });
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn zero(domain: Domain) -> Self {
        let mut f = RealFunction::new("zero", domain, 1.0, |_| 0.0).with_mellin(f64::NEG_INFINITY, |_| Ok(c(0.0, 0.0)));
        f.is_zero = true;
        f
    }

    /// `e^{-k x}` on the half line, `f*(s) = k^{-s} Γ(s)`.
    pub fn exp_decay(k: f64) -> Self {
        RealFunction::new(&format!("exp(-{k}x)"), Domain::HalfLine, k, move |x| (-k * x).exp())
            .with_mellin(0.0, move |s| Ok(gamma(s)? * (-s * k.ln()).exp()))
    }

    /// `e^{-x²}` on the half line, `f*(s) = Γ(s/2)/2`.
    pub fn gauss_half() -> Self {
        RealFunction::new("exp(-x^2)", Domain::HalfLine, 4.0, |x| (-x * x).exp()).with_mellin(0.0, |s| Ok(gamma(s * 0.5)? * 0.5))
    }

    /// `x e^{-x²}` on the half line, `f*(s) = Γ((s+1)/2)/2`.
    pub fn x_gauss() -> Self {
        RealFunction::new("x*exp(-x^2)", Domain::HalfLine, 4.0, |x| x * (-x * x).exp())
            .with_mellin(-1.0, |s| Ok(gamma((s + 1.0) * 0.5)? * 0.5))
    }

    /// `e^{-w τ²}` on the real line.
    pub fn gaussian(w: f64) -> Self {
        RealFunction::new(&format!("exp(-{w}t^2)"), Domain::RealLine, 8.0 * w, move |t| (-w * t * t).exp())
    }

    /// `(c - x) x^a e^{-x}` on the half line, `f*(s) = Γ(s+a)(c - s - a)`.
    pub fn exp_poly(cc: f64, a: f64) -> Self {
        RealFunction::new(&format!("({cc}-x)x^{a}exp(-x)"), Domain::HalfLine, 1.0, move |x| {
            if a == 0.0 {
                (cc - x) * (-x).exp()
            } else {
                (cc - x) * x.powf(a) * (-x).exp()
            }
        })
        .with_mellin(-a, move |s| Ok(gamma(s + a)? * (cc - s - a)))
    }
}

/// Grid output: one row per abscissa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TransformResult {
    pub abscissas: Vec<f64>,
    pub values: Vec<f64>,
    pub err_ests: Vec<f64>,
    pub converged: Vec<bool>,
    pub warnings: Vec<String>,
}

impl TransformResult {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    fn from_points(abscissas: &[f64], pts: Vec<QuadResult<f64>>, warnings: Vec<String>) -> Self {
        TransformResult {
            abscissas: abscissas.to_vec(),
            values: pts.iter().map(|r| r.value).collect(),
            err_ests: pts.iter().map(|r| r.err_est).collect(),
            converged: pts.iter().map(|r| r.converged).collect(),
            warnings,
        }
    }
}

pub(crate) fn check_grid(g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::domain("empty grid"));
    }
    if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("grid must be finite and strictly increasing"));
    }
    Ok(())
}

fn zero_result<T: Scalar>() -> QuadResult<T> {
    QuadResult {
        value: T::zero(),
        err_est: 0.0,
        evals: 0,
        converged: true,
        l1: 0.0,
    }
}

/// Power `p` with `|h(x)| ~ x^p` as `x -> 0`, from a log-slope at two tiny points.
pub(crate) fn small_x_exponent<T: Scalar>(h: impl Fn(f64) -> T) -> f64 {
    let (x1, x2) = (1e-12, 1e-9);
    let (h1, h2) = (h(x1).modulus(), h(x2).modulus());
    if !(h1 > 0.0) || !(h2 > 0.0) || !h1.is_finite() || !h2.is_finite() {
        return 0.0;
    }
    (h1 / h2).ln() / (x1 / x2).ln()
}

/// `∫_0^∞ h` for `h ~ x^p` at the origin and `~ e^{-decay x}` at infinity.
///
/// `[0, 1]` is mapped by `x = e^{-y}`, turning the power singularity into exponential decay of
/// rate `1 + p`.
pub(crate) fn half_line_integral<T: Scalar>(h: impl Fn(f64) -> T, p: f64, decay: f64, cfg: &QuadConfig) -> Result<QuadResult<T>> {
    if !(1.0 + p > 0.02) {
        return Err(Error::domain(format!("integrand behaves like x^{p:.3} at the origin and is not integrable")));
    }
    let rate = (0.9 * (1.0 + p)).clamp(0.1, 1.0);
    let near = integrate_semi_infinite(
        |y: f64| {
            let x = (-y).exp();
            if x > 0.0 {
                h(x) * x
            } else {
                T::zero()
            }
        },
        0.0,
        rate,
        cfg,
    )?;
    let far = integrate_semi_infinite(|x: f64| h(1.0 + x), 0.0, decay, cfg)?;
    Ok(QuadResult {
        value: near.value + far.value,
        err_est: near.err_est + far.err_est,
        evals: near.evals + far.evals,
        converged: near.converged && far.converged,
        l1: near.l1 + far.l1,
    })
}

fn need_half_line(f: &RealFunction) -> Result<()> {
    if f.domain != Domain::HalfLine {
        return Err(Error::domain(format!("{} must live on the half line", f.name)));
    }
    Ok(())
}

fn need_real_line(g: &RealFunction) -> Result<()> {
    if g.domain != Domain::RealLine {
        return Err(Error::domain(format!("{} must live on the real line", g.name)));
    }
    Ok(())
}

fn need_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must be >= 0, got {alpha}")))
    }
}

/// `||f||_{L^α} = ∫ K²_{α/2}(x) |f(x)| dx`, the norm whose finiteness makes `F_α f` exist.
/// A non-integrable singularity at the origin is a precondition error.
pub fn l_alpha_norm(f: &RealFunction, alpha: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    need_half_line(f)?;
    need_alpha(alpha)?;
    if f.is_zero {
        return Ok(zero_result());
    }
    let inner = inner_cfg(cfg);
    let trap = Trap::new();
    let mu = c(alpha / 2.0, 0.0);
    let h = |x: f64| trap.take(phi_order(mu, x, &inner).and_then(|r| r.checked("phi"))).value * f.eval(x).abs();
    let p = small_x_exponent(h);
    let r = half_line_integral(h, p, 2.0 + f.decay_hint, cfg)?;
    trap.check()?;
    Ok(r)
}

/// `F_α(τ)` at a single point.
pub fn forward_point(f: &RealFunction, alpha: f64, tau: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    need_half_line(f)?;
    let kp = KernelParams::new(alpha, tau)?;
    if f.is_zero {
        return Ok(zero_result());
    }
    let inner = inner_cfg(cfg);
    let trap = Trap::new();
    let h = |x: f64| trap.take(phi_direct(kp, x, &inner).and_then(|r| r.checked("phi"))).value * f.eval(x);
    let p = small_x_exponent(|x: f64| {
        trap.take(phi_order(c(alpha / 2.0, 0.0), x, &inner).and_then(|r| r.checked("phi"))).value * f.eval(x).abs()
    });
    let r = half_line_integral(h, p, 2.0 + f.decay_hint, cfg)?;
    trap.check()?;
    Ok(r)
}

/// `F_α(τ) = ∫_0^∞ Φ_{α,τ}(x) f(x) dx` on a grid.
///
/// The `L^α` norm is probed first: a non-integrable singularity is an error, a probe that fails
/// to converge only adds a warning.
pub fn forward(f: &RealFunction, alpha: f64, taus: &[f64], cfg: &QuadConfig) -> Result<TransformResult> {
    check_grid(taus)?;
    cfg.validate()?;
    let mut warnings = Vec::new();
    let probe = l_alpha_norm(f, alpha, cfg)?;
    if !probe.converged {
        warnings.push(format!(
            "L^alpha probe for {} did not converge (value {:e}, err {:e})",
            f.name, probe.value, probe.err_est
        ));
    }
    let pts: Result<Vec<_>> = taus.par_iter().map(|&t| forward_point(f, alpha, t, cfg)).collect();
    Ok(TransformResult::from_points(taus, pts?, warnings))
}

/// `G_α(x)` at a single point. The kernel is even in `τ`, so only the even part of `g` enters.
pub fn adjoint_point(g: &RealFunction, alpha: f64, x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    need_real_line(g)?;
    need_alpha(alpha)?;
    if !(x > 0.0) {
        return Err(Error::domain(format!("adjoint needs x > 0, got {x}")));
    }
    if g.is_zero {
        return Ok(zero_result());
    }
    let inner = inner_cfg(cfg);
    let trap = Trap::new();
    let r = integrate_semi_infinite(
        |t: f64| {
            let kp = KernelParams { alpha, tau: t };
            let ph = trap.take(phi_direct(kp, x, &inner).and_then(|r| r.checked("phi"))).value;
            ph * (g.eval(t) + g.eval(-t))
        },
        0.0,
        PI / 2.0 + g.decay_hint,
        cfg,
    )?;
    trap.check()?;
    Ok(r)
}

/// `G_α(x) = ∫ Φ_{α,τ}(x) g(τ) dτ` on a grid.
pub fn adjoint(g: &RealFunction, alpha: f64, xs: &[f64], cfg: &QuadConfig) -> Result<TransformResult> {
    check_grid(xs)?;
    cfg.validate()?;
    let pts: Result<Vec<_>> = xs.par_iter().map(|&x| adjoint_point(g, alpha, x, cfg)).collect();
    Ok(TransformResult::from_points(xs, pts?, Vec::new()))
}

/// Meijer K-transform `∫_0^∞ K_α(x u) f(u) du` at `x = 2 cosh t`.
pub fn meijer_k(f: &RealFunction, alpha: f64, t: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    meijer_k_at(f, alpha, 2.0 * t.cosh(), cfg)
}

/// Meijer K-transform at an arbitrary `x > 0`.
pub fn meijer_k_at(f: &RealFunction, alpha: f64, x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    need_half_line(f)?;
    if !(x > 0.0) {
        return Err(Error::domain(format!("Meijer K-transform needs x > 0, got {x}")));
    }
    if f.is_zero {
        return Ok(zero_result());
    }
    // v = x u puts the K factor on a fixed scale: (1/x) ∫ K_α(v) f(v/x) dv
    let inner = inner_cfg(cfg);
    let trap = Trap::new();
    let nu = c(alpha, 0.0);
    let h = |v: f64| trap.take(k_value(nu, v, &inner)).re * f.eval(v / x);
    let p = small_x_exponent(|v: f64| h(v).abs());
    let r = half_line_integral(h, p, 1.0 + f.decay_hint / x, cfg)?;
    trap.check()?;
    Ok(QuadResult {
        value: r.value / x,
        err_est: r.err_est / x,
        l1: r.l1 / x,
        ..r
    })
}

/// `∫ h(t) e^{iτt} dt`, no normalization.
pub fn fourier(h: &RealFunction, tau: f64, cfg: &QuadConfig) -> Result<QuadResult<C64>> {
    need_real_line(h)?;
    if h.is_zero {
        return Ok(zero_result());
    }
    if !(h.decay_hint > 0.0) {
        return Err(Error::domain("fourier needs a positive decay hint"));
    }
    let right = integrate_semi_infinite(|t: f64| C64::from_polar(h.eval(t), tau * t), 0.0, h.decay_hint, cfg)?;
    let left = integrate_semi_infinite(|t: f64| C64::from_polar(h.eval(-t), -tau * t), 0.0, h.decay_hint, cfg)?;
    Ok(QuadResult {
        value: right.value + left.value,
        err_est: right.err_est + left.err_est,
        evals: right.evals + left.evals,
        converged: right.converged && left.converged,
        l1: right.l1 + left.l1,
    })
}

/// `F_α` as the Fourier transform of `t -> (K_α f)(2 cosh t)`.
pub fn forward_via_composition(f: &RealFunction, alpha: f64, taus: &[f64], cfg: &QuadConfig) -> Result<TransformResult> {
    check_grid(taus)?;
    need_half_line(f)?;
    need_alpha(alpha)?;
    if f.is_zero {
        return Ok(TransformResult::from_points(taus, vec![zero_result(); taus.len()], Vec::new()));
    }
    // (K_α f)(2 cosh t) is even in t and reused across τ.
    let cache: Arc<Mutex<HashMap<u64, std::result::Result<f64, Error>>>> = Arc::new(Mutex::new(HashMap::new()));
    let inner = inner_cfg(cfg);
    let ff = f.clone();
    let cc = cache.clone();
    // decays like 1/cosh t when f(0) != 0
    let m = RealFunction::new("meijer", Domain::RealLine, 1.0, move |t: f64| {
        let key = t.abs().to_bits();
        if let Some(v) = cc.lock().unwrap().get(&key) {
            return v.clone().unwrap_or(f64::NAN);
        }
        let v = meijer_k(&ff, alpha, t.abs(), &inner).and_then(|r| r.checked("meijer_k")).map(|r| r.value);
        cc.lock().unwrap().insert(key, v.clone());
        v.unwrap_or(f64::NAN)
    });
    let pts: Vec<Result<QuadResult<f64>>> = taus
        .par_iter()
        .map(|&tau| {
            let r = fourier(&m, tau, cfg)?;
            Ok(QuadResult {
                value: r.value.re,
                err_est: r.err_est,
                evals: r.evals,
                converged: r.converged,
                l1: r.l1,
            })
        })
        .collect();
    if let Some(Err(e)) = cache.lock().unwrap().values().find(|v| v.is_err()) {
        return Err(e.clone());
    }
    let pts: Result<Vec<_>> = pts.into_iter().collect();
    Ok(TransformResult::from_points(taus, pts?, Vec::new()))
}

/// `f*(s) = ∫_0^∞ f(x) x^{s-1} dx` by quadrature.
pub fn mellin(f: &RealFunction, s: C64, cfg: &QuadConfig) -> Result<QuadResult<C64>> {
    need_half_line(f)?;
    if f.is_zero {
        return Ok(zero_result());
    }
    let h = |x: f64| C64::from_polar(f.eval(x) * x.powf(s.re - 1.0), s.im * x.ln());
    let p = small_x_exponent(h);
    half_line_integral(h, p, f.decay_hint, cfg)
}

/// `f*(s)` from the attached closed form when present, by quadrature otherwise.
pub fn mellin_value(f: &RealFunction, s: C64, cfg: &QuadConfig) -> Result<C64> {
    match &f.moment_data {
        Some(m) => {
            if !(s.re > m.strip_lo) {
                return Err(Error::domain(format!("Re s = {} outside the Mellin strip of {}", s.re, f.name)));
            }
            (m.mellin)(s)
        }
        None => Ok(mellin(f, s, cfg)?.checked("mellin")?.value),
    }
}

/// `F_α(τ)` from the Mellin-Barnes integral over `Re s = ν`, `α + ν < 1`.
///
/// The integrand carries the overall factor `e^{-π|τ|/2}` without cancellation, so this route
/// keeps full relative accuracy for large `τ`.
pub fn forward_via_mellin(f: &RealFunction, alpha: f64, tau: f64, nu: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    need_half_line(f)?;
    need_alpha(alpha)?;
    if !(alpha + nu < 1.0) {
        return Err(Error::domain(format!("Mellin route needs alpha + nu < 1, got {alpha} + {nu}")));
    }
    if let Some(m) = &f.moment_data {
        if !(nu > m.strip_lo) {
            return Err(Error::domain(format!("nu = {nu} outside the Mellin strip of {}", f.name)));
        }
    }
    if f.is_zero {
        return Ok(zero_result());
    }
    let i = C64::i();
    let trap = Trap::new();
    let inner = inner_cfg(cfg);
    let r = integrate_contour_vertical(
        |s: C64| {
            let lg = |z: C64| trap.take(ln_gamma(z));
            let w = 1.0 - s;
            let l = lg((w + i * tau) * 0.5) + lg((w - i * tau) * 0.5) + lg((w + alpha) * 0.5) + lg((w - alpha) * 0.5)
                - lg(w * 0.5)
                - lg(1.0 - s * 0.5);
            l.exp() * trap.take(mellin_value(f, s, &inner))
        },
        nu,
        &[-tau.abs(), tau.abs()],
        PI / 2.0,
        cfg,
    )?;
    trap.check()?;
    let scale = 1.0 / (8.0 * PI.sqrt());
    let v = r.value / i * scale;
    Ok(QuadResult {
        value: v.re,
        err_est: r.err_est * scale,
        evals: r.evals,
        converged: r.converged,
        l1: r.l1 * scale,
    })
}

/// Exponents of the Lebesgue-space bounds; `q = p/(p-1)` (`q = 1` for `p = ∞`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub nu: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl BoundParams {
    pub fn new(nu: f64, p: f64, r: f64) -> Result<Self> {
        if !(p >= 1.0) || !(r >= 1.0) || !nu.is_finite() {
            return Err(Error::domain(format!("need p >= 1, r >= 1, finite nu; got nu={nu}, p={p}, r={r}")));
        }
        let q = if p.is_infinite() {
            1.0
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            p / (p - 1.0)
        };
        Ok(BoundParams { nu, p, q, r })
    }
}

fn embedding_check(b: &BoundParams, alpha: f64) -> Result<()> {
    if !(b.p > 1.0) || !(b.nu + alpha < 1.0) || !(alpha >= 0.0) {
        return Err(Error::domain(format!(
            "embedding bound needs p > 1, alpha >= 0 and nu + alpha < 1 (nu={}, p={}, alpha={alpha})",
            b.nu, b.p
        )));
    }
    Ok(())
}

/// Embedding constant of `L_{ν,p}` into `L^α`, `1 < p <= ∞`, `ν + α < 1`.
///
/// Minkowski's inequality in `L_{2q}` puts the power `1/(2q)` on the inner `x`-integral, which
/// gives `Γ^{1/q}(q(1-ν)) (2q)^{ν-1} [4^{(1-ν)/4-1} B((1-ν+α)/4, (1-ν-α)/4)]²`. The beta
/// arguments are positive exactly when `ν + α < 1`.
pub fn bound_embedding(b: &BoundParams, alpha: f64) -> Result<f64> {
    embedding_check(b, alpha)?;
    let (q, nu) = (b.q, b.nu);
    let g = gamma_real(q * (1.0 - nu))?.powf(1.0 / q);
    let bt = 4f64.powf((1.0 - nu) / 4.0 - 1.0) * beta_real((1.0 - nu + alpha) / 4.0, (1.0 - nu - alpha) / 4.0)?;
    Ok(g * (2.0 * q).powf(nu - 1.0) * bt * bt)
}

/// The uncorrected embedding constant, `[Γ^{1/q}(q(1-ν)) / (4 q^{1-ν}) B((1-ν)/2 + α/4, (1-ν)/2 - α/4)]²`.
/// It is smaller than `‖f‖_{L^α} / ‖f‖_{ν,p}` for some inputs, e.g. `e^{-x}` at `ν = 1/2, p = 4`.
pub fn bound_embedding_uncorrected(b: &BoundParams, alpha: f64) -> Result<f64> {
    embedding_check(b, alpha)?;
    let (q, nu) = (b.q, b.nu);
    let g = gamma_real(q * (1.0 - nu))?.powf(1.0 / q);
    let bt = beta_real((1.0 - nu) / 2.0 + alpha / 4.0, (1.0 - nu) / 2.0 - alpha / 4.0)?;
    Ok((g / (4.0 * q.powf(1.0 - nu)) * bt).powi(2))
}

/// `sup_x K²_{α/2}(x) x^{1-ν}`, the `p = 1` embedding constant, `ν + α < 1`.
pub fn bound_embedding_p1(nu: f64, alpha: f64, cfg: &QuadConfig) -> Result<f64> {
    if !(nu + alpha < 1.0) || !(alpha >= 0.0) {
        return Err(Error::domain(format!("p = 1 embedding bound needs nu + alpha < 1 (nu={nu}, alpha={alpha})")));
    }
    let mu = c(alpha / 2.0, 0.0);
    let h = |lx: f64| -> Result<f64> {
        let x = lx.exp();
        let k = bessel_k_quad(mu, x, cfg)?.checked("bessel_k")?.value.re;
        Ok(k * k * x.powf(1.0 - nu))
    };
    let (lo, hi, n) = (-30.0f64, 5.0f64, 351);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (f64::NEG_INFINITY, lo);
    for k in 0..n {
        let lx = lo + step * k as f64;
        let v = h(lx)?;
        if v > best.0 {
            best = (v, lx);
        }
    }
    // golden-section refinement around the best grid point
    let (mut a, mut bb) = (best.1 - step, best.1 + step);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c1 = bb - gr * (bb - a);
        let c2 = a + gr * (bb - a);
        if h(c1)? > h(c2)? {
            bb = c2;
        } else {
            a = c1;
        }
    }
    Ok(best.0.max(h(0.5 * (a + bb))?))
}

/// Constant of the `L_{ν,p} -> L_p(ℝ)` bound for `F_α`, `p >= 2`, `ν + α < 1`.
pub fn bound_forward_lp(b: &BoundParams, alpha: f64) -> Result<f64> {
    if !(b.p >= 2.0) || !(b.nu + alpha < 1.0) || !(alpha >= 0.0) {
        return Err(Error::domain(format!(
            "forward L_p bound needs p >= 2 and nu + alpha < 1 (nu={}, p={}, alpha={alpha})",
            b.nu, b.p
        )));
    }
    let (p, q, nu) = (b.p, b.q, b.nu);
    let pi_p = if p.is_infinite() { 1.0 } else { PI.powf(1.0 / p) };
    Ok(pi_p
        * 2f64.powf(-2.0 / q - nu)
        * q.powf(nu - 1.0)
        * gamma_real(q * (1.0 - nu) / 2.0)?.powf(2.0 / q)
        * beta_real((1.0 - nu + alpha) / 2.0, (1.0 - nu - alpha) / 2.0)?)
}

fn check_adjoint_p(b: &BoundParams) -> Result<()> {
    if b.p > 1.0 && b.p <= 2.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("adjoint bounds need 1 < p <= 2, got {}", b.p)))
    }
}

/// Coefficient `C` of the pointwise bound `|G_α(x)| <= C x^{-1-1/(2p)} ||g||_p`,
/// `1 < p <= 2`, `α < 1 + 1/(2p)`.
///
/// The second beta argument is `(1-α)/2 + 1/(4p)`, which is what the hyperbolic integral in the
/// derivation evaluates to and stays positive on the whole admissible range of `α`.
pub fn bound_adjoint_pointwise(b: &BoundParams, alpha: f64) -> Result<f64> {
    check_adjoint_p(b)?;
    let p = b.p;
    if !(alpha >= 0.0 && alpha < 1.0 + 1.0 / (2.0 * p)) {
        return Err(Error::domain(format!("pointwise adjoint bound needs 0 <= alpha < 1 + 1/(2p), got {alpha}")));
    }
    Ok(adjoint_pointwise_prefactor(b)
        * beta_real((1.0 + alpha) / 2.0 + 1.0 / (4.0 * p), (1.0 - alpha) / 2.0 + 1.0 / (4.0 * p))?)
}

/// The same coefficient with the beta argument `(1-α)/2 - 1/(4p)` of the uncorrected form;
/// `None` where that argument is not positive.
pub fn bound_adjoint_pointwise_uncorrected(b: &BoundParams, alpha: f64) -> Result<Option<f64>> {
    check_adjoint_p(b)?;
    let p = b.p;
    let second = (1.0 - alpha) / 2.0 - 1.0 / (4.0 * p);
    if !(second > 0.0) {
        return Ok(None);
    }
    Ok(Some(adjoint_pointwise_prefactor(b) * beta_real((1.0 + alpha) / 2.0 + 1.0 / (4.0 * p), second)?))
}

fn adjoint_pointwise_prefactor(b: &BoundParams) -> f64 {
    let p = b.p;
    PI.powf((1.0 + 1.0 / b.q) / 2.0) * 2f64.powf(-2.0 - 1.0 / p) * p.powf(-1.0 / (2.0 * p))
}

/// Constant of `||G_α||_{ν,r} <= C ||g||_p`, `1 < p <= 2`, `r >= 1`, `0 <= α < ν`.
///
/// Twice the uncorrected constant: evaluating `∫ cosh^{-νp} t dt` over the whole line gives
/// `2^{νp-1} B(νp/2, νp/2)`, hence `2^{1-2/p}` where the uncorrected form has `2^{-2/p}`.
pub fn bound_adjoint_norm(b: &BoundParams, alpha: f64) -> Result<f64> {
    Ok(2.0 * bound_adjoint_norm_uncorrected(b, alpha)?)
}

/// The uncorrected constant.
pub fn bound_adjoint_norm_uncorrected(b: &BoundParams, alpha: f64) -> Result<f64> {
    check_adjoint_p(b)?;
    if !(b.r >= 1.0) || !(alpha >= 0.0 && alpha < b.nu) {
        return Err(Error::domain(format!("adjoint norm bound needs r >= 1 and 0 <= alpha < nu (alpha={alpha}, nu={})", b.nu)));
    }
    let (p, r, nu) = (b.p, b.r, b.nu);
    Ok(PI.powf(1.0 - 1.0 / p)
        * 2f64.powf(nu - 2.0 - 2.0 / p)
        * gamma_real(nu * r)?.powf(1.0 / r)
        / (r.powf(nu) * gamma_real(nu * p)?.powf(1.0 / p))
        * gamma_real(nu * p / 2.0)?.powf(2.0 / p)
        * beta_real((nu + alpha) / 2.0, (nu - alpha) / 2.0)?)
}

/// All bound constants for one parameter set; a formula whose constraints fail is `None`
/// with the reason in `violations`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundValues {
    pub embedding: Option<f64>,
    pub embedding_uncorrected: Option<f64>,
    pub embedding_p1: Option<f64>,
    pub forward_lp: Option<f64>,
    pub adjoint_pointwise: Option<f64>,
    pub adjoint_pointwise_uncorrected: Option<f64>,
    pub adjoint_norm: Option<f64>,
    pub adjoint_norm_uncorrected: Option<f64>,
    pub violations: Vec<String>,
}

pub fn bound_values(b: &BoundParams, alpha: f64, cfg: &QuadConfig) -> BoundValues {
    let mut violations = Vec::new();
    let mut keep = |name: &str, r: Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            violations.push(format!("{name}: {e}"));
            None
        }
    };
    let embedding = keep("embedding", bound_embedding(b, alpha));
    let embedding_uncorrected = bound_embedding_uncorrected(b, alpha).ok();
    let embedding_p1 = keep("embedding_p1", bound_embedding_p1(b.nu, alpha, cfg));
    let forward_lp = keep("forward_lp", bound_forward_lp(b, alpha));
    let adjoint_pointwise = keep("adjoint_pointwise", bound_adjoint_pointwise(b, alpha));
    let adjoint_norm = keep("adjoint_norm", bound_adjoint_norm(b, alpha));
    let adjoint_norm_uncorrected = bound_adjoint_norm_uncorrected(b, alpha).ok();
    let adjoint_pointwise_uncorrected = bound_adjoint_pointwise_uncorrected(b, alpha).ok().flatten();
    BoundValues {
        embedding,
        embedding_uncorrected,
        embedding_p1,
        forward_lp,
        adjoint_pointwise,
        adjoint_pointwise_uncorrected,
        adjoint_norm,
        adjoint_norm_uncorrected,
        violations,
    }
}

/// `||f||_{ν,p} = (∫ x^{νp-1} |f|^p dx)^{1/p}`; for `p = ∞`, `sup |x^ν f(x)|` sampled on a
/// fine logarithmic grid.
pub fn norm_nu_p(f: &RealFunction, nu: f64, p: f64, cfg: &QuadConfig) -> Result<f64> {
    need_half_line(f)?;
    if p.is_infinite() {
        let mut s: f64 = 0.0;
        for k in 0..=4000 {
            let x = (-30.0 + 35.0 * k as f64 / 4000.0).exp();
            s = s.max((x.powf(nu) * f.eval(x)).abs());
        }
        return Ok(s);
    }
    let h = |x: f64| x.powf(nu * p - 1.0) * f.eval(x).abs().powf(p);
    let e = small_x_exponent(h);
    let r = half_line_integral(h, e, p * f.decay_hint.max(0.5), cfg)?.checked("norm_nu_p")?;
    Ok(r.value.powf(1.0 / p))
}

/// `||g||_{L_p(ℝ)}`.
pub fn norm_lp_line(g: &RealFunction, p: f64, cfg: &QuadConfig) -> Result<f64> {
    need_real_line(g)?;
    let d = (p * g.decay_hint).max(0.5);
    let r = integrate_semi_infinite(|t: f64| g.eval(t).abs().powf(p) + g.eval(-t).abs().powf(p), 0.0, d, cfg)?.checked("norm_lp")?;
    Ok(r.value.powf(1.0 / p))
}

/// `||F_α f||_{L_p(ℝ)}` with `F_α` evaluated pointwise inside the τ-quadrature.
pub fn forward_lp_norm(f: &RealFunction, alpha: f64, p: f64, cfg: &QuadConfig) -> Result<f64> {
    let trap = Trap::new();
    let inner = inner_cfg(cfg);
    let r = integrate_semi_infinite(
        |t: f64| 2.0 * trap.take(forward_point(f, alpha, t, &inner).and_then(|r| r.checked("forward"))).value.abs().powf(p),
        0.0,
        p * PI / 2.0,
        cfg,
    )?;
    trap.check()?;
    Ok(r.checked("forward_lp_norm")?.value.powf(1.0 / p))
}

/// `||G_α g||_{ν,r}` with `G_α` evaluated pointwise inside the x-quadrature.
pub fn adjoint_nu_r_norm(g: &RealFunction, alpha: f64, nu: f64, r: f64, cfg: &QuadConfig) -> Result<f64> {
    let trap = Trap::new();
    let inner = inner_cfg(cfg);
    let h = |x: f64| {
        x.powf(nu * r - 1.0) * trap.take(adjoint_point(g, alpha, x, &inner).and_then(|r| r.checked("adjoint"))).value.abs().powf(r)
    };
    let e = small_x_exponent(&h);
    let res = half_line_integral(&h, e, 2.0 * r, cfg)?;
    trap.check()?;
    Ok(res.checked("adjoint_nu_r_norm")?.value.powf(1.0 / r))
}

/// `∫ K⁴_{iτ/2}(x) dτ` over the real line, the inner integral of the Hilbert-Schmidt norm.
pub fn hs_inner(x: f64, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    let inner = inner_cfg(cfg);
    let trap = Trap::new();
    let r = integrate_semi_infinite(
        |t: f64| {
            let k = trap.take(k_value(c(0.0, t / 2.0), x, &inner)).re;
            2.0 * k.powi(4)
        },
        0.0,
        PI,
        cfg,
    )?;
    trap.check()?;
    Ok(r)
}

/// `(∫_0^∞ ∫ K⁴_{iτ/2}(x) dτ dx)^{1/2}`, the Hilbert-Schmidt norm of `F_0` (exactly `π²/2`).
pub fn hs_norm_f0(cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    let inner = inner_cfg(cfg);
    let trap = Trap::new();
    let h = |x: f64| trap.take(hs_inner(x, &inner).and_then(|r| r.checked("hs_inner"))).value;
    let r = half_line_integral(h, 0.0, 4.0, cfg)?;
    trap.check()?;
    let v = r.value.sqrt();
    Ok(QuadResult {
        value: v,
        err_est: r.err_est / (2.0 * v),
        evals: r.evals,
        converged: r.converged,
        l1: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(check_grid(&[0.0, 1.0, 2.0]).is_ok());
        assert!(check_grid(&[0.0, 0.0]).is_err());
        assert!(check_grid(&[]).is_err());
    }

    #[test]
    fn exponent_probe() {
        let p = small_x_exponent(|x: f64| x.powf(-0.3));
        assert!((p + 0.3).abs() < 1e-12);
    }
}
