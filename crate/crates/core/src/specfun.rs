//! Special functions of complex parameter: gamma, reciprocal gamma, beta, Macdonald `K_mu` of
//! complex order by quadrature, modified Bessel `I_nu` by series, and the hypergeometric series
//! `2F3` / `1F2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_even_decaying, QuadConfig, QuadResult};

pub type C64 = Complex64;

const EPS: f64 = f64::EPSILON;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn is_nonpositive_integer(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// `sin(pi x)`, exactly zero at integers.
pub fn sin_pi(x: f64) -> f64 {
    if x == x.round() {
        return 0.0;
    }
    let r = x - 2.0 * (x / 2.0).round();
    (PI * r).sin()
}

/// `cos(pi x)`, exactly zero at half-integers.
pub fn cos_pi(x: f64) -> f64 {
    if (x - 0.5) == (x - 0.5).round() {
        return 0.0;
    }
    let r = x - 2.0 * (x / 2.0).round();
    (PI * r).cos()
}

/// `ln sin(pi z)` on any branch, stable for large `|Im z|`. `None` at integers.
fn ln_sin_pi(z: C64) -> Option<C64> {
    if is_integer(z) {
        return None;
    }
    let x = z.re - 2.0 * (z.re / 2.0).round();
    let y = z.im;
    if y.abs() < 2.0 {
        let s = c(sin_pi(x) * (PI * y).cosh(), cos_pi(x) * (PI * y).sinh());
        return Some(s.ln());
    }
    // sin(pi z) = (e^{i pi z} - e^{-i pi z}) / (2i); keep the dominant exponential symbolic.
    let zr = c(x, y);
    if y > 0.0 {
        let small = (C64::i() * 2.0 * PI * zr).exp();
        // sin(πz) = -e^{-iπz}(1 - e^{2iπz})/(2i)
        Some(-C64::i() * PI * zr + (C64::new(1.0, 0.0) - small).ln() + C64::new(-(2.0f64.ln()), PI / 2.0))
    } else {
        let small = (-C64::i() * 2.0 * PI * zr).exp();
        // sin(πz) = e^{iπz}(1 - e^{-2iπz})/(2i)
        Some(C64::i() * PI * zr + (C64::new(1.0, 0.0) - small).ln() - C64::new(2.0f64.ln(), PI / 2.0))
    }
}

fn is_integer(z: C64) -> bool {
    z.im == 0.0 && z.re == z.re.round()
}

fn ln_gamma_right(z: C64) -> C64 {
    let zm = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
        x += p / (zm + i as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (zm + 0.5) * t.ln() - t + x.ln()
}

/// `ln Γ(z)` (not necessarily the principal branch; its exponential is Γ).
pub fn ln_gamma(z: C64) -> Result<C64> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole(z));
    }
    if z.re >= 0.5 {
        Ok(ln_gamma_right(z))
    } else {
        let ls = ln_sin_pi(z).ok_or(Error::Pole(z))?;
        Ok(PI.ln() - ls - ln_gamma_right(1.0 - z))
    }
}

pub fn gamma(z: C64) -> Result<C64> {
    if z.im == 0.0 && z.re > 0.0 && z.re <= 171.0 && z.re == z.re.round() {
        let mut f = 1.0;
        for k in 2..(z.re as u32) {
            f *= k as f64;
        }
        return Ok(c(f, 0.0));
    }
    Ok(ln_gamma(z)?.exp())
}

pub fn gamma_real(x: f64) -> Result<f64> {
    Ok(gamma(c(x, 0.0))?.re)
}

/// `1/Γ(z)`: entire, exactly zero at the poles of Γ.
pub fn recip_gamma(z: C64) -> C64 {
    if is_nonpositive_integer(z) {
        return C64::new(0.0, 0.0);
    }
    if z.im == 0.0 && z.re > 0.0 && z.re <= 171.0 && z.re == z.re.round() {
        return c(1.0 / gamma(z).unwrap().re, 0.0);
    }
    if z.re >= 0.5 {
        (-ln_gamma_right(z)).exp()
    } else {
        // 1/Γ(z) = Γ(1-z) sin(πz)/π
        let ls = ln_sin_pi(z).expect("non-integer");
        (ln_gamma_right(1.0 - z) + ls - PI.ln()).exp()
    }
}

pub fn beta(z: C64, w: C64) -> Result<C64> {
    let s = z + w;
    if is_nonpositive_integer(s) && !is_nonpositive_integer(z) && !is_nonpositive_integer(w) {
        return Err(Error::Pole(s));
    }
    Ok((ln_gamma(z)? + ln_gamma(w)? - ln_gamma(s)?).exp())
}

pub fn beta_real(a: f64, b: f64) -> Result<f64> {
    Ok(beta(c(a, 0.0), c(b, 0.0))?.re)
}

/// `|Γ(z)|²` computed in log space.
pub fn gamma_abs2(z: C64) -> Result<f64> {
    Ok((2.0 * ln_gamma(z)?.re).exp())
}

/// Upper limit `U` of the `K_mu` integral: `x (cosh U - 1) - |Re mu| U >= ln(1/tol) + 3`.
fn k_truncation(mu: C64, x: f64, tail_tol: f64) -> f64 {
    let need = (1.0 / tail_tol).ln() + 3.0;
    let m = mu.re.abs();
    let g = |u: f64| x * (u.cosh() - 1.0) - m * u;
    let mut hi = 1.0;
    while g(hi) < need && hi < 700.0 {
        hi *= 1.5;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < need {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `K_mu(x) = ∫_0^∞ exp(-x cosh u) cosh(mu u) du` by truncated quadrature.
pub fn bessel_k_quad(mu: C64, x: f64, cfg: &QuadConfig) -> Result<QuadResult<C64>> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("bessel_k needs x > 0, got {x}")));
    }
    let u_max = k_truncation(mu, x, cfg.tail_cut_tol);
    let res = integrate_even_decaying(
        |u: f64| {
            let e = (-x * u.cosh()).exp();
            (mu * u).cosh() * e
        },
        u_max,
        cfg,
    );
    Ok(res)
}

pub fn bessel_k(mu: C64, x: f64, cfg: &QuadConfig) -> Result<C64> {
    Ok(bessel_k_quad(mu, x, cfg)?.checked("bessel_k")?.value)
}

/// `K_nu(x)` for real order, same route.
pub fn bessel_k_real(nu: f64, x: f64, cfg: &QuadConfig) -> Result<f64> {
    Ok(bessel_k(c(nu, 0.0), x, cfg)?.re)
}

/// `I_nu(x) = Σ (x/2)^{nu+2k} / (k! Γ(nu+k+1))`.
pub fn bessel_i(nu: C64, x: f64) -> Result<C64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("bessel_i needs x > 0, got {x}")));
    }
    if nu.re < 0.0 && is_nonpositive_integer(nu) {
        // I_{-n} = I_n
        return bessel_i(-nu, x);
    }
    let half = x / 2.0;
    let q = half * half;
    let mut term = (nu * half.ln()).exp() * recip_gamma(nu + 1.0);
    let mut sum = term;
    let mut small = 0;
    for k in 0..2000usize {
        let kf = k as f64;
        term = term * q / ((kf + 1.0) * (nu + kf + 1.0));
        sum += term;
        let ratio = q / ((kf + 1.0) * (nu + kf + 1.0).norm());
        if term.norm() <= EPS * 0.25 * sum.norm() && ratio < 1.0 {
            small += 1;
            if small >= 3 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesBudget { terms: 2000 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesResult {
    pub value: C64,
    pub abs_err_est: f64,
    pub terms_used: usize,
    /// Largest partial-sum modulus over the modulus of the result (at least 1).
    pub cancellation_ratio: f64,
}

pub const SERIES_MAX_TERMS: usize = 4000;

fn same(a: C64, b: C64) -> bool {
    (a - b).norm() <= 4.0 * EPS * (1.0 + a.norm())
}

/// Generalized hypergeometric series `pFq(a; b; z)` for real `z`.
///
/// Numerator/denominator parameters that coincide are cancelled first. A denominator at a
/// non-positive integer is accepted only when the series has already terminated.
pub fn hyp_pfq(a: &[C64], b: &[C64], z: f64) -> Result<SeriesResult> {
    let mut a: Vec<C64> = a.to_vec();
    let mut b: Vec<C64> = b.to_vec();
    let mut i = 0;
    while i < a.len() {
        if let Some(j) = b.iter().position(|&bj| same(a[i], bj)) {
            a.remove(i);
            b.remove(j);
        } else {
            i += 1;
        }
    }
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut max_partial = 1.0f64;
    let mut small = 0;
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        let mut num = C64::new(z / (kf + 1.0), 0.0);
        for &ai in &a {
            num *= ai + kf;
        }
        let mut den = C64::new(1.0, 0.0);
        for &bj in &b {
            den *= bj + kf;
        }
        if den == C64::new(0.0, 0.0) {
            if num * term == C64::new(0.0, 0.0) {
                return Ok(finish(sum, max_partial, k + 1, 0.0));
            }
            return Err(Error::Pole(b.iter().map(|&bj| bj + kf).find(|v| v.norm() == 0.0).unwrap_or_default()));
        }
        let ratio = num / den;
        term *= ratio;
        sum += term;
        max_partial = max_partial.max(sum.norm());
        if term == C64::new(0.0, 0.0) {
            return Ok(finish(sum, max_partial, k + 2, 0.0));
        }
        if term.norm() <= EPS * 0.25 * sum.norm() && ratio.norm() < 1.0 {
            small += 1;
            if small >= 3 {
                return Ok(finish(sum, max_partial, k + 2, term.norm()));
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesBudget {
        terms: SERIES_MAX_TERMS,
    })
}

fn finish(sum: C64, max_partial: f64, terms: usize, last: f64) -> SeriesResult {
    let s = sum.norm();
    let ratio = if s > 0.0 { (max_partial / s).max(1.0) } else { f64::INFINITY };
    SeriesResult {
        value: sum,
        abs_err_est: 4.0 * EPS * max_partial * (terms as f64).sqrt() + last,
        terms_used: terms,
        cancellation_ratio: ratio,
    }
}

/// The first `n` coefficients `Π(a)_k / (Π(b)_k k!)` of a `pFq` series in its argument.
pub fn hyp_coefficients(a: &[C64], b: &[C64], n: usize) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(n);
    let mut term = C64::new(1.0, 0.0);
    for k in 0..n {
        out.push(term);
        let kf = k as f64;
        let mut num = C64::new(1.0 / (kf + 1.0), 0.0);
        for &ai in a {
            num *= ai + kf;
        }
        let mut den = C64::new(1.0, 0.0);
        for &bj in b {
            den *= bj + kf;
        }
        if den == C64::new(0.0, 0.0) {
            return Err(Error::Pole(b.iter().map(|&bj| bj + kf).find(|v| v.norm() == 0.0).unwrap_or_default()));
        }
        term *= num / den;
    }
    Ok(out)
}

pub fn hyp2f3(a1: C64, a2: C64, b1: C64, b2: C64, b3: C64, x2: f64) -> Result<SeriesResult> {
    hyp_pfq(&[a1, a2], &[b1, b2, b3], x2)
}

pub fn hyp1f2(a: C64, b1: C64, b2: C64, x2: f64) -> Result<SeriesResult> {
    hyp_pfq(&[a], &[b1, b2], x2)
}
