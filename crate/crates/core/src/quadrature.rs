//! Adaptive quadrature: Gauss-Kronrod (10/21) with a global error heap, semi-infinite and
//! whole-line wrappers with exponential tail truncation, vertical contours, and a halving
//! trapezoid rule for even analytic integrands that decay doubly exponentially.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// Values that can be integrated: reals and complex numbers.
pub trait Scalar:
    Copy + Send + Sync + std::fmt::Debug + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Threshold below which a semi-infinite tail is dropped.
    pub tail_cut_tol: f64,
    /// Overrides the truncation point of semi-infinite integrals.
    pub initial_truncation: Option<f64>,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_subdivisions: 2000,
            tail_cut_tol: 1e-15,
            initial_truncation: None,
        }
    }
}

impl QuadConfig {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        let cfg = QuadConfig {
            rel_tol,
            abs_tol,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol >= 1e-14) {
            return Err(Error::domain(format!("rel_tol {} below 1e-14", self.rel_tol)));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::domain("abs_tol must be non-negative"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::domain("max_subdivisions must be at least 1"));
        }
        if !(self.tail_cut_tol > 0.0) {
            return Err(Error::domain("tail_cut_tol must be positive"));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol.max(1e-14);
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_truncation(mut self, t: f64) -> Self {
        self.initial_truncation = Some(t);
        self
    }

    fn target(&self, value: f64, l1: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value).max(64.0 * EPS * l1)
    }
}

/// Value with error estimate.
///
/// `converged` means `err_est <= max(abs_tol, rel_tol*|value|, 64*eps*l1)`, where `l1`
/// approximates the integral of `|f|`; the last term is the roundoff floor below which no
/// double-precision rule can go.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub err_est: f64,
    pub evals: usize,
    pub converged: bool,
    pub l1: f64,
}

impl<T: Scalar> Default for QuadResult<T> {
    fn default() -> Self {
        QuadResult {
            value: T::zero(),
            err_est: f64::INFINITY,
            evals: 0,
            converged: false,
            l1: 0.0,
        }
    }
}

impl<T: Scalar> QuadResult<T> {
    /// Turn a non-converged result into an error so it cannot be consumed silently.
    pub fn checked(self, context: &str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence {
                context: context.to_string(),
                value: self.value.modulus(),
                err_est: self.err_est,
            })
        }
    }

    fn join(self, other: Self) -> Self {
        QuadResult {
            value: self.value + other.value,
            err_est: self.err_est + other.err_est,
            evals: self.evals + other.evals,
            converged: self.converged && other.converged,
            l1: self.l1 + other.l1,
        }
    }
}

// Kronrod 21-point abscissae and weights, with the embedded 10-point Gauss weights.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208643905784,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
    l1: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk21<T: Scalar, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> Segment<T> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = T::zero();
    let mut l1 = fc.modulus() * WGK[10];
    let mut vals = [(T::zero(), T::zero()); 10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        vals[j] = (f1, f2);
        kron = kron + (f1 + f2) * WGK[j];
        l1 += (f1.modulus() + f2.modulus()) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    // QUADPACK-style scaling of |K - G| by the variation of f about its mean.
    let mean = kron * 0.5;
    let mut asc = (fc - mean).modulus() * WGK[10];
    for j in 0..10 {
        asc += ((vals[j].0 - mean).modulus() + (vals[j].1 - mean).modulus()) * WGK[j];
    }
    let asc = asc * h.abs();
    let raw = ((kron - gauss) * h).modulus();
    let mut err = raw;
    if asc > 0.0 && raw > 0.0 {
        err = asc * (200.0 * raw / asc).powf(1.5).min(1.0);
    }
    let l1 = l1 * h.abs();
    if l1 > 0.0 {
        err = err.max(50.0 * EPS * l1);
    }
    if !err.is_finite() {
        err = f64::INFINITY;
    }
    Segment {
        a,
        b,
        value: kron * h,
        err,
        l1,
    }
}

/// Adaptive integration over `[points[0], points[last]]` with the interior points as initial
/// breakpoints.
pub fn integrate_breakpoints<T: Scalar, F: Fn(f64) -> T>(f: F, points: &[f64], cfg: &QuadConfig) -> QuadResult<T> {
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Segment<T>> = Vec::new();
    let mut evals = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk21(&f, w[0], w[1]));
            evals += 21;
        }
    }
    let total = |heap: &BinaryHeap<Segment<T>>, done: &[Segment<T>]| {
        let mut v = T::zero();
        let mut e = 0.0;
        let mut l = 0.0;
        for s in heap.iter().chain(done.iter()) {
            v = v + s.value;
            e += s.err;
            l += s.l1;
        }
        (v, e, l)
    };
    let mut nseg = heap.len();
    loop {
        let (v, e, l) = total(&heap, &done);
        let target = cfg.target(v.modulus(), l);
        if e <= target || e.is_nan() {
            return QuadResult {
                value: v,
                err_est: e,
                evals,
                converged: e <= target,
                l1: l,
            };
        }
        if nseg >= cfg.max_subdivisions || heap.is_empty() {
            return QuadResult {
                value: v,
                err_est: e,
                evals,
                converged: false,
                l1: l,
            };
        }
        let seg = heap.pop().unwrap();
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            done.push(seg);
            continue;
        }
        let left = gk21(&f, seg.a, mid);
        let right = gk21(&f, mid, seg.b);
        evals += 42;
        nseg += 1;
        heap.push(left);
        heap.push(right);
    }
}

pub fn integrate_finite<T: Scalar, F: Fn(f64) -> T>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult<T>> {
    if !(a < b) {
        return Err(Error::domain(format!("integrate_finite needs a < b, got [{a}, {b}]")));
    }
    Ok(integrate_breakpoints(f, &[a, b], cfg))
}

/// `∫_a^∞ f`, with `f` eventually dominated by `exp(-decay_hint*x)`.
///
/// The interval is cut where the hinted bound falls below `tail_cut_tol`; the cut is pushed
/// further while the tail estimate `|f(T)|/decay_hint` still matters, and that estimate is
/// added to the error.
pub fn integrate_semi_infinite<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    decay_hint: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    integrate_semi_infinite_points(f, a, &[], decay_hint, cfg)
}

/// As [`integrate_semi_infinite`] with interior breakpoints (ignored beyond the cut).
pub fn integrate_semi_infinite_points<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    interior: &[f64],
    decay_hint: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    let mut t = match cfg.initial_truncation {
        Some(t) => a + t.max(0.0),
        None => {
            if !(decay_hint > 0.0) {
                return Err(Error::domain("decay_hint must be positive without a truncation override"));
            }
            a + (1.0 / cfg.tail_cut_tol).ln() / decay_hint
        }
    };
    let rate = if decay_hint > 0.0 { decay_hint } else { 1.0 };
    let mut pts = vec![a];
    pts.extend(interior.iter().copied().filter(|&p| p > a && p < t));
    pts.push(t);
    let mut res = integrate_breakpoints(&f, &pts, cfg);
    for _ in 0..12 {
        let tail = f(t).modulus() / rate;
        res.evals += 1;
        let target = cfg.target(res.value.modulus(), res.l1);
        if !tail.is_finite() {
            res.converged = false;
            break;
        }
        if tail <= 0.1 * target || cfg.initial_truncation.is_some() {
            res.err_est += tail;
            break;
        }
        let step = ((tail / (0.01 * target)).ln() / rate).max(1.0 / rate);
        let extra = integrate_breakpoints(&f, &[t, t + step], cfg);
        res = res.join(extra);
        t += step;
    }
    Ok(res)
}

/// `∫_{-∞}^{∞} f`, split at the origin.
pub fn integrate_real_line<T: Scalar, F: Fn(f64) -> T>(f: F, decay_hint: f64, cfg: &QuadConfig) -> Result<QuadResult<T>> {
    integrate_real_line_points(f, &[], decay_hint, cfg)
}

/// As [`integrate_real_line`] with breakpoints on either side of the origin.
pub fn integrate_real_line_points<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    points: &[f64],
    decay_hint: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    let pos: Vec<f64> = points.iter().copied().filter(|&p| p > 0.0).collect();
    let neg: Vec<f64> = points.iter().copied().filter(|&p| p < 0.0).map(|p| -p).collect();
    let mut neg = neg;
    neg.sort_by(f64::total_cmp);
    let mut pos = pos;
    pos.sort_by(f64::total_cmp);
    let right = integrate_semi_infinite_points(&f, 0.0, &pos, decay_hint, cfg)?;
    let left = integrate_semi_infinite_points(|x: f64| f(-x), 0.0, &neg, decay_hint, cfg)?;
    Ok(right.join(left))
}

/// `∫ f(s) ds` along `Re s = mu`, i.e. `i ∫ f(mu + i t) dt`. No `1/(2πi)` factor.
pub fn integrate_contour_vertical<F: Fn(Complex64) -> Complex64>(
    f: F,
    mu: f64,
    points: &[f64],
    decay_hint: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<Complex64>> {
    let r = integrate_real_line_points(|t: f64| f(Complex64::new(mu, t)), points, decay_hint, cfg)?;
    Ok(QuadResult {
        value: r.value * Complex64::i(),
        ..r
    })
}

/// `∫_0^U f` for an even, analytic integrand that is negligible at `U`.
///
/// For such integrands the trapezoid rule converges geometrically (the Euler-Maclaurin
/// corrections vanish), so the step is halved until two successive sums agree.
pub fn integrate_even_decaying<T: Scalar, F: Fn(f64) -> T>(f: F, upper: f64, cfg: &QuadConfig) -> QuadResult<T> {
    let mut n = 16usize;
    let mut h = upper / n as f64;
    let mut sum = f(0.0) * 0.5;
    let mut l1 = sum.modulus();
    for k in 1..=n {
        let v = f(k as f64 * h);
        sum = sum + v;
        l1 += v.modulus();
    }
    let mut evals = n + 1;
    let mut prev = sum * h;
    for _ in 0..14 {
        let hn = h * 0.5;
        for k in 0..n {
            let v = f((2 * k + 1) as f64 * hn);
            sum = sum + v;
            l1 += v.modulus();
        }
        evals += n;
        n *= 2;
        h = hn;
        let cur = sum * h;
        let err = (cur - prev).modulus();
        let l1h = l1 * h;
        let target = cfg.target(cur.modulus(), l1h);
        if err <= target {
            return QuadResult {
                value: cur,
                err_est: err.max(EPS * l1h),
                evals,
                converged: true,
                l1: l1h,
            };
        }
        prev = cur;
    }
    QuadResult {
        value: prev,
        err_est: f64::INFINITY,
        evals,
        converged: false,
        l1: l1 * h,
    }
}
