//! Fields `u_n(r, θ) = ∫ e^{θτ} |K_{(iτ+n)/2}(r)|² g(τ) dτ`, which solve
//! `Δu_n = u_{n+2} + 2u_n + u_{n-2}` in polar coordinates, their finite-difference residual,
//! and the initial-value workflow that recovers `g` from `u_n(r, 0)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{hermite, pchip_slopes};
use crate::inversion::{AdjointInverter, EpsilonSchedule};
use crate::kernel::{inner_cfg, phi_direct, KernelParams, Trap};
use crate::quadrature::{integrate_breakpoints, integrate_real_line, integrate_semi_infinite, QuadConfig, QuadResult};
use crate::specfun::{bessel_k_quad, c};
use crate::transforms::{Domain, RealFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeConfig {
    /// Only `|n|` matters: `u_n = u_{-n}`.
    pub n: i64,
    pub r_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    /// Weight parameter of the integrability class `L₁(e^{(2π-β)|τ|} dτ)`, in `[0, π/2)`.
    pub beta: f64,
}

impl PdeConfig {
    /// Uniform grids `r0, r0+h, .., r1` and `θ0, θ0+h, .., θ1`.
    pub fn uniform(n: i64, r: (f64, f64), theta: (f64, f64), h: f64, beta: f64) -> Result<Self> {
        let cfg = PdeConfig {
            n,
            r_grid: uniform_grid(r.0, r.1, h)?,
            theta_grid: uniform_grid(theta.0, theta.1, h)?,
            beta,
        };
        cfg.validate(2.0 * PI, true)?;
        Ok(cfg)
    }

    /// `theta_max` bounds the θ grid, inclusively or not.
    pub fn validate(&self, theta_max: f64, inclusive: bool) -> Result<()> {
        if !(0.0..PI / 2.0).contains(&self.beta) {
            return Err(Error::domain(format!("beta must lie in [0, pi/2), got {}", self.beta)));
        }
        if self.r_grid.is_empty() || self.theta_grid.is_empty() {
            return Err(Error::domain("r and theta grids must be nonempty"));
        }
        if self.r_grid.iter().any(|&r| !(r > 0.0 && r.is_finite())) || self.r_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("r grid must be positive and strictly increasing"));
        }
        if self.theta_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("theta grid must be strictly increasing"));
        }
        let (lo, hi) = (self.theta_grid[0], *self.theta_grid.last().unwrap());
        let inside = if inclusive { hi <= theta_max } else { hi < theta_max };
        if !(lo >= 0.0) || !inside {
            let close = if inclusive { "]" } else { ")" };
            return Err(Error::domain(format!("theta grid [{lo}, {hi}] leaves the allowed range [0, {theta_max}{close}")));
        }
        Ok(())
    }

    fn alpha(&self) -> f64 {
        self.n.unsigned_abs() as f64
    }
}

fn uniform_grid(a: f64, b: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) || !(b > a) {
        return Err(Error::domain(format!("need h > 0 and a < b, got h = {h}, [{a}, {b}]")));
    }
    let steps = ((b - a) / h).round();
    if ((b - a) / h - steps).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::domain(format!("[{a}, {b}] is not a whole number of steps {h}")));
    }
    Ok((0..=steps as usize).map(|k| a + k as f64 * h).collect())
}

/// Values on `r_grid × theta_grid`, one row per `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FieldGrid {
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub err_ests: Vec<Vec<f64>>,
    /// Whether every quadrature behind the value met its tolerance.
    pub converged: Vec<Vec<bool>>,
    pub warnings: Vec<String>,
}

impl FieldGrid {
    fn zeros(r: &[f64], theta: &[f64]) -> Self {
        FieldGrid {
            r: r.to_vec(),
            theta: theta.to_vec(),
            values: vec![vec![0.0; theta.len()]; r.len()],
            err_ests: vec![vec![0.0; theta.len()]; r.len()],
            converged: vec![vec![true; theta.len()]; r.len()],
            warnings: Vec::new(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// How `g` is integrated: by decay hint, or over a known compact support.
#[derive(Clone, Copy)]
enum Support {
    Decay(f64),
    Compact(f64),
}

fn u_point(g: &RealFunction, alpha: f64, r: f64, theta: f64, support: Support, cfg: &QuadConfig) -> Result<QuadResult<f64>> {
    let inner = inner_cfg(cfg);
    let trap = Trap::new();
    // Φ is even in τ, so fold the two half-lines together.
    let f = |t: f64| {
        let kp = KernelParams { alpha, tau: t };
        let ph = trap.take(phi_direct(kp, r, &inner).and_then(|v| v.checked("phi"))).value;
        let w = theta * t;
        ph * (w.exp() * g.eval(t) + (-w).exp() * g.eval(-t))
    };
    let res = match support {
        Support::Decay(d) => integrate_semi_infinite(f, 0.0, d, cfg)?,
        Support::Compact(t_max) => integrate_breakpoints(f, &[0.0, t_max], cfg),
    };
    trap.check()?;
    res.checked("u_field")
}

/// `∫ |g| e^{(2π-β)|τ|} dτ`, which must be finite for the field to exist up to `θ = 2π - β`.
pub fn integrability_probe(g: &RealFunction, beta: f64, cfg: &QuadConfig) -> Result<f64> {
    let w = 2.0 * PI - beta;
    let hint = g.decay_hint - w;
    if !(hint > 0.0) {
        return Err(Error::domain(format!(
            "integrability probe: decay hint {} of {} does not dominate the weight exp({w}|t|)",
            g.decay_hint, g.name
        )));
    }
    let r = integrate_real_line(|t: f64| g.eval(t).abs() * (w * t.abs()).exp(), hint, cfg)?;
    if !r.converged || !r.value.is_finite() {
        return Err(Error::domain(format!("integrability probe failed for {}: weighted L1 norm did not converge", g.name)));
    }
    Ok(r.value)
}

fn field_points(
    g: &RealFunction,
    alpha: f64,
    pts: &[(f64, f64)],
    beta: f64,
    support: Option<f64>,
    cfg: &QuadConfig,
) -> Result<Vec<QuadResult<f64>>> {
    pts.par_iter()
        .map(|&(r, th)| {
            let s = match support {
                Some(t) => Support::Compact(t),
                None => Support::Decay((PI / 2.0 - th + g.decay_hint.max(2.0 * PI - beta)).max(0.25)),
            };
            u_point(g, alpha, r, th, s, cfg)
        })
        .collect()
}

fn field_on(g: &RealFunction, alpha: f64, r: &[f64], theta: &[f64], beta: f64, support: Option<f64>, cfg: &QuadConfig) -> Result<FieldGrid> {
    let mut out = FieldGrid::zeros(r, theta);
    if g.is_zero {
        return Ok(out);
    }
    let pts: Vec<(f64, f64)> = r.iter().flat_map(|&a| theta.iter().map(move |&b| (a, b))).collect();
    let vals = field_points(g, alpha, &pts, beta, support, cfg)?;
    for (k, v) in vals.into_iter().enumerate() {
        let (i, j) = (k / theta.len(), k % theta.len());
        out.values[i][j] = v.value;
        out.err_ests[i][j] = v.err_est;
        out.converged[i][j] = v.converged;
    }
    let bad = out.converged.iter().flatten().filter(|c| !**c).count();
    if bad > 0 {
        out.warnings.push(format!("{bad} field values did not reach the requested tolerance"));
    }
    Ok(out)
}

fn need_real_line(g: &RealFunction) -> Result<()> {
    if g.domain != Domain::RealLine {
        return Err(Error::domain(format!("{} must be defined on the real line", g.name)));
    }
    Ok(())
}

/// `u_n` on the configured grid.
pub fn u_field(g: &RealFunction, cfg: &PdeConfig, quad: &QuadConfig) -> Result<FieldGrid> {
    cfg.validate(2.0 * PI, true)?;
    quad.validate()?;
    need_real_line(g)?;
    if g.is_zero {
        return Ok(FieldGrid::zeros(&cfg.r_grid, &cfg.theta_grid));
    }
    integrability_probe(g, cfg.beta, quad)?;
    field_on(g, cfg.alpha(), &cfg.r_grid, &cfg.theta_grid, cfg.beta, None, quad)
}

fn uniform_step(v: &[f64], what: &str) -> Result<f64> {
    if v.len() < 3 {
        return Err(Error::domain(format!("{what} grid needs at least 3 points for central differences")));
    }
    let h = v[1] - v[0];
    if v.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::domain(format!("{what} grid must be uniform")));
    }
    Ok(h)
}

/// Second-order central-difference residual of
/// `u_rr + u_r/r + u_θθ/r² - (u_{n+2} + 2u_n + u_{n-2})` at the interior grid points.
pub fn pde_residual(g: &RealFunction, cfg: &PdeConfig, quad: &QuadConfig) -> Result<FieldGrid> {
    cfg.validate(2.0 * PI, true)?;
    quad.validate()?;
    need_real_line(g)?;
    let hr = uniform_step(&cfg.r_grid, "r")?;
    let ht = uniform_step(&cfg.theta_grid, "theta")?;
    let (nr, nt) = (cfg.r_grid.len(), cfg.theta_grid.len());
    let ri = &cfg.r_grid[1..nr - 1];
    let ti = &cfg.theta_grid[1..nt - 1];
    if g.is_zero {
        return Ok(FieldGrid::zeros(ri, ti));
    }
    integrability_probe(g, cfg.beta, quad)?;
    let n = cfg.n;
    let u = field_on(g, cfg.alpha(), &cfg.r_grid, &cfg.theta_grid, cfg.beta, None, quad)?;
    let up = field_on(g, (n + 2).unsigned_abs() as f64, ri, ti, cfg.beta, None, quad)?;
    let um = if (n - 2).abs() == (n + 2).abs() {
        up.clone()
    } else {
        field_on(g, (n - 2).unsigned_abs() as f64, ri, ti, cfg.beta, None, quad)?
    };
    let mut out = FieldGrid::zeros(ri, ti);
    let mut quad_err: f64 = 0.0;
    for i in 1..nr - 1 {
        let r = cfg.r_grid[i];
        let amp = 4.0 / (hr * hr) + 1.0 / (hr * r) + 4.0 / (ht * ht * r * r) + 4.0;
        for j in 1..nt - 1 {
            let v = &u.values;
            let urr = (v[i + 1][j] - 2.0 * v[i][j] + v[i - 1][j]) / (hr * hr);
            let ur = (v[i + 1][j] - v[i - 1][j]) / (2.0 * hr);
            let utt = (v[i][j + 1] - 2.0 * v[i][j] + v[i][j - 1]) / (ht * ht);
            let rhs = up.values[i - 1][j - 1] + 2.0 * v[i][j] + um.values[i - 1][j - 1];
            out.values[i - 1][j - 1] = urr + ur / r + utt / (r * r) - rhs;
            let e = [u.err_ests[i - 1][j], u.err_ests[i][j], u.err_ests[i + 1][j], u.err_ests[i][j - 1], u.err_ests[i][j + 1]]
                .iter()
                .fold(0.0f64, |m, &x| m.max(x))
                .max(up.err_ests[i - 1][j - 1])
                .max(um.err_ests[i - 1][j - 1]);
            out.err_ests[i - 1][j - 1] = amp * e;
            out.converged[i - 1][j - 1] = [(i - 1, j), (i, j), (i + 1, j), (i, j - 1), (i, j + 1)].iter().all(|&(a, b)| u.converged[a][b])
                && up.converged[i - 1][j - 1]
                && um.converged[i - 1][j - 1];
            quad_err = quad_err.max(amp * e);
        }
    }
    let max = out.max_abs();
    if max > RESIDUAL_BUDGET && max > 10.0 * quad_err {
        out.warnings.push(format!(
            "grid too coarse: max residual {max:.3e} exceeds {RESIDUAL_BUDGET:e} and is dominated by the h^2 discretization error (hr = {hr}, htheta = {ht})"
        ));
    }
    Ok(out)
}

/// Residual level above which the discretization error is reported as too large.
pub const RESIDUAL_BUDGET: f64 = 1e-3;

/// Maximum residual on the coarse interior points at steps `h` and `h/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualOrder {
    pub max_coarse: f64,
    pub max_fine: f64,
    /// `max_coarse / max_fine`, about 4 for a second-order scheme.
    pub ratio: f64,
}

/// Halves both grid steps and compares the residual at the shared interior points.
pub fn residual_order(g: &RealFunction, cfg: &PdeConfig, quad: &QuadConfig) -> Result<ResidualOrder> {
    let refine = |v: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * v.len() - 1);
        for w in v.windows(2) {
            out.push(w[0]);
            out.push(0.5 * (w[0] + w[1]));
        }
        out.push(*v.last().unwrap());
        out
    };
    let fine_cfg = PdeConfig {
        r_grid: refine(&cfg.r_grid),
        theta_grid: refine(&cfg.theta_grid),
        ..cfg.clone()
    };
    let coarse = pde_residual(g, cfg, quad)?;
    let fine = pde_residual(g, &fine_cfg, quad)?;
    let mut max_fine: f64 = 0.0;
    for i in 0..coarse.r.len() {
        for j in 0..coarse.theta.len() {
            // coarse interior point (i+1, j+1) sits at fine interior index (2i+1, 2j+1)
            max_fine = max_fine.max(fine.values[2 * i + 1][2 * j + 1].abs());
        }
    }
    let max_coarse = coarse.max_abs();
    Ok(ResidualOrder {
        max_coarse,
        max_fine,
        ratio: max_coarse / max_fine,
    })
}

/// `(|K_{(n+iτ)/2}(x)|, e^{-β|τ|/2} K_{n/2}(x cos β))`, the bound behind the field's existence.
pub fn decay_bound_check(n: i64, tau: f64, x: f64, beta: f64) -> Result<(f64, f64)> {
    if !(0.0..PI / 2.0).contains(&beta) || !(x > 0.0) || !tau.is_finite() {
        return Err(Error::domain(format!("need beta in [0, pi/2), x > 0, finite tau; got ({beta}, {x}, {tau})")));
    }
    let cfg = QuadConfig::default();
    let mu = n.unsigned_abs() as f64 / 2.0;
    let lhs = bessel_k_quad(c(mu, tau / 2.0), x, &cfg)?.checked("bessel_k")?.value.norm();
    let k = bessel_k_quad(c(mu, 0.0), x * beta.cos(), &cfg)?.checked("bessel_k")?.value.re;
    Ok((lhs, (-beta * tau.abs() / 2.0).exp() * k))
}

/// Sampling step and range for the recovered `g`.
pub const IVP_TAU_STEP: f64 = 0.1;
pub const IVP_TAU_MAX: f64 = 8.0;
/// Sampling stops once this many consecutive samples fall below `IVP_CUTOFF` times the peak.
const IVP_QUIET_RUN: usize = 5;
const IVP_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvpSolution {
    pub field: FieldGrid,
    pub tau: Vec<f64>,
    /// Recovered `g` at `tau`; beyond the last sample it is taken as zero.
    pub g: Vec<f64>,
    /// `max |u_n(r, 0) - G_n(r)|` over the r grid.
    pub defect: f64,
    pub all_monotone: bool,
    pub all_converged: bool,
}

/// Recovers `g` from `G_n = u_n(·, 0)` by the adjoint inversion with `α = |n|` and builds the field.
///
/// The inversion was established for real `α`; integer `n > 1` goes through the same code.
pub fn solve_ivp(g_n: &RealFunction, n: i64, cfg: &PdeConfig, sched: &EpsilonSchedule, quad: &QuadConfig) -> Result<IvpSolution> {
    let cfg = PdeConfig { n, ..cfg.clone() };
    cfg.validate(PI / 2.0, false)?;
    quad.validate()?;
    sched.validate()?;
    if g_n.domain != Domain::HalfLine {
        return Err(Error::domain(format!("{} must be defined on the half line", g_n.name)));
    }
    if g_n.is_zero {
        return Ok(IvpSolution {
            field: FieldGrid::zeros(&cfg.r_grid, &cfg.theta_grid),
            tau: Vec::new(),
            g: Vec::new(),
            defect: 0.0,
            all_monotone: true,
            all_converged: true,
        });
    }
    let alpha = cfg.alpha();
    let gf = |t: f64| Ok(g_n.eval(t));
    let inv = AdjointInverter::new(&gf, alpha)?;
    let (mut tau, mut gs) = (Vec::new(), Vec::new());
    let (mut all_monotone, mut all_converged) = (true, true);
    let mut k = 1usize;
    loop {
        let block: Vec<f64> = (k..k + 8).map(|j| j as f64 * IVP_TAU_STEP).filter(|&t| t <= IVP_TAU_MAX + 1e-12).collect();
        if block.is_empty() {
            break;
        }
        k += block.len();
        let res: Result<Vec<_>> = block.par_iter().map(|&t| inv.invert(t, sched, quad)).collect();
        for r in res? {
            all_monotone &= r.monotone;
            all_converged &= r.converged;
            tau.push(r.x);
            gs.push(r.value);
        }
        let peak = gs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gs.len() >= IVP_QUIET_RUN && gs[gs.len() - IVP_QUIET_RUN..].iter().all(|v| v.abs() < IVP_CUTOFF * peak) {
            break;
        }
    }
    // even extension, so the interpolant is symmetric through τ = 0
    let mut xs: Vec<f64> = tau.iter().rev().map(|t| -t).collect();
    xs.extend(&tau);
    let mut ys: Vec<f64> = gs.iter().rev().copied().collect();
    ys.extend(&gs);
    let d = pchip_slopes(&xs, &ys);
    let t_max = *tau.last().unwrap();
    let g = RealFunction::new("recovered g", Domain::RealLine, 0.0, move |t| {
        if t.abs() > t_max {
            0.0
        } else {
            hermite(&xs, &ys, &d, t)
        }
    });
    let field = field_on(&g, alpha, &cfg.r_grid, &cfg.theta_grid, cfg.beta, Some(t_max), quad)?;
    let at0 = field_on(&g, alpha, &cfg.r_grid, &[0.0], cfg.beta, Some(t_max), quad)?;
    let defect = cfg
        .r_grid
        .iter()
        .zip(&at0.values)
        .fold(0.0f64, |m, (&r, row)| m.max((row[0] - g_n.eval(r)).abs()));
    Ok(IvpSolution {
        field,
        tau,
        g: gs,
        defect,
        all_monotone,
        all_converged,
    })
}
