//! One function per subcommand, each producing a `Table`.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use lebedev::inversion::*;
use lebedev::kernel::*;
use lebedev::pde::*;
use lebedev::specfun::{bessel_k, c};
use lebedev::transforms::*;
use lebedev::{QuadConfig, QuadResult};

use crate::functions::{builtin, SampledInput};
use crate::grid::parse_grid;
use crate::table::Table;
use crate::{Cmd, Common, FunctionArgs, Method, Route, Schedule, Suite};

/// Sampling of `F_α` that the inversion tests and docs use.
pub const INVERT_T_MAX: f64 = 120.0;
pub const INVERT_STEP: f64 = 0.125;

fn quad(common: &Common) -> Result<QuadConfig> {
    if !(1e-12..=1e-2).contains(&common.tol) {
        bail!("--tol must lie in [1e-12, 1e-2], got {}", common.tol);
    }
    Ok(QuadConfig::default().with_rel_tol(common.tol))
}

fn base_table(name: &str, columns: &[&str], common: &Common, q: &QuadConfig) -> Table {
    let mut t = Table::new(name, columns);
    t.meta("version", env!("CARGO_PKG_VERSION"));
    t.meta("tolerances", serde_json::json!({ "rel_tol": q.rel_tol, "abs_tol": q.abs_tol, "tail_cut_tol": q.tail_cut_tol }));
    t.meta("seed", common.seed);
    t
}

/// Row for a point result; numerical failures become a non-converged NaN row with a warning,
/// precondition violations abort the command.
fn point_row(r: lebedev::Result<QuadResult<f64>>, warnings: &mut Vec<String>, at: String) -> Result<(f64, f64, bool)> {
    match r {
        Ok(v) => Ok((v.value, v.err_est, v.converged)),
        Err(e) if e.is_precondition() => Err(e).with_context(|| at),
        Err(e) => {
            warnings.push(format!("{at}: {e}"));
            Ok((f64::NAN, f64::NAN, false))
        }
    }
}

fn function(args: &FunctionArgs, domain: Domain, default: Option<&str>, t: &mut Table) -> Result<RealFunction> {
    match (&args.function, &args.input) {
        (Some(spec), None) => {
            t.meta("function", spec);
            builtin(spec, domain)
        }
        (None, Some(path)) => {
            let s = SampledInput::read(path)?;
            let (f, rate) = s.to_function(&path.display().to_string(), domain, args.tail)?;
            t.meta("function", serde_json::json!({ "input": path.display().to_string(), "tail": args.tail, "tail_rate": rate }));
            Ok(f)
        }
        (None, None) => match default {
            Some(spec) => {
                t.meta("function", spec);
                builtin(spec, domain)
            }
            None => bail!("give --function or --input"),
        },
        (Some(_), Some(_)) => bail!("--function and --input are exclusive"),
    }
}

pub fn dispatch(cmd: &Cmd) -> Result<Table> {
    match cmd {
        Cmd::Kernel { alpha, tau, x, route, mu, common } => kernel(*alpha, tau, x, *route, *mu, common),
        Cmd::Forward {
            alpha,
            tau,
            method,
            nu,
            f,
            common,
        } => forward_cmd(*alpha, tau, *method, *nu, f, common),
        Cmd::Adjoint { alpha, x, f, common } => adjoint_cmd(*alpha, x, f, common),
        Cmd::Invert { alpha, input, x, common } => invert_cmd(*alpha, input, x, common),
        Cmd::InvertAdjoint {
            alpha,
            x,
            f,
            schedule,
            common,
        } => invert_adjoint_cmd(*alpha, x, f, schedule, common),
        Cmd::Pde {
            n,
            r,
            theta,
            beta,
            residual,
            ivp,
            f,
            schedule,
            common,
        } => pde_cmd(*n, r, theta, *beta, *residual, *ivp, f, schedule, common),
        Cmd::Verify { suite, cases, common } => match suite {
            Suite::Identities => verify_identities(common),
            Suite::Properties => verify_properties(*cases, common),
        },
    }
}

fn kernel(alpha: f64, tau: &str, x: &str, route: Route, mu: Option<f64>, common: &Common) -> Result<Table> {
    let q = quad(common)?;
    let (taus, xs) = (parse_grid(tau)?, parse_grid(x)?);
    let mut t = base_table("kernel", &["alpha", "tau", "x", "value", "err_est", "converged"], common, &q);
    let mu = mu.unwrap_or(alpha + 0.5);
    t.meta("route", format!("{route:?}").to_lowercase());
    if route == Route::MellinBarnes {
        t.meta("contour_mu", mu);
    }
    let pts: Vec<(f64, f64)> = taus.iter().flat_map(|&a| xs.iter().map(move |&b| (a, b))).collect();
    let res: Vec<lebedev::Result<QuadResult<f64>>> = pts
        .par_iter()
        .map(|&(tau, x)| {
            let p = KernelParams::new(alpha, tau)?;
            match route {
                Route::Direct => phi_direct(p, x, &q),
                Route::Integral => phi_integral(p, x, &q),
                Route::Cosh => phi_cosh_route(p, x, &q),
                Route::MellinBarnes => phi_mellin_barnes(p, x, &ContourConfig { mu, cfg: q }),
            }
        })
        .collect();
    let mut warnings = Vec::new();
    for (&(tau, x), r) in pts.iter().zip(res) {
        let (v, e, ok) = point_row(r, &mut warnings, format!("tau = {tau}, x = {x}"))?;
        t.push(vec![alpha.into(), tau.into(), x.into(), v.into(), e.into(), ok.into()]);
    }
    t.meta("warnings", warnings);
    Ok(t)
}

fn mellin_abscissa(f: &RealFunction, alpha: f64) -> Result<f64> {
    let hi = 1.0 - alpha;
    let lo = f.moment_data.as_ref().map_or(0.0, |m| m.strip_lo).max(hi - 2.0);
    if !(lo < hi) {
        bail!("no Mellin abscissa for {} with alpha = {alpha}: need strip_lo < nu < 1 - alpha", f.name);
    }
    Ok(0.5 * (lo + hi))
}

fn forward_cmd(alpha: f64, tau: &str, method: Method, nu: Option<f64>, fa: &FunctionArgs, common: &Common) -> Result<Table> {
    let q = quad(common)?;
    let taus = parse_grid(tau)?;
    let mut t = base_table("forward", &["tau", "value", "err_est", "converged"], common, &q);
    let f = function(fa, Domain::HalfLine, None, &mut t)?;
    t.meta("alpha", alpha);
    t.meta("method", format!("{method:?}").to_lowercase());
    let mut warnings = Vec::new();
    match method {
        Method::Composition => {
            let r = forward_via_composition(&f, alpha, &taus, &q)?;
            for k in 0..taus.len() {
                t.push(vec![taus[k].into(), r.values[k].into(), r.err_ests[k].into(), r.converged[k].into()]);
            }
            warnings.extend(r.warnings);
        }
        Method::Direct | Method::Mellin => {
            let nu = match (method, nu) {
                (Method::Mellin, Some(v)) => v,
                (Method::Mellin, None) => mellin_abscissa(&f, alpha)?,
                _ => 0.0,
            };
            if method == Method::Mellin {
                t.meta("contour_nu", nu);
            }
            let res: Vec<_> = taus
                .par_iter()
                .map(|&tau| match method {
                    Method::Mellin => forward_via_mellin(&f, alpha, tau, nu, &q),
                    _ => forward_point(&f, alpha, tau, &q),
                })
                .collect();
            for (&tau, r) in taus.iter().zip(res) {
                let (v, e, ok) = point_row(r, &mut warnings, format!("tau = {tau}"))?;
                t.push(vec![tau.into(), v.into(), e.into(), ok.into()]);
            }
        }
    }
    t.meta("warnings", warnings);
    Ok(t)
}

fn adjoint_cmd(alpha: f64, x: &str, fa: &FunctionArgs, common: &Common) -> Result<Table> {
    let q = quad(common)?;
    let xs = parse_grid(x)?;
    let mut t = base_table("adjoint", &["x", "value", "err_est", "converged"], common, &q);
    let g = function(fa, Domain::RealLine, None, &mut t)?;
    t.meta("alpha", alpha);
    let res: Vec<_> = xs.par_iter().map(|&x| adjoint_point(&g, alpha, x, &q)).collect();
    let mut warnings = Vec::new();
    for (&x, r) in xs.iter().zip(res) {
        let (v, e, ok) = point_row(r, &mut warnings, format!("x = {x}"))?;
        t.push(vec![x.into(), v.into(), e.into(), ok.into()]);
    }
    t.meta("warnings", warnings);
    Ok(t)
}

fn invert_cmd(alpha: f64, input: &Path, x: &str, common: &Common) -> Result<Table> {
    let q = quad(common)?;
    let xs = parse_grid(x)?;
    let s = SampledInput::read(input)?;
    let ft = SampledTransform::new(alpha, &s.abscissas, &s.values).with_context(|| format!("sampled transform from {}", input.display()))?;
    let mut t = base_table("invert", &["x", "value", "err_est", "converged"], common, &q);
    t.meta("alpha", alpha);
    t.meta("input", input.display().to_string());
    t.meta("truncation", serde_json::json!({ "t_max": ft.t_max(), "samples": ft.taus.len() }));
    t.meta("tail_model", &ft.tail);
    let res: Vec<lebedev::Result<InversionValue>> = xs
        .par_iter()
        .map(|&x| {
            if alpha == 0.0 {
                invert_forward_alpha0(&ft, x, &q)
            } else if alpha == 1.0 {
                invert_forward_alpha1(&ft, x, &q)
            } else {
                invert_forward(&ft, x, &q)
            }
        })
        .collect();
    let mut warnings = Vec::new();
    for (&x, r) in xs.iter().zip(res) {
        let r = r.map(|v| QuadResult {
            value: v.value,
            err_est: v.err_est,
            evals: 0,
            converged: v.converged,
            l1: 0.0,
        });
        let (v, e, ok) = point_row(r, &mut warnings, format!("x = {x}"))?;
        t.push(vec![x.into(), v.into(), e.into(), ok.into()]);
    }
    t.meta("warnings", warnings);
    Ok(t)
}

fn schedule(s: &Schedule) -> Result<EpsilonSchedule> {
    Ok(EpsilonSchedule::new(s.eps0, s.ratio, s.max_steps, s.conv_tol)?)
}

fn invert_adjoint_cmd(alpha: f64, x: &str, fa: &FunctionArgs, sc: &Schedule, common: &Common) -> Result<Table> {
    let q = quad(common)?;
    let xs = parse_grid(x)?;
    let sched = schedule(sc)?;
    let mut t = base_table(
        "invert-adjoint",
        &["x", "value", "err_est", "converged", "monotone", "at_zero", "steps"],
        common,
        &q,
    );
    t.meta("alpha", alpha);
    t.meta("schedule", serde_json::json!({ "eps0": sched.eps0, "ratio": sched.ratio, "max_steps": sched.max_steps, "conv_tol": sched.conv_tol }));
    // G_α is either computed from a builtin g or read from samples on t > 0
    let gfun: Box<dyn Fn(f64) -> lebedev::Result<f64> + Sync> = match (&fa.function, &fa.input) {
        (Some(spec), None) => {
            let g = builtin(spec, Domain::RealLine)?;
            t.meta("function", serde_json::json!({ "g": spec, "G": "adjoint of g" }));
            Box::new(move |s: f64| adjoint_point(&g, alpha, s, &q).and_then(|r| r.checked("adjoint")).map(|r| r.value))
        }
        (None, Some(path)) => {
            let s = SampledInput::read(path)?;
            let lo = s.abscissas[0];
            let (g, rate) = s.to_function("G", Domain::HalfLine, fa.tail)?;
            t.meta("function", serde_json::json!({ "G": path.display().to_string(), "tail": fa.tail, "tail_rate": rate }));
            Box::new(move |s: f64| {
                if s < lo {
                    Err(lebedev::Error::domain(format!("G sampled from t = {lo}, cannot evaluate at t = {s}")))
                } else {
                    Ok(g.eval(s))
                }
            })
        }
        _ => bail!("give exactly one of --function (g) or --input (samples of G)"),
    };
    let inv = AdjointInverter::new(&*gfun, alpha)?;
    t.meta("small_t_fit_residual", inv.expansion().residual);
    let res: Vec<_> = xs.par_iter().map(|&x| inv.invert(x, &sched, &q)).collect();
    let mut warnings = Vec::new();
    for (&x, r) in xs.iter().zip(res) {
        match r {
            Ok(r) => {
                let e = &r.extrapolated;
                let err = if e.len() >= 2 { (e[e.len() - 1] - e[e.len() - 2]).abs() } else { f64::NAN };
                t.push(vec![
                    x.into(),
                    r.value.into(),
                    err.into(),
                    r.converged.into(),
                    r.monotone.into(),
                    r.at_zero.into(),
                    (r.iterates.len() as f64).into(),
                ]);
            }
            Err(e) if e.is_precondition() => return Err(e).with_context(|| format!("x = {x}")),
            Err(e) => {
                warnings.push(format!("x = {x}: {e}"));
                t.push(vec![x.into(), f64::NAN.into(), f64::NAN.into(), false.into(), false.into(), f64::NAN.into(), 0.0.into()]);
            }
        }
    }
    t.meta("warnings", warnings);
    Ok(t)
}

#[allow(clippy::too_many_arguments)]
fn pde_cmd(
    n: i64,
    r: &str,
    theta: &str,
    beta: f64,
    residual: bool,
    ivp: bool,
    fa: &FunctionArgs,
    sc: &Schedule,
    common: &Common,
) -> Result<Table> {
    let q = quad(common)?;
    let cfg = PdeConfig {
        n,
        r_grid: parse_grid(r)?,
        theta_grid: parse_grid(theta)?,
        beta,
    };
    let mut t = base_table("pde", &["r", "theta", "value", "err_est", "converged"], common, &q);
    t.meta("n", n);
    t.meta("beta", beta);
    let (field, mode) = if ivp {
        let gn = function(fa, Domain::HalfLine, None, &mut t)?;
        let s = solve_ivp(&gn, n, &cfg, &schedule(sc)?, &q)?;
        t.summarize("defect", s.defect);
        t.summarize("all_monotone", s.all_monotone);
        t.summarize("all_converged", s.all_converged);
        t.summarize("g_samples", s.tau.len());
        t.meta("g_sampling", serde_json::json!({ "step": IVP_TAU_STEP, "t_max": s.tau.last() }));
        (s.field, "ivp")
    } else {
        let g = function(fa, Domain::RealLine, Some("gauss(4)"), &mut t)?;
        if residual {
            let f = pde_residual(&g, &cfg, &q)?;
            t.summarize("max_residual", f.max_abs());
            (f, "residual")
        } else {
            (u_field(&g, &cfg, &q)?, "field")
        }
    };
    t.meta("mode", mode);
    t.meta("warnings", &field.warnings);
    for (i, &rv) in field.r.iter().enumerate() {
        for (j, &th) in field.theta.iter().enumerate() {
            t.push(vec![rv.into(), th.into(), field.values[i][j].into(), field.err_ests[i][j].into(), field.converged[i][j].into()]);
        }
    }
    Ok(t)
}

fn check_row(t: &mut Table, name: &str, value: f64, tol: f64) {
    t.push(vec![name.into(), value.into(), tol.into(), (value <= tol).into()]);
}

fn verify_identities(common: &Common) -> Result<Table> {
    let q = quad(common)?;
    let mut t = base_table("verify", &["check", "value", "tolerance", "pass"], common, &q);
    t.meta("suite", "identities");

    let grid: Vec<(f64, f64, f64)> = [0.0, 0.5, 1.0]
        .iter()
        .flat_map(|&a| [0.0, 1.0, 3.0].iter().flat_map(move |&tau| [0.5, 1.0, 2.0].iter().map(move |&x| (a, tau, x))))
        .collect();
    let route_gap: Vec<f64> = grid
        .par_iter()
        .map(|&(a, tau, x)| -> Result<f64> {
            let p = KernelParams::new(a, tau)?;
            let v = [
                phi_direct(p, x, &q)?.checked("phi_direct")?.value,
                phi_integral(p, x, &q)?.checked("phi_integral")?.value,
                phi_cosh_route(p, x, &q)?.checked("phi_cosh_route")?.value,
                phi_mellin_barnes(p, x, &ContourConfig { mu: a + 0.5, cfg: q })?.checked("phi_mellin_barnes")?.value,
            ];
            let spread = v.iter().fold(f64::NEG_INFINITY, |m, &u| m.max(u)) - v.iter().fold(f64::INFINITY, |m, &u| m.min(u));
            Ok(spread / (1.0 + v[0].abs()))
        })
        .collect::<Result<_>>()?;
    check_row(&mut t, "kernel routes, max spread/(1+|phi|)", route_gap.iter().fold(0.0, |m: f64, &v| m.max(v)), 1e-8);

    let ode: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&(a, tau, x)| -> Result<(f64, f64)> {
            let r = ode_residual(KernelParams::new(a, tau)?, x, &q)?;
            Ok((tau, r.residual.abs() / r.scale))
        })
        .collect::<Result<_>>()?;
    let nonzero = ode.iter().filter(|p| p.0 != 0.0).fold(0.0f64, |m, p| m.max(p.1));
    let at_zero = ode.iter().filter(|p| p.0 == 0.0).fold(0.0f64, |m, p| m.max(p.1));
    check_row(&mut t, "kernel ODE residual (tau != 0), relative", nonzero, 1e-6);
    t.summarize("ode_residual_tau0", at_zero);

    let mut gp = 0.0f64;
    for e in [0.5, 1.0, 2.0] {
        for x in [0.0, 0.5, 1.0, 2.0] {
            let (l, r) = gamma_product_identity(e, x, &q)?;
            gp = gp.max((l - r).abs() / r.abs());
        }
    }
    check_row(&mut t, "gamma product integral identity, relative", gp, 1e-6);

    // F_1 of e^{-x} diverges, so that pair is left out
    let taus = [0.0, 1.0, 2.0];
    let mut comp = 0.0f64;
    for (f, alphas) in [(RealFunction::exp_decay(1.0), vec![0.0, 0.5]), (RealFunction::x_gauss(), vec![0.0, 0.5, 1.0])] {
        for alpha in alphas {
            let a = forward(&f, alpha, &taus, &q)?;
            let b = forward_via_composition(&f, alpha, &taus, &q)?;
            let nu = mellin_abscissa(&f, alpha)?;
            for k in 0..taus.len() {
                let m = forward_via_mellin(&f, alpha, taus[k], nu, &q)?.value;
                comp = comp.max((a.values[k] - b.values[k]).abs()).max((a.values[k] - m).abs()).max((b.values[k] - m).abs());
            }
        }
    }
    check_row(&mut t, "composition and Mellin routes vs forward, absolute", comp, 1e-6);
    t.summarize("composition_excluded", "exp(-x) at alpha = 1 (F_1 diverges)");

    let hs = hs_norm_f0(&q)?.checked("hs_norm_f0")?;
    let want = PI * PI / 2.0;
    check_row(&mut t, "Hilbert-Schmidt norm vs pi^2/2, relative", (hs.value - want).abs() / want, 1e-4);
    t.summarize("hs_norm", hs.value);
    Ok(t)
}

/// Seeded random probes of linearity and of the symmetries of K.
fn verify_properties(cases: usize, common: &Common) -> Result<Table> {
    let q = quad(common)?;
    let mut t = base_table("verify", &["check", "value", "tolerance", "pass"], common, &q);
    t.meta("suite", "properties");
    t.meta("cases", cases);
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    for k in 0..cases {
        let (re, im, x) = (rng.random_range(-2.0..2.0), rng.random_range(-6.0..6.0), rng.random_range(0.3..5.0));
        let mu = c(re, im);
        let a = bessel_k(mu, x, &q)?;
        let sym = (a - bessel_k(-mu, x, &q)?).norm() / (1.0 + a.norm());
        let conj = (bessel_k(mu.conj(), x, &q)? - a.conj()).norm() / (1.0 + a.norm());
        check_row(&mut t, &format!("#{k} K symmetry and conjugation at mu = {re:.4}{im:+.4}i, x = {x:.4}"), sym.max(conj), 1e-12);

        let (s, alpha, tau, y) = (
            rng.random_range(-2.0..2.0),
            rng.random_range(0.0..0.8),
            rng.random_range(0.0..3.0),
            rng.random_range(0.5..2.0),
        );
        let sum = RealFunction::new("sum", Domain::HalfLine, 1.0, move |x| s * (-x).exp() + (-x * x).exp());
        let fa = forward_point(&RealFunction::exp_decay(1.0), alpha, tau, &q)?.value;
        let fb = forward_point(&RealFunction::gauss_half(), alpha, tau, &q)?.value;
        let fs = forward_point(&sum, alpha, tau, &q)?.value;
        let gsum = RealFunction::new("gsum", Domain::RealLine, 8.0, move |u| s * (-u * u).exp() + (-2.0 * u * u).exp());
        let ga = adjoint_point(&RealFunction::gaussian(1.0), alpha, y, &q)?.value;
        let gb = adjoint_point(&RealFunction::gaussian(2.0), alpha, y, &q)?.value;
        let gs = adjoint_point(&gsum, alpha, y, &q)?.value;
        let lin = ((fs - s * fa - fb).abs() / (1.0 + fs.abs())).max((gs - s * ga - gb).abs() / (1.0 + gs.abs()));
        check_row(&mut t, &format!("#{k} linearity at s = {s:.4}, alpha = {alpha:.4}, tau = {tau:.4}, x = {y:.4}"), lin, 1e-8);
    }
    Ok(t)
}
