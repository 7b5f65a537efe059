//! Command-line front end for the `lebedev` library.
//!
//! Exit status: 0 when every requested quadrature converged, 1 when a result did not converge
//! or a numerical failure occurred, 2 on usage errors and violated preconditions.

pub mod commands;
pub mod functions;
pub mod grid;
pub mod table;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use functions::TailKind;
use table::{Format, Table};

#[derive(Debug, Parser)]
#[command(name = "lebedev", version, about = "Generalized Lebedev index transforms")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Relative quadrature tolerance, within [1e-12, 1e-2].
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Output path; `-` is standard output.
    #[arg(long, short, default_value = "-")]
    pub output: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for randomized probes.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// TOML file with defaults for any flag; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A builtin function or samples from a CSV file.
#[derive(Debug, Clone, Args)]
pub struct FunctionArgs {
    /// Builtin: exp, exp(k), gauss, gauss(w), moment0, moment1, moment(alpha), zero.
    #[arg(long, conflicts_with = "input")]
    pub function: Option<String>,
    /// CSV samples (abscissa, value) with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Model beyond the last sample of --input.
    #[arg(long, value_enum, default_value_t = TailKind::ExponentialFit)]
    pub tail: TailKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Direct,
    Integral,
    Cosh,
    MellinBarnes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Direct,
    Composition,
    Mellin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Properties,
}

#[derive(Debug, Clone, Args)]
pub struct Schedule {
    #[arg(long, default_value_t = 0.5)]
    pub eps0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
    #[arg(long, default_value_t = 8)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub conv_tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Kernel Phi_{alpha,tau}(x) = |K_{(alpha+i tau)/2}(x)|^2 on a (tau, x) grid.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Kernel {
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        #[arg(long)]
        x: String,
        #[arg(long, value_enum, default_value_t = Route::Direct)]
        route: Route,
        /// Contour abscissa for the Mellin-Barnes route (default alpha + 1/2).
        #[arg(long)]
        mu: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Forward transform F_alpha(tau) of a function on the half line.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Forward {
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        #[arg(long, value_enum, default_value_t = Method::Direct)]
        method: Method,
        /// Mellin contour abscissa for --method mellin.
        #[arg(long, allow_hyphen_values = true)]
        nu: Option<f64>,
        #[command(flatten)]
        f: FunctionArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Adjoint transform G_alpha(x) of a function on the real line.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Adjoint {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        x: String,
        #[command(flatten)]
        f: FunctionArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Recover f(x) from samples of F_alpha on 0 = tau_0 < ... < T.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Invert {
        #[arg(long)]
        alpha: f64,
        /// CSV with columns tau and value, e.g. the output of `forward`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[command(flatten)]
        common: Common,
    },
    /// Recover g(x) from G_alpha by the epsilon-regularized inversion.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    InvertAdjoint {
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// --function names g, whose adjoint is computed first; --input holds samples of G.
        #[command(flatten)]
        f: FunctionArgs,
        #[command(flatten)]
        schedule: Schedule,
        #[command(flatten)]
        common: Common,
    },
    /// Field u_n(r, theta), its PDE residual, or the initial value problem.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Pde {
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        n: i64,
        #[arg(long)]
        r: String,
        #[arg(long)]
        theta: String,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Emit the central-difference residual on the interior points.
        #[arg(long, conflicts_with = "ivp")]
        residual: bool,
        /// Treat the function as initial data G_n(r) = u_n(r, 0) on the half line and solve for u.
        #[arg(long)]
        ivp: bool,
        #[command(flatten)]
        f: FunctionArgs,
        #[command(flatten)]
        schedule: Schedule,
        #[command(flatten)]
        common: Common,
    },
    /// Verification suites with a pass/fail table.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::Identities)]
        suite: Suite,
        /// Random probes per property (properties suite).
        #[arg(long, default_value_t = 8)]
        cases: usize,
        #[command(flatten)]
        common: Common,
    },
}

impl Cmd {
    pub fn common(&self) -> &Common {
        match self {
            Cmd::Kernel { common, .. }
            | Cmd::Forward { common, .. }
            | Cmd::Adjoint { common, .. }
            | Cmd::Invert { common, .. }
            | Cmd::InvertAdjoint { common, .. }
            | Cmd::Pde { common, .. }
            | Cmd::Verify { common, .. } => common,
        }
    }
}

/// Error carrying the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

/// Numerical failures exit with 1, everything else (usage, input, preconditions) with 2.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    match e.chain().find_map(|c| c.downcast_ref::<lebedev::Error>()) {
        Some(le) if !le.is_precondition() => 1,
        _ => 2,
    }
}

fn config_path(args: &[OsString]) -> Result<Option<PathBuf>> {
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let p = args.get(i + 1).ok_or_else(|| anyhow!("--config needs a path"))?;
            return Ok(Some(PathBuf::from(p)));
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(PathBuf::from(p)));
        }
    }
    Ok(None)
}

fn value_token(key: &str, v: &toml::Value) -> Result<Option<String>> {
    Ok(match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(format!("{f:?}")),
        toml::Value::Boolean(_) => None,
        _ => bail!("config key '{key}' must be a string, number or boolean"),
    })
}

/// Flags from a TOML file, as command-line tokens for `sub`.
///
/// Top-level keys apply to every subcommand that has the flag; keys in a `[subcommand]` table
/// apply to that subcommand only and must all exist there.
pub fn config_tokens(path: &Path, sub: &str) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let doc: toml::Table = text.parse().with_context(|| format!("invalid TOML in {}", path.display()))?;
    let cmd = Cli::command();
    let longs_of = |name: &str| -> Option<Vec<String>> {
        cmd.find_subcommand(name)
            .map(|s| s.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect())
    };
    let all_subs: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let known = longs_of(sub).unwrap_or_default();
    let mut tokens = Vec::new();
    let mut push = |key: &str, v: &toml::Value, strict: bool| -> Result<()> {
        let flag = key.replace('_', "-");
        if flag == "config" {
            bail!("config files cannot include other config files");
        }
        if !known.contains(&flag) {
            let anywhere = all_subs.iter().any(|s| longs_of(s).is_some_and(|l| l.contains(&flag)));
            if strict || !anywhere {
                bail!("unknown config key '{key}' for {sub}");
            }
            return Ok(());
        }
        match (v, value_token(key, v)?) {
            (toml::Value::Boolean(true), _) => tokens.push(format!("--{flag}")),
            (toml::Value::Boolean(false), _) => {}
            (_, Some(t)) => {
                tokens.push(format!("--{flag}"));
                tokens.push(t);
            }
            _ => {}
        }
        Ok(())
    };
    for (k, v) in &doc {
        if let toml::Value::Table(t) = v {
            if !all_subs.contains(k) {
                bail!("unknown config section [{k}]");
            }
            if k == sub {
                for (k2, v2) in t {
                    push(k2, v2, true)?;
                }
            }
        } else {
            push(k, v, false)?;
        }
    }
    Ok(tokens)
}

/// Parses arguments, merging a `--config` file underneath the command-line flags.
pub fn parse_args(args: Vec<OsString>) -> std::result::Result<Cli, Failure> {
    let usage = |e: anyhow::Error| Failure { code: 2, error: e };
    let path = config_path(&args).map_err(usage)?;
    let mut merged = args.clone();
    if let Some(path) = path {
        // the subcommand is the first token after the program name that is not a flag
        if let Some(pos) = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1) {
            let sub = args[pos].to_string_lossy().to_string();
            let toks = config_tokens(&path, &sub).map_err(usage)?;
            merged = args[..=pos].to_vec();
            merged.extend(toks.into_iter().map(OsString::from));
            merged.extend(args[pos + 1..].iter().cloned());
        }
    }
    Cli::try_parse_from(merged).map_err(|e| Failure {
        code: e.exit_code(),
        error: anyhow::Error::new(e),
    })
}

fn write_table(t: &Table, common: &Common) -> Result<()> {
    if common.output == "-" {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        t.write(common.format, &mut lock)?;
        lock.flush()?;
    } else {
        let f = File::create(&common.output).with_context(|| format!("cannot create {}", common.output))?;
        let mut w = BufWriter::new(f);
        t.write(common.format, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

/// Runs a parsed command and returns its exit status.
pub fn run(cli: &Cli) -> std::result::Result<i32, Failure> {
    let fail = |e: anyhow::Error| Failure { code: exit_code(&e), error: e };
    let table = commands::dispatch(&cli.cmd).map_err(fail)?;
    write_table(&table, cli.cmd.common()).map_err(|e| Failure { code: 2, error: e })?;
    Ok(if table.all_ok() { 0 } else { 1 })
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let cli = match parse_args(args) {
        Ok(c) => c,
        Err(f) => {
            match f.error.downcast_ref::<clap::Error>() {
                Some(ce) => {
                    let _ = ce.print();
                }
                None => eprintln!("error: {:#}", f.error),
            }
            return f.code;
        }
    };
    match run(&cli) {
        Ok(code) => {
            if code != 0 {
                eprintln!("warning: some results did not converge (see the converged/pass column)");
            }
            code
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}
