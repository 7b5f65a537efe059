//! Builtin function registry and sampled inputs read from CSV.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use lebedev::interp::Pchip;
use lebedev::inversion::{moment_matched_test_function, TestFamily};
use lebedev::transforms::{Domain, RealFunction};
use serde::Serialize;

/// Parses `name` or `name(arg)`.
fn split_call(spec: &str) -> Result<(String, Option<f64>)> {
    let spec = spec.trim();
    match spec.find('(') {
        None => Ok((spec.to_string(), None)),
        Some(i) => {
            let Some(inner) = spec[i + 1..].strip_suffix(')') else {
                bail!("unbalanced parentheses in function '{spec}'");
            };
            let arg: f64 = inner.trim().parse().with_context(|| format!("bad argument in function '{spec}'"))?;
            Ok((spec[..i].trim().to_string(), Some(arg)))
        }
    }
}

/// Builtin on the requested domain.
///
/// Half line: `exp(k)` = e^{-kx}, `gauss(w)` = e^{-wx²}, `moment0`, `moment1`, `moment(α)`, `zero`.
/// Real line: `exp(k)` = e^{-k|τ|}, `gauss(w)` = e^{-wτ²}, `zero`.
pub fn builtin(spec: &str, domain: Domain) -> Result<RealFunction> {
    let (name, arg) = split_call(spec)?;
    let positive = |v: f64, what: &str| -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            bail!("{what} parameter must be positive, got {v}")
        }
    };
    let f = match (name.as_str(), domain) {
        ("zero", d) => RealFunction::zero(d),
        ("exp", Domain::HalfLine) => RealFunction::exp_decay(positive(arg.unwrap_or(1.0), "exp")?),
        ("exp", Domain::RealLine) => {
            let k = positive(arg.unwrap_or(1.0), "exp")?;
            RealFunction::new(&format!("exp(-{k}|t|)"), Domain::RealLine, k, move |t| (-k * t.abs()).exp())
        }
        ("gauss", Domain::HalfLine) => match arg {
            None => RealFunction::gauss_half(),
            Some(w) => {
                let w = positive(w, "gauss")?;
                RealFunction::new(&format!("exp(-{w}x^2)"), Domain::HalfLine, 4.0 * w, move |x| (-w * x * x).exp())
            }
        },
        ("gauss", Domain::RealLine) => RealFunction::gaussian(positive(arg.unwrap_or(1.0), "gauss")?),
        ("moment0", Domain::HalfLine) if arg.is_none() => moment_matched_test_function(0.0, TestFamily::ExpPoly { a: 2.0 })?,
        ("moment1", Domain::HalfLine) if arg.is_none() => moment_matched_test_function(1.0, TestFamily::ExpPoly { a: 1.5 })?,
        ("moment", Domain::HalfLine) => {
            let Some(a) = arg else { bail!("moment needs an argument, e.g. moment(0.5)") };
            if !(a > 0.0 && a < 1.0) {
                bail!("moment(alpha) needs 0 < alpha < 1; use moment0 or moment1 at the ends");
            }
            moment_matched_test_function(a, TestFamily::ExpPoly { a: 1.0 })?
        }
        (n, Domain::RealLine) if n.starts_with("moment") => bail!("{n} lives on the half line"),
        _ => bail!("unknown function '{spec}'; builtins are exp, gauss, moment0, moment1, moment(alpha), zero"),
    };
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    ExponentialFit,
    Zero,
}

/// Abscissas and values read from a CSV file with a header row.
///
/// The abscissa is the first column; values come from the column named `value`, or the second
/// column when there is none. Other columns are ignored.
#[derive(Debug, Clone)]
pub struct SampledInput {
    pub abscissas: Vec<f64>,
    pub values: Vec<f64>,
    pub abscissa_name: String,
}

impl SampledInput {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 {
            bail!("{}: need at least two columns (abscissa, value)", path.display());
        }
        let vcol = headers.iter().position(|h| h.trim() == "value").unwrap_or(1);
        let (mut xs, mut vs) = (Vec::new(), Vec::new());
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64> {
                let s = rec.get(i).unwrap_or("");
                s.trim().parse::<f64>().with_context(|| format!("{}: row {}: bad number '{s}'", path.display(), k + 2))
            };
            xs.push(get(0)?);
            vs.push(get(vcol)?);
        }
        if xs.len() < 4 {
            bail!("{}: need at least 4 samples, got {}", path.display(), xs.len());
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            bail!("{}: abscissas must be strictly increasing", path.display());
        }
        Ok(SampledInput {
            abscissas: xs,
            values: vs,
            abscissa_name: headers[0].trim().to_string(),
        })
    }

    /// Monotone cubic interpolant inside the samples, `tail` beyond the last one.
    ///
    /// Below the first sample the function is taken as zero, except on the half line when the
    /// samples start at the origin. Returns the function and the fitted decay rate.
    pub fn to_function(&self, name: &str, domain: Domain, tail: TailKind) -> Result<(RealFunction, f64)> {
        let p = Pchip::new(&self.abscissas, &self.values)?;
        let (lo, hi) = p.range();
        let v_end = *self.values.last().unwrap();
        let rate = match tail {
            TailKind::Zero => 0.0,
            TailKind::ExponentialFit => exp_tail_rate(&self.abscissas, &self.values)?,
        };
        let hint = if rate > 0.0 { rate } else { 1.0 };
        let mirror = domain == Domain::RealLine && lo >= 0.0;
        let f = move |t: f64| {
            // samples on t >= 0 of an even function on the real line
            let t = if mirror { t.abs() } else { t };
            if t < lo {
                0.0
            } else if t <= hi {
                p.eval(t)
            } else if rate > 0.0 {
                v_end * (-rate * (t - hi)).exp()
            } else {
                0.0
            }
        };
        Ok((RealFunction::new(name, domain, hint, f), rate))
    }
}

/// Decay rate `k` of a least-squares fit `ln|v| ≈ a - k t` on the last quarter of the samples.
pub fn exp_tail_rate(t: &[f64], v: &[f64]) -> Result<f64> {
    let n = t.len();
    let start = n - (n / 4).max(3);
    let pts: Vec<(f64, f64)> = (start..n).filter(|&k| v[k] != 0.0).map(|k| (t[k], v[k].abs().ln())).collect();
    if pts.len() < 3 {
        // an identically vanishing end has no tail to fit
        return Ok(0.0);
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    let k = -sxy / sxx;
    if !(k > 0.0) {
        bail!("exponential tail fit found no decay at the end of the samples (rate {k}); use --tail zero");
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        assert_eq!(builtin("exp", Domain::HalfLine).unwrap().eval(1.0), (-1.0f64).exp());
        assert_eq!(builtin("exp(2)", Domain::RealLine).unwrap().eval(-1.0), (-2.0f64).exp());
        assert_eq!(builtin("gauss", Domain::RealLine).unwrap().eval(1.0), (-1.0f64).exp());
        assert_eq!(builtin("gauss(4)", Domain::RealLine).unwrap().eval(0.5), (-1.0f64).exp());
        assert!(builtin("zero", Domain::HalfLine).unwrap().is_zero);
        assert!(builtin("moment(0.5)", Domain::HalfLine).unwrap().moment_data.is_some());
        assert!(builtin("moment0", Domain::HalfLine).is_ok() && builtin("moment1", Domain::HalfLine).is_ok());
        for bad in ["moment(1)", "moment", "sin", "exp(-1)", "gauss(", "moment0(2)"] {
            assert!(builtin(bad, Domain::HalfLine).is_err(), "{bad}");
        }
        assert!(builtin("moment0", Domain::RealLine).is_err());
    }

    #[test]
    fn tail_rate() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let v: Vec<f64> = t.iter().map(|x| 3.0 * (-1.5 * x).exp()).collect();
        assert!((exp_tail_rate(&t, &v).unwrap() - 1.5).abs() < 1e-12);
        let up: Vec<f64> = t.iter().map(|x| x.exp()).collect();
        assert!(exp_tail_rate(&t, &up).is_err());
    }
}
