use anyhow::{bail, Context, Result};

/// Parses `start:stop:count` (inclusive endpoints), a comma list, or a single number.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let pts = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("grid '{spec}' must be start:stop:count");
        }
        let start: f64 = parts[0].trim().parse().with_context(|| format!("bad grid start in '{spec}'"))?;
        let stop: f64 = parts[1].trim().parse().with_context(|| format!("bad grid stop in '{spec}'"))?;
        let count: usize = parts[2].trim().parse().with_context(|| format!("bad grid count in '{spec}'"))?;
        match count {
            0 => bail!("grid '{spec}' has no points"),
            1 if start != stop => bail!("grid '{spec}' has one point but start != stop"),
            1 => vec![start],
            n => {
                let h = (stop - start) / (n - 1) as f64;
                // the last point is exactly `stop`, not an accumulated sum
                (0..n).map(|k| if k == n - 1 { stop } else { start + h * k as f64 }).collect()
            }
        }
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number '{s}' in grid '{spec}'")))
            .collect::<Result<Vec<f64>>>()?
    };
    if pts.iter().any(|v| !v.is_finite()) {
        bail!("grid '{spec}' has non-finite points");
    }
    if pts.windows(2).any(|w| !(w[1] > w[0])) {
        bail!("grid '{spec}' must be strictly increasing");
    }
    Ok(pts)
}
