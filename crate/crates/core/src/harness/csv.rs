use std::io::Write;
use std::path::Path;

use super::{Axis, Metric, Scheme, SweepResult, SweepRow};
use crate::error::{Error, Result};

pub const HEADER: &str = "axis,value,scheme,metric,mean,stderr,trials,seed";

/// Formats `x` with nine significant digits, `%.9g` style.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..9).contains(&exp) {
        let rounded: f64 = sci.parse().expect("round-trips");
        trim(&format!("{:.*}", (8 - exp) as usize, rounded))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

/// Writes the sweep as CSV: the header, then one row per `(value, scheme)`.
pub fn write_csv(result: &SweepResult, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            result.axis.name(),
            format_sig9(r.value),
            r.scheme.name(),
            result.metric.name(),
            format_sig9(r.mean),
            format_sig9(r.stderr),
            r.trials,
            result.seed
        )?;
    }
    Ok(())
}

/// Writes the sweep CSV to `path`.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    write_csv(result, &mut file).map_err(io)?;
    file.flush().map_err(io)
}

/// Parses a sweep CSV; `None` for a header-only file.
pub fn parse_csv(text: &str, path: &Path) -> Result<Option<SweepResult>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(err(1, format!("expected header '{HEADER}'"))),
    }
    let mut result: Option<SweepResult> = None;
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(err(n, format!("expected 8 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(n, format!("'{s}': {e}")));
        let axis: Axis = f[0].parse().map_err(|e: Error| err(n, e.to_string()))?;
        let scheme: Scheme = f[2].parse().map_err(|e: Error| err(n, e.to_string()))?;
        let metric: Metric = f[3].parse().map_err(|e: Error| err(n, e.to_string()))?;
        let trials: usize = f[6].parse().map_err(|e| err(n, format!("'{}': {e}", f[6])))?;
        let seed: u64 = f[7].parse().map_err(|e| err(n, format!("'{}': {e}", f[7])))?;
        let r = result.get_or_insert_with(|| SweepResult {
            axis,
            metric,
            seed,
            rows: Vec::new(),
            errors: Vec::new(),
        });
        if (r.axis, r.metric, r.seed) != (axis, metric, seed) {
            return Err(err(n, "axis, metric and seed must agree on every row".into()));
        }
        r.rows.push(SweepRow {
            value: num(f[1])?,
            scheme,
            mean: num(f[4])?,
            stderr: num(f[5])?,
            trials,
        });
    }
    Ok(result)
}
