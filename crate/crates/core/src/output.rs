//! File formats shared by the problem modules and the campaign runner.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::search::{SearchResult, Termination};

/// Formats `x` with 9 significant digits, `%.9g` style.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-5..9).contains(&exp) {
        let prec = (8 - exp) as usize;
        trim_zeros(format!("{x:.prec$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `x` rounded to the 9 significant digits that [`fmt_g9`] prints.
pub fn round_g9(x: f64) -> f64 {
    fmt_g9(x).parse().unwrap_or(x)
}

/// Writes `rows` under a fixed header, every float through [`fmt_g9`].
pub fn write_float_csv<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_g9(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Convergence history as `eval_index,best_obfn`.
pub fn write_convergence<P: AsRef<Path>>(path: P, result: &SearchResult) -> Result<()> {
    write_float_csv(path, &["eval_index", "best_obfn"], result.history.iter().map(|&(i, v)| vec![i as f64, v]))
}

#[derive(Debug, Serialize)]
pub struct SearchSummary {
    pub best: Vec<f64>,
    pub value: f64,
    pub feasible: bool,
    pub evaluations: usize,
    pub termination: Termination,
}

impl From<&SearchResult> for SearchSummary {
    fn from(r: &SearchResult) -> Self {
        Self {
            best: r.best.iter().map(|&v| round_g9(v)).collect(),
            value: round_g9(r.best_value),
            feasible: r.feasible,
            evaluations: r.evaluations,
            termination: r.termination,
        }
    }
}

pub fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}
