use std::io::Write;
use std::path::Path;

use super::{AggregateRow, HarnessError};

pub const HEADER: &str =
    "sweep,algorithm,feasibility_rate,mean_sum_power_dbm,mean_adc_power_dbm,trials";

/// `%g`-style rendering with 6 significant digits.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn format_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.sweep,
            r.algorithm,
            format_sig(r.feasibility_rate),
            format_sig(r.mean_sum_power_dbm),
            format_sig(r.mean_adc_power_dbm),
            r.trials
        ));
    }
    out
}

pub fn emit_csv(rows: &[AggregateRow], path: &Path) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(format_csv(rows).as_bytes()).map_err(io)?;
    Ok(())
}

/// One data line of an emitted file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub sweep: String,
    pub algorithm: String,
    pub feasibility_rate: f64,
    pub mean_sum_power_dbm: f64,
    pub mean_adc_power_dbm: f64,
    pub trials: usize,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, HarnessError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        other => {
            return Err(HarnessError::Invalid(format!(
                "unexpected CSV header {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || HarnessError::Invalid(format!("malformed CSV line {}: `{line}`", i + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(CsvRow {
                sweep: fields[0].to_string(),
                algorithm: fields[1].to_string(),
                feasibility_rate: num(fields[2])?,
                mean_sum_power_dbm: num(fields[3])?,
                mean_adc_power_dbm: num(fields[4])?,
                trials: fields[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
