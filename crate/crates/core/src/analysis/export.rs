//! CSV and JSON output. Floats carry 6 significant digits, lines end in LF.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ParetoReport, SweepRow};
use crate::error::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// One point of a training learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub mean_reward: f64,
    pub mean_quality: f64,
    pub loss: f64,
    pub kl: f64,
}

/// `%g`-style rendering with 6 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
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
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn round_sig(x: f64) -> f64 {
    fmt_sig(x).parse().unwrap_or(x)
}

/// Rewrites every float in a JSON tree to 6 significant digits.
fn round_json(v: &mut Value) {
    match v {
        Value::Number(num) if !num.is_i64() && !num.is_u64() => {
            if let Some(x) = num.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *num = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with floats rounded to 6 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, AnalysisError> {
    let mut tree = serde_json::to_value(value)?;
    round_json(&mut tree);
    let mut out = serde_json::to_string_pretty(&tree)?;
    out.push('\n');
    Ok(out)
}

/// Sweep rows as CSV. `n` sizes the header when `rows` is empty.
pub fn sweep_csv(rows: &[SweepRow], n: usize) -> String {
    let n = rows.first().map_or(n, |r| r.profile.len());
    let mut out = String::from("param_name,param_value");
    for i in 1..=n {
        write!(out, ",c_{i}").unwrap();
    }
    for i in 1..=n {
        write!(out, ",u_{i}").unwrap();
    }
    out.push_str(",welfare,success\n");
    for r in rows {
        write!(out, "{},{}", r.param_name, fmt_sig(r.param_value)).unwrap();
        for x in r.profile.iter().chain(&r.utilities) {
            write!(out, ",{}", fmt_sig(*x)).unwrap();
        }
        writeln!(out, ",{},{}", fmt_sig(r.welfare), r.success).unwrap();
    }
    out
}

/// A Pareto report as a one-row CSV table.
pub fn report_csv(report: &ParetoReport) -> String {
    let n = report.spne_utilities.len();
    let mut out = String::from("sample_count,seed,dominating_count");
    for i in 1..=n {
        write!(out, ",c_{i}").unwrap();
    }
    for i in 1..=n {
        write!(out, ",u_{i}").unwrap();
    }
    out.push('\n');
    write!(out, "{},{},{}", report.sample_count, report.seed, report.dominating_count).unwrap();
    for x in report.spne_profile.iter().chain(&report.spne_utilities) {
        write!(out, ",{}", fmt_sig(*x)).unwrap();
    }
    out.push('\n');
    out
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("episode,mean_reward,mean_quality,loss,kl\n");
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.episode,
            fmt_sig(p.mean_reward),
            fmt_sig(p.mean_quality),
            fmt_sig(p.loss),
            fmt_sig(p.kl)
        )
        .unwrap();
    }
    out
}

pub fn render_sweep(rows: &[SweepRow], n: usize, format: Format) -> Result<String, AnalysisError> {
    match format {
        Format::Csv => Ok(sweep_csv(rows, n)),
        Format::Json => to_json(&rows),
    }
}

pub fn render_report(report: &ParetoReport, format: Format) -> Result<String, AnalysisError> {
    match format {
        Format::Csv => Ok(report_csv(report)),
        Format::Json => to_json(report),
    }
}

pub fn render_curve(points: &[CurvePoint], format: Format) -> Result<String, AnalysisError> {
    match format {
        Format::Csv => Ok(curve_csv(points)),
        Format::Json => to_json(&points),
    }
}

/// Writes `contents` to `path`, attaching the path to any I/O error.
pub fn write_file(path: &Path, contents: &str) -> Result<(), AnalysisError> {
    fs::write(path, contents).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn export_sweep(rows: &[SweepRow], n: usize, format: Format, path: &Path) -> Result<(), AnalysisError> {
    write_file(path, &render_sweep(rows, n, format)?)
}

pub fn export_report(report: &ParetoReport, format: Format, path: &Path) -> Result<(), AnalysisError> {
    write_file(path, &render_report(report, format)?)
}

pub fn export_curve(points: &[CurvePoint], format: Format, path: &Path) -> Result<(), AnalysisError> {
    write_file(path, &render_curve(points, format)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.2666666666), "0.266667");
        assert_eq!(fmt_sig(-1.093333333), "-1.09333");
        assert_eq!(fmt_sig(123456.7), "123457");
        assert_eq!(fmt_sig(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig(0.0001), "0.0001");
        assert_eq!(fmt_sig(0.00001234567), "1.23457e-05");
        assert_eq!(fmt_sig(0.0000123), "1.23e-05");
        assert_eq!(fmt_sig(2.5), "2.5");
    }

    #[test]
    fn json_rounds_floats_but_not_integers() {
        let s = to_json(&serde_json::json!({"a": 0.123456789, "n": 10000, "v": [1.0, 2.0000001]})).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.123457));
        assert_eq!(v["n"].as_u64(), Some(10000));
        assert_eq!(v["v"][1].as_f64(), Some(2.0));
    }

    #[test]
    fn empty_sweep_is_header_only() {
        assert_eq!(
            sweep_csv(&[], 3),
            "param_name,param_value,c_1,c_2,c_3,u_1,u_2,u_3,welfare,success\n"
        );
    }

    #[test]
    fn io_error_names_the_path() {
        let path = Path::new("/nonexistent-dir/out.csv");
        let err = export_sweep(&[], 3, Format::Csv, path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }

    #[test]
    fn format_parses_case_insensitively() {
        assert_eq!("JSON".parse::<Format>(), Ok(Format::Json));
        assert!("xml".parse::<Format>().is_err());
    }
}
