//! Rendering of reports that have no dedicated table layout, and the sink
//! that writes machine output to stdout or a file.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use spgg_core::analysis::export::{fmt_sig, to_json, write_file};

use crate::config::OutputFormat;
use crate::CliError;

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, rows)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, rows)),
        Value::Number(num) => {
            let text = match (num.as_i64(), num.as_u64()) {
                (Some(i), _) => i.to_string(),
                (_, Some(u)) => u.to_string(),
                _ => fmt_sig(num.as_f64().unwrap_or(f64::NAN)),
            };
            rows.push((prefix.to_string(), text));
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
    }
}

/// `key,value` table of every leaf, keys as dotted paths.
pub fn key_value_csv<T: Serialize>(report: &T) -> Result<String, CliError> {
    let tree = serde_json::to_value(report).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut rows = Vec::new();
    flatten("", &tree, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    Ok(out)
}

/// Renders a report without a table layout.
pub fn render<T: Serialize>(report: &T, format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Csv => key_value_csv(report),
        OutputFormat::Json => to_json(report).map_err(|e| CliError::Runtime(e.to_string())),
    }
}

/// Writes `text` to `out`, or to stdout when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text).map_err(|e| CliError::Runtime(e.to_string())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Runtime(format!("writing stdout: {e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Probe {
        passed: bool,
        values: Vec<f64>,
        count: usize,
    }

    #[test]
    fn leaves_flatten_to_dotted_keys() {
        let csv = key_value_csv(&Probe {
            passed: true,
            values: vec![0.5, 1.0 / 3.0],
            count: 4,
        })
        .unwrap();
        assert_eq!(csv, "key,value\npassed,true\nvalues.0,0.5\nvalues.1,0.333333\ncount,4\n");
    }
}
