//! Shared text formatting for CSV and JSON outputs.

use crate::error::{Error, Result};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Splits a CSV data line into trimmed fields.
pub fn split_fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

pub fn parse_f64(field: &str, context: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse(format!("{context}: `{field}` is not a number")))
}

/// Parses `# key=value` comment headers.
pub fn parse_header(line: &str) -> Option<(&str, &str)> {
    let body = line.strip_prefix('#')?.trim();
    let (k, v) = body.split_once('=')?;
    Some((k.trim(), v.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn headers() {
        assert_eq!(parse_header("# model=disk"), Some(("model", "disk")));
        assert_eq!(parse_header("re,im"), None);
    }
}
