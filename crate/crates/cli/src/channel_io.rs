//! Reading channel matrices from CSV files of complex `re+imj` tokens.

use dirmod_core::{Complex64, ComplexMatrix};

use crate::CliError;

/// Parse one token: `1.5`, `-2j`, `1+2j`, `-0.5-1.25j`, `1e-3+2.5e-1j`.
pub fn parse_complex(token: &str) -> Result<Complex64, CliError> {
    let t = token.trim();
    if t.is_empty() {
        return Err(CliError::Config("empty complex token".to_string()));
    }
    let bad = || CliError::Config(format!("cannot parse complex value: {token}"));
    if let Some(body) = t.strip_suffix(['j', 'J']) {
        // Split at the last +/- that is not a leading sign or an exponent
        // sign; everything after it is the imaginary coefficient.
        let bytes = body.as_bytes();
        let mut split = None;
        for i in (1..bytes.len()).rev() {
            let c = bytes[i] as char;
            if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
                split = Some(i);
                break;
            }
        }
        match split {
            Some(i) => {
                let re: f64 = body[..i].trim().parse().map_err(|_| bad())?;
                let im_str = body[i..].trim();
                let im: f64 = match im_str {
                    "+" => 1.0,
                    "-" => -1.0,
                    other => other.parse().map_err(|_| bad())?,
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                // Pure imaginary: "2j", "-j", "j".
                let im: f64 = match body.trim() {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    other => other.parse().map_err(|_| bad())?,
                };
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = t.parse().map_err(|_| bad())?;
        Ok(Complex64::new(re, 0.0))
    }
}

/// Parse a row-major complex matrix from CSV text: one row per line,
/// comma-separated tokens.
pub fn parse_channel_csv(text: &str) -> Result<ComplexMatrix, CliError> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(parse_complex)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Config(format!("line {}: {e}", lineno + 1)))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::Config(format!(
                    "line {}: expected {} entries per row, got {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Config("channel file has no rows".to_string()));
    }
    let k = rows.len();
    let l = rows[0].len();
    ComplexMatrix::new(k, l, rows.into_iter().flatten().collect())
        .map_err(|e| CliError::Config(format!("channel: {e}")))
}
