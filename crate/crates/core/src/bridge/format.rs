//! Bridge file layout and the fixed-width numeric output field.

use std::fmt::Write as _;

use crate::numeric::Matrix;
use crate::value::{parse_number, Value};

use super::BridgeError;

/// Width of the numeric field, not counting the leading space.
pub const FIELD_WIDTH: usize = 10;
pub const DECIMALS: usize = 6;

/// One space, then `x` rounded half away from zero to six decimals and
/// right-justified in a ten-character field.
pub fn format_fixed(x: f64) -> Result<String, BridgeError> {
    if !x.is_finite() {
        return Err(BridgeError::FieldOverflow(x));
    }
    let digits = round_half_away(x.abs(), DECIMALS);
    let negative = x < 0.0 && digits.bytes().any(|b| matches!(b, b'1'..=b'9'));
    let body = if negative { format!("-{digits}") } else { digits };
    if body.len() > FIELD_WIDTH {
        return Err(BridgeError::FieldOverflow(x));
    }
    Ok(format!(" {body:>FIELD_WIDTH$}"))
}

/// Decimal rendering of non-negative `x` with `places` fraction digits,
/// rounded half away from zero on the exact binary value.
fn round_half_away(x: f64, places: usize) -> String {
    // 1100 fraction digits cover the exact expansion of any f64.
    let exact = format!("{x:.1100}");
    let dot = exact.find('.').expect("fixed format has a point");
    let mut digits: Vec<u8> = exact.as_bytes()[..dot + 1 + places].to_vec();
    let round_up = exact.as_bytes()[dot + 1 + places] >= b'5';
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            match digits[i] {
                b'.' => continue,
                b'9' => digits[i] = b'0',
                d => {
                    digits[i] = d + 1;
                    break;
                }
            }
        }
    }
    String::from_utf8(digits).expect("ascii digits")
}

/// Shortest decimal that reads back to the same value, without exponent.
pub fn format_entry(x: f64) -> String {
    format!("{x}")
}

/// Order on the first line, then every matrix row on its own line.
pub fn render_bridge_input(mats: &[Matrix]) -> Result<String, BridgeError> {
    let first = mats.first().ok_or(BridgeError::NoMatrices)?;
    let n = first.rows();
    if let Some(bad) = mats.iter().find(|m| !m.is_square() || m.rows() != n) {
        return Err(BridgeError::OrderMismatch {
            expected: n,
            found: (bad.rows(), bad.cols()),
        });
    }
    let mut out = format!("{n}\n");
    for m in mats {
        out.push_str(&render_rows(m));
    }
    Ok(out)
}

/// One row per line, entries separated by single spaces.
pub fn render_rows(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&x| format_entry(x)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Split on any whitespace and read every token as a number. Integer
/// tokens too wide for 64 bits (a large real written without exponent) are
/// read as reals.
pub fn tokenize_numbers(text: &str) -> Result<Vec<Value>, BridgeError> {
    text.split_whitespace()
        .map(|tok| {
            parse_number(tok)
                .or_else(|| wide_integer(tok))
                .ok_or_else(|| BridgeError::NonNumeric(tok.to_owned()))
        })
        .collect()
}

fn wide_integer(tok: &str) -> Option<Value> {
    let digits = tok.strip_prefix('-').unwrap_or(tok);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    tok.parse().ok().map(Value::Real)
}

/// Row-major n×n matrix from exactly n² tokens.
pub fn parse_square(tokens: &[f64], n: usize) -> Result<Matrix, BridgeError> {
    if n == 0 || tokens.len() != n * n {
        return Err(BridgeError::TokenCount {
            expected: n * n,
            found: tokens.len(),
        });
    }
    Ok(Matrix::from_row_major(n, n, tokens.to_vec())?)
}
