//! Complex literals of the form `a+bi` / `a-bi`. The sign between the parts is
//! mandatory, so `1+0i` is valid and `1` or `2i` are not.

use std::fmt;

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralError {
    pub literal: String,
    pub reason: &'static str,
}

impl fmt::Display for LiteralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed complex literal {:?}: {}", self.literal, self.reason)
    }
}

impl std::error::Error for LiteralError {}

pub fn parse_complex(literal: &str) -> Result<Complex64, LiteralError> {
    let err = |reason| LiteralError {
        literal: literal.to_string(),
        reason,
    };
    let s = literal.trim();
    let body = s.strip_suffix('i').ok_or_else(|| err("expected a trailing 'i'"))?;
    let bytes = body.as_bytes();
    // the separating sign is the last +/- that is neither leading nor part of an exponent
    let split = (1..bytes.len())
        .rev()
        .find(|&p| matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E'))
        .ok_or_else(|| err("expected the form a+bi or a-bi"))?;
    let re: f64 = body[..split].parse().map_err(|_| err("real part is not a number"))?;
    let im: f64 = body[split..].parse().map_err(|_| err("imaginary part is not a number"))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(err("parts must be finite"));
    }
    Ok(Complex64::new(re, im))
}

/// A point of ℂ^n written as comma-separated literals.
pub fn parse_point(list: &str) -> Result<Vec<Complex64>, LiteralError> {
    list.split(',').map(parse_complex).collect()
}

/// Comma-separated reals.
pub fn parse_reals(list: &str) -> Result<Vec<f64>, String> {
    list.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("not a number: {p:?}")))
        .collect()
}

/// Rounds to 15 significant digits and prints the shortest form; `-0` prints as `0`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
    let s = format!("{rounded:?}");
    match s.strip_suffix(".0") {
        Some(stripped) => stripped.to_string(),
        None => s,
    }
}

pub fn format_complex(z: Complex64) -> String {
    let im = format_real(z.im);
    match im.strip_prefix('-') {
        Some(mag) => format!("{}-{}i", format_real(z.re), mag),
        None => format!("{}+{}i", format_real(z.re), im),
    }
}
