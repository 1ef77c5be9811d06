//! Locale-independent number formatting and complex-literal parsing.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// 12 significant digits, uppercase `E` exponent, e.g. `1.64493406685E0`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // avoid "-0.00000000000E0"
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11E}")
}

/// `re+imi` with both parts in [`fmt_num`] form.
pub fn fmt_complex(z: Complex64) -> String {
    let im = fmt_num(z.im);
    if im.starts_with('-') {
        format!("{}{}i", fmt_num(z.re), im)
    } else {
        format!("{}+{}i", fmt_num(z.re), im)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

/// Parses `a+bi`, `a-bi`, `bi`, `a`, `i`, `-i` or `re,im`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse("empty complex literal".into()));
    }
    if let Some((re, im)) = s.split_once(',') {
        return Ok(Complex64::new(parse_f64(re)?, parse_f64(im)?));
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(parse_f64(&s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re_part, im_part) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let im = match im_part {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => parse_f64(other)?,
    };
    let re = if re_part.is_empty() { 0.0 } else { parse_f64(re_part)? };
    Ok(Complex64::new(re, im))
}
