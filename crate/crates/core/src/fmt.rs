//! Text formatting shared by the file formats.

use std::borrow::Cow;

/// Formats `value` with `digits` significant digits, like C's `%.{digits}g`.
pub fn format_sig(value: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{value:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Undoes `\t`, `\n`, `\r` and `\\` escapes in a TSV field.
pub fn unescape_tsv(field: &str) -> Cow<'_, str> {
    if !field.contains('\\') {
        return Cow::Borrowed(field);
    }
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    Cow::Owned(out)
}

pub fn escape_tsv(field: &str) -> Cow<'_, str> {
    if !field.contains(['\t', '\n', '\r', '\\']) {
        return Cow::Borrowed(field);
    }
    let mut out = String::with_capacity(field.len() + 8);
    for c in field.chars() {
        match c {
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    Cow::Owned(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig(0.7071067811865475, 9), "0.707106781");
        assert_eq!(format_sig(1.0, 9), "1");
        assert_eq!(format_sig(0.5, 9), "0.5");
        assert_eq!(format_sig(1.234567891e-5, 9), "1.23456789e-05");
        assert_eq!(format_sig(0.0001, 9), "0.0001");
        assert_eq!(format_sig(123456789012.0, 9), "1.23456789e+11");
        assert_eq!(format_sig(0.0, 9), "0");
        // rounding that bumps the exponent
        assert_eq!(format_sig(0.99999999999, 9), "1");
    }

    #[test]
    fn significant_digits_round_trip_closely() {
        for &v in &[0.123456789123, 3.0e-7, 0.999999, 0.031622776601683794] {
            let back: f64 = format_sig(v, 9).parse().unwrap();
            assert!(((back - v) / v).abs() < 5e-9, "{v} -> {back}");
        }
    }

    #[test]
    fn tsv_escapes() {
        assert_eq!(unescape_tsv(r"a\tb\nc\\d"), "a\tb\nc\\d");
        assert_eq!(unescape_tsv("plain"), "plain");
        assert_eq!(escape_tsv("a\tb\\"), r"a\tb\\");
        assert_eq!(unescape_tsv(&escape_tsv("x\t\ny\\z")), "x\t\ny\\z");
    }
}
