//! Numeric formatting for CSV exports.

/// Format with `digits` significant digits (plain decimal, no exponent).
pub fn sig_digits(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

/// Join a row of values at 6 significant digits.
pub fn csv_row(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| sig_digits(v, 6))
        .collect::<Vec<_>>()
        .join(",")
}

/// Quote a CSV field when it contains separators or quotes.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig_digits(1.0, 6), "1.00000");
        assert_eq!(sig_digits(0.5, 6), "0.500000");
        assert_eq!(sig_digits(0.000123456789, 6), "0.000123457");
        assert_eq!(sig_digits(0.0, 6), "0");
        assert_eq!(sig_digits(123.456789, 6), "123.457");
    }

    #[test]
    fn fields_with_separators_are_quoted() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("A=-2,B=1"), "\"A=-2,B=1\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
