//! Canonical CSV formatting: fixed 12-significant-digit numbers, RFC-4180
//! quoting, LF line endings. All output files are built through these helpers
//! so reruns are byte-identical.

/// Formats a float with 12 significant digits. Fixed-point notation inside
/// a readable magnitude window, scientific outside it. The zero-variance
/// fairness sentinel serializes as `inf`.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = decimal_exponent(x.abs());
    if !(-5..=14).contains(&exp) {
        return format!("{:.11e}", x);
    }
    let decimals = (11 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// Largest e with 10^e <= a, found by comparison so the result does not
/// depend on platform log10 rounding.
fn decimal_exponent(a: f64) -> i32 {
    let mut e = 0i32;
    let mut t = a;
    if t >= 1.0 {
        while t >= 10.0 {
            t /= 10.0;
            e += 1;
        }
    } else {
        while t < 1.0 {
            t *= 10.0;
            e -= 1;
        }
    }
    e
}

/// Quotes a field when it contains a comma, quote, or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Joins pre-formatted fields into one CSV record with an LF terminator.
pub fn csv_record(fields: &[String]) -> String {
    let mut line = fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_twelve_significant_digits() {
        assert_eq!(fmt_sig(22.3), "22.3000000000");
        assert_eq!(fmt_sig(0.1), "0.100000000000");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.0), "1.00000000000");
    }

    #[test]
    fn sentinel_values() {
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        assert_eq!(fmt_sig(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_sig(f64::NAN), "nan");
    }

    #[test]
    fn switches_to_scientific_outside_window() {
        assert_eq!(fmt_sig(1e-300), "1.00000000000e-300");
        assert_eq!(fmt_sig(1e20), "1.00000000000e20");
    }

    #[test]
    fn quotes_only_when_needed() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn record_ends_with_lf() {
        let rec = csv_record(&["a".to_string(), "b".to_string()]);
        assert_eq!(rec, "a,b\n");
    }
}
