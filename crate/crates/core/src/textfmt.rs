//! Decimal formatting shared by the text writers.

/// Format `v` with 9 significant digits, like C's `%.9g`.
pub fn fmt_sig9(v: f64) -> String {
    fmt_sig(v, 9)
}

pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig9(0.123456789123), "0.123456789");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(0.5), "0.5");
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(-2.25), "-2.25");
        assert_eq!(fmt_sig9(1.23e-7), "1.23e-7");
        assert_eq!(fmt_sig9(0.00999999999999), "0.01");
    }

    #[test]
    fn parses_back_within_precision() {
        for &v in &[0.333333333333_f64, 0.987654321987, 1e-3 / 7.0, 0.999999999] {
            let back: f64 = fmt_sig9(v).parse().unwrap();
            assert!((back - v).abs() <= v.abs() * 1e-8, "{v} -> {back}");
        }
    }
}
