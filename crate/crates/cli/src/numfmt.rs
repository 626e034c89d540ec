//! Fixed float formatting for reports: 12 significant digits, trailing zeros
//! dropped, lowercase scientific notation outside `[1e-4, 1e6]`.

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats a finite float. Non-finite values are rendered as `NaN`, `inf`
/// and `-inf`; JSON writers must map them separately.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let mantissa = trim_zeros(mantissa);
    let unit = mantissa.trim_start_matches('-') == "1";
    if (-4..6).contains(&exp) || (exp == 6 && unit) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    } else {
        format!("{mantissa}e{exp}")
    }
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
    fn fixed_range() {
        assert_eq!(format_f64(1.0), "1");
        assert_eq!(format_f64(-90.0), "-90");
        assert_eq!(format_f64(168.57881372500074), "168.578813725");
        assert_eq!(format_f64(0.1), "0.1");
        assert_eq!(format_f64(1e-4), "0.0001");
        assert_eq!(format_f64(999999.0), "999999");
        assert_eq!(format_f64(2.0 / 3.0), "0.666666666667");
    }

    #[test]
    fn scientific_range() {
        assert_eq!(format_f64(2e7), "2e7");
        assert_eq!(format_f64(1e6), "1000000");
        assert_eq!(format_f64(-1e6), "-1000000");
        assert_eq!(format_f64(1.5e6), "1.5e6");
        assert_eq!(format_f64(-1.5e-5), "-1.5e-5");
        assert_eq!(format_f64(1.0 / 3.0 * 1e-9), "3.33333333333e-10");
        assert_eq!(format_f64(f64::MIN_POSITIVE), "2.22507385851e-308");
    }

    #[test]
    fn rounding_crosses_the_boundary() {
        assert_eq!(format_f64(999999.9999999), "1000000");
        assert_eq!(format_f64(1000000.0000001), "1000000");
        assert_eq!(format_f64(1000001.0), "1.000001e6");
        assert_eq!(format_f64(9.99999999999951e-5), "0.0001");
    }

    #[test]
    fn negative_zero_and_non_finite() {
        assert_eq!(format_f64(-0.0), "0");
        assert_eq!(format_f64(f64::NAN), "NaN");
        assert_eq!(format_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn output_parses_back_within_precision() {
        for &x in &[
            1.234567890123456e-300,
            -7.77e12,
            5.4321987654321,
            0.000123456789012345,
        ] {
            let y: f64 = format_f64(x).parse().unwrap();
            assert!(((x - y) / x).abs() < 1e-11, "{x} -> {y}");
        }
    }
}
