//! Fixed-precision number formatting shared by the CSV and JSON writers.

/// Significant digits of every emitted float.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats like C's `%.12g`.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let p = SIGNIFICANT_DIGITS as i32;
    let sci = format!("{:.*e}", (p - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= p {
        let mant = trim_zeros(mant);
        format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (p - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to the value `sig12` prints.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    sig12(x).parse().unwrap_or(x)
}
