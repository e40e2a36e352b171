//! Deterministic number formatting for CSV output.

/// Six decimals, decimal dot, no negative zero.
pub fn fixed6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// Six significant digits in scientific notation.
pub fn sci6(v: f64) -> String {
    format!("{v:.5e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed6_normalizes() {
        assert_eq!(fixed6(0.0630908), "0.063091");
        assert_eq!(fixed6(-1e-9), "0.000000");
        assert_eq!(fixed6(10.0), "10.000000");
        assert_eq!(sci6(-5.8921e-5), "-5.89210e-5");
    }
}
