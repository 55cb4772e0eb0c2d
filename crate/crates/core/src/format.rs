//! Plain-text number formatting shared by the CSV writers.

/// 17 significant digits in scientific notation, enough to round-trip any
/// `f64` and stable across platforms.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-joined [`num`] values.
pub fn row(values: &[f64]) -> String {
    values.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 123456.789, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
        assert_eq!(
            row(&[1.0, 2.0]),
            "1.0000000000000000e0,2.0000000000000000e0"
        );
    }
}
