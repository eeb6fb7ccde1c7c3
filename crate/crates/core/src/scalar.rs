//! Scalar abstractions.
//!
//! Combinatorial quantities in this crate are integers, but two families of
//! numbers vary by caller: real-valued asymptotic bounds (`f32`/`f64`) and
//! exact counts (machine integers or arbitrary precision).

use num_traits::{Float, FromPrimitive, Num};

/// Floating point type used by the asymptotic bound evaluators.
pub trait Real: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display {}

impl Real for f32 {}
impl Real for f64 {}

/// Exact count type used for binomial sums.
///
/// Must be able to represent the values it is asked for; `BigUint` always can.
pub trait Count: Num + Clone + FromPrimitive + PartialOrd + std::fmt::Debug + std::fmt::Display {}

impl<T> Count for T where T: Num + Clone + FromPrimitive + PartialOrd + std::fmt::Debug + std::fmt::Display {}

pub(crate) fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("finite float conversion")
}

/// Formats a float with six significant digits.
pub fn fmt_sig6<F: Real>(x: F) -> String {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{v:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig6(22.627416997969522_f64), "22.6274");
        assert_eq!(fmt_sig6(256.0_f64), "256.000");
        assert_eq!(fmt_sig6(0.0_f64), "0");
        assert_eq!(fmt_sig6(1.0_f32), "1.00000");
        assert_eq!(fmt_sig6(12345678.0_f64), "1.23457e7");
    }
}
