//! Scalar abstraction shared by the exact and floating-point code paths.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

/// Field element usable by the geometric routines.
///
/// Implemented for `f32`, `f64` and [`BigRational`]. Only the rational
/// implementation yields exact predicates; the float implementations exist for
/// the baseline solvers and for rendering.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed {
    /// `true` when arithmetic on this type never rounds.
    const EXACT: bool;

    /// Lossless conversion from binary64. `None` when the value cannot be
    /// represented exactly (or is not finite).
    fn from_f64_exact(v: f64) -> Option<Self>;

    /// Nearest binary64 value (may be infinite on overflow).
    fn to_f64_nearest(&self) -> f64;

    /// Exact ratio of two small integers.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_f64_exact(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64_nearest(&self) -> f64 {
        *self
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_f64_exact(v: f64) -> Option<Self> {
        let s = v as f32;
        (s.is_finite() && s as f64 == v).then_some(s)
    }

    fn to_f64_nearest(&self) -> f64 {
        *self as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_f64_exact(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn to_f64_nearest(&self) -> f64 {
        // num-rational rounds to nearest; overflow saturates to infinity
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// Rational from an `f64`, panicking on non-finite input. Intended for
/// constants and validated input.
pub fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

/// Exact rational `num/den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::from_ratio(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use proptest::prelude::*;

    #[test]
    fn third_rounds_to_nearest() {
        assert_eq!(ratio(1, 3).to_f64_nearest(), 1.0 / 3.0);
        assert_eq!(ratio(-2, 3).to_f64_nearest(), -2.0 / 3.0);
        assert_eq!(ratio(1, 10).to_f64_nearest(), 0.1);
    }

    #[test]
    fn overflow_is_infinite() {
        let big = BigRational::from_integer(num_traits::pow(BigInt::from(10), 400));
        assert!(big.to_f64_nearest().is_infinite());
    }

    proptest! {
        #[test]
        fn f64_values_round_trip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            prop_assert_eq!(rat(v).to_f64_nearest(), v);
        }

        #[test]
        fn exact_arithmetic_is_invertible(a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000) {
            let x = ratio(a, b);
            let y = ratio(c, d);
            prop_assert_eq!((x.clone() + y.clone()) - y.clone(), x.clone());
            if !y.is_zero() {
                prop_assert_eq!((x.clone() * y.clone()) / y, x);
            }
        }
    }
}
