//! Scalar bounds for probability arithmetic.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num};

/// Field-like scalar usable as a probability: `f32`, `f64`, or an exact
/// rational such as `num_rational::BigRational`.
pub trait Probability: Clone + PartialOrd + Num + FromPrimitive + Debug {
    /// Conversion from an `f64` literal; panics only for non-finite input.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite probability literal")
    }

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }
}

impl<T: Clone + PartialOrd + Num + FromPrimitive + Debug> Probability for T {}

/// Probabilities that also support logarithms, required for entropy.
pub trait FloatProbability: Probability + Float {}

impl<T: Probability + Float> FloatProbability for T {}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::One;

    #[test]
    fn half_is_exact_for_rationals() {
        let h = BigRational::half();
        assert_eq!(h.clone() + h, BigRational::one());
        assert_eq!(f32::half(), 0.5);
    }
}
