//! Exact dyadic rationals `n / 2^e`.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicRational {
    numerator: i64,
    exponent: u32,
}

impl DyadicRational {
    pub fn new(numerator: i64, exponent: u32) -> Self {
        let mut d = Self { numerator, exponent };
        d.canonicalize();
        d
    }

    pub fn integer(n: i64) -> Self {
        Self::new(n, 0)
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// Multiply by one half.
    pub fn half(self) -> Self {
        Self::new(self.numerator, self.exponent + 1)
    }

    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / 2f64.powi(self.exponent as i32)
    }

    pub fn is_integer(&self) -> bool {
        self.exponent == 0
    }

    fn canonicalize(&mut self) {
        if self.numerator == 0 {
            self.exponent = 0;
            return;
        }
        while self.exponent > 0 && self.numerator % 2 == 0 {
            self.numerator /= 2;
            self.exponent -= 1;
        }
    }

    fn aligned(a: Self, b: Self) -> (i64, i64, u32) {
        let e = a.exponent.max(b.exponent);
        (a.numerator << (e - a.exponent), b.numerator << (e - b.exponent), e)
    }
}

impl Add for DyadicRational {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b, e) = Self::aligned(self, rhs);
        Self::new(a + b, e)
    }
}

impl Sub for DyadicRational {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for DyadicRational {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.numerator, self.exponent)
    }
}

impl From<i64> for DyadicRational {
    fn from(n: i64) -> Self {
        Self::integer(n)
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, 1u64 << self.exponent)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form() {
        let d = DyadicRational::new(12, 3);
        assert_eq!((d.numerator(), d.exponent()), (3, 1));
        assert_eq!(DyadicRational::new(0, 5).exponent(), 0);
        assert_eq!(DyadicRational::integer(3).half().to_string(), "3/2");
    }

    proptest! {
        #[test]
        fn arithmetic_matches_floats(a in -1000i64..1000, ea in 0u32..8, b in -1000i64..1000, eb in 0u32..8) {
            let x = DyadicRational::new(a, ea);
            let y = DyadicRational::new(b, eb);
            prop_assert!(((x + y).to_f64() - (x.to_f64() + y.to_f64())).abs() < 1e-12);
            prop_assert_eq!(x - x, DyadicRational::zero());
            let s = x + y;
            prop_assert!(s.numerator() % 2 != 0 || s.exponent() == 0);
        }
    }
}
