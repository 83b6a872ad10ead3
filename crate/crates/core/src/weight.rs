//! Numeric backends for intersection coordinates.
//!
//! Coordinates only ever need addition, subtraction, comparison and the
//! max-plus flip update, so both exact big integers and `f64` implement the
//! same small trait and every program in the crate is generic over it.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt::Debug;

pub trait Weight: Clone + Debug + PartialOrd + Send + Sync + 'static {
    fn zero() -> Self;
    fn from_u64(v: u64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn is_negative(&self) -> bool;
    fn is_zero(&self) -> bool;
    /// Natural logarithm of a positive value.
    fn ln(&self) -> f64;
    fn to_f64(&self) -> f64;

    /// `max(a + c, b + d) - e`, the flip update.
    #[inline]
    fn delta(a: &Self, b: &Self, c: &Self, d: &Self, e: &Self) -> Self {
        let ac = a.add(c);
        let bd = b.add(d);
        if ac >= bd {
            ac.sub(e)
        } else {
            bd.sub(e)
        }
    }
}

impl Weight for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn from_u64(v: u64) -> Self {
        v as f64
    }
    #[inline]
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    #[inline]
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    #[inline]
    fn is_negative(&self) -> bool {
        *self < 0.0
    }
    #[inline]
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn ln(&self) -> f64 {
        f64::ln(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    #[inline]
    fn delta(a: &Self, b: &Self, c: &Self, d: &Self, e: &Self) -> Self {
        (a + c).max(b + d) - e
    }
}

impl Weight for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_u64(v: u64) -> Self {
        BigInt::from(v)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn ln(&self) -> f64 {
        bigint_ln(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::INFINITY)
    }
}

/// `ln(x)` for a positive big integer without overflowing `f64`.
pub fn bigint_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return ToPrimitive::to_f64(x).map(f64::ln).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top = ToPrimitive::to_f64(&(x >> shift)).unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Ratio `a / b` of two positive big integers as an `f64`.
pub fn bigint_ratio(a: &BigInt, b: &BigInt) -> f64 {
    (bigint_ln(a) - bigint_ln(b)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_matches_max_plus_rule() {
        assert_eq!(f64::delta(&2.0, &1.0, &2.0, &1.0, &1.0), 3.0);
        let b = |v: i64| BigInt::from(v);
        assert_eq!(BigInt::delta(&b(1), &b(1), &b(1), &b(1), &b(2)), b(0));
    }

    #[test]
    fn big_ln_handles_huge_values() {
        let x = BigInt::from(3u32).pow(2000);
        let expect = 2000.0 * 3f64.ln();
        assert!((bigint_ln(&x) - expect).abs() < 1e-9 * expect);
    }
}
