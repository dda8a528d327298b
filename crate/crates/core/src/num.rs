//! Scalar abstraction and compensated summation.
//!
//! Everything downstream accumulates long, slowly decaying series (traces,
//! cumulative spectra, zeta tails). Plain summation loses ~n*eps of relative
//! accuracy, which is fatal when thresholds are compared with a closed `>=`
//! and no guard band, so all running sums in this crate go through
//! [`KahanSum`].

use core::fmt;
use core::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the library is generic over (`f64`, `f32`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + AddAssign + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant (tolerances, literals) into the working scalar.
#[inline]
pub(crate) fn cast<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 constant must convert into the scalar type")
}

/// Kahan-compensated accumulator.
///
/// The compensation keeps the running error at a few ulps of the total
/// independent of the number of addends, and makes sums bit-deterministic
/// for a fixed addend order.
#[derive(Debug, Clone, Copy)]
pub struct KahanSum<R> {
    sum: R,
    err: R,
}

impl<R: Real> Default for KahanSum<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> KahanSum<R> {
    pub fn new() -> Self {
        KahanSum {
            sum: R::zero(),
            err: R::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, rhs: R) {
        let y = rhs - self.err;
        let t = self.sum + y;
        self.err = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> R {
        self.sum
    }
}

impl<R: Real> AddAssign<R> for KahanSum<R> {
    fn add_assign(&mut self, rhs: R) {
        self.add(rhs);
    }
}

impl<R: Real> FromIterator<R> for KahanSum<R> {
    fn from_iter<I: IntoIterator<Item = R>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_matches_exact_sum_on_dyadic_values() {
        let mut acc = KahanSum::<f64>::new();
        for _ in 0..1_000 {
            acc.add(0.25);
        }
        assert_eq!(acc.value(), 250.0);
    }

    #[test]
    fn kahan_beats_naive_on_decaying_series() {
        // sum of 1e7 copies of 0.1 has exact value 1e6; naive drift is ~1e-4.
        let mut kahan = KahanSum::<f64>::new();
        let mut naive = 0.0f64;
        for _ in 0..10_000_000u64 {
            kahan.add(0.1);
            naive += 0.1;
        }
        let kahan_err = (kahan.value() - 1.0e6).abs();
        let naive_err = (naive - 1.0e6).abs();
        assert!(kahan_err <= 1e-9, "kahan error {kahan_err}");
        assert!(naive_err > kahan_err * 100.0, "naive error {naive_err}");
    }

    #[test]
    fn accumulation_is_resumable_bit_for_bit() {
        // Summing a prefix and continuing must equal one uninterrupted pass:
        // downstream trace assembly relies on this determinism.
        let xs: Vec<f64> = (1..=57).map(|k| 1.0 / k as f64).collect();
        let full: KahanSum<f64> = xs.iter().copied().collect();

        let mut resumed = KahanSum::<f64>::new();
        for &x in &xs[..20] {
            resumed.add(x);
        }
        for &x in &xs[20..] {
            resumed.add(x);
        }
        assert_eq!(full.value().to_bits(), resumed.value().to_bits());
    }

    #[test]
    fn works_for_f32() {
        let mut acc = KahanSum::<f32>::new();
        for _ in 0..100 {
            acc.add(0.5f32);
        }
        assert_eq!(acc.value(), 50.0f32);
    }
}
