//! Scalar helpers for the `no_std` build.
//!
//! Transcendental float methods live in `std`, not `core`, so they are routed
//! through `libm` here. Keeping them behind one module also pins every numeric
//! path to a single implementation, which keeps results bit-identical across
//! targets.

pub(crate) use libm::{cos, exp, log, log10, pow, sin, sqrt, tgamma};

/// Neumaier-compensated accumulator.
///
/// Objective values are compared across mode updates whose residuals are laid
/// out differently; plain left-to-right summation would make those comparisons
/// noisy at the scale the solver's stopping rules operate on.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of squares.
pub(crate) fn sum_of_squares(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v * v);
    }
    acc.value()
}

/// Compensated dot product.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = CompensatedSum::new();
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc.add(x * y);
    }
    acc.value()
}

/// Euclidean norm with compensated accumulation.
pub(crate) fn norm(values: &[f64]) -> f64 {
    sqrt(sum_of_squares(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut acc = CompensatedSum::new();
        acc.add(1e16);
        acc.add(1.0);
        acc.add(-1e16);
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn dot_matches_hand_computation() {
        assert_eq!(dot(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), 32.0);
    }
}
