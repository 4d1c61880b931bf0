//! Concentration radii for a Bernoulli success probability.
//!
//! - Fixed sample size (Hoeffding): `sqrt(ln(2/δ) / (2n))`.
//! - Confidence sequence over all `n` (dyadic iterated logarithm):
//!   `sqrt((2 ln lb ⌊⌊n⌋⌋ + ln(3.3/δ)) / (2 ⌊⌊n⌋⌋))`, unbounded for `n < 2`.
//!
//! The constant 3.3 bounds `π²/3`, the normaliser of the `δ_k ∝ 1/k²` split
//! across dyadic checkpoints. Callers that spread `δ` over several estimated
//! probabilities use [`hoeffding_radius`] and [`lil_radius`], which take the
//! argument of the outer logarithm (`c/δ`) directly.
//!
//! All radii are rounded up by a few ulps so they are never smaller than the
//! real-valued formula.

use std::fmt;
use std::iter::Sum;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::counts::dyadic_floor;
use crate::numeric::{exact_sum, round_up};

/// `π²/3 ≈ 3.29`, rounded up.
pub const LIL_CONSTANT: f64 = 3.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
}

pub fn check_delta(delta: f64) -> Result<(), BoundsError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(BoundsError::InvalidDelta(delta))
    }
}

/// A non-negative half-width that may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Radius {
    Finite(f64),
    Unbounded,
}

impl Radius {
    pub const ZERO: Radius = Radius::Finite(0.0);

    pub fn finite(self) -> Option<f64> {
        match self {
            Radius::Finite(v) => Some(v),
            Radius::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Radius::Unbounded)
    }

    /// `+∞` for the unbounded variant.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn from_f64(v: f64) -> Self {
        if v.is_finite() {
            Radius::Finite(v)
        } else {
            Radius::Unbounded
        }
    }

    /// Correctly rounded sum; unbounded if any term is.
    pub fn total<I: IntoIterator<Item = Radius>>(terms: I) -> Radius {
        let mut finite = Vec::new();
        for t in terms {
            match t {
                Radius::Finite(v) => finite.push(v),
                Radius::Unbounded => return Radius::Unbounded,
            }
        }
        Radius::Finite(exact_sum(finite))
    }
}

impl std::ops::Add for Radius {
    type Output = Radius;
    fn add(self, rhs: Radius) -> Radius {
        Radius::total([self, rhs])
    }
}

impl Sum for Radius {
    fn sum<I: Iterator<Item = Radius>>(iter: I) -> Radius {
        Radius::total(iter)
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radius::Finite(v) => write!(f, "{v}"),
            Radius::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// Serialised as a number, or `null` when unbounded.
impl Serialize for Radius {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Radius::Finite(v) => s.serialize_f64(*v),
            Radius::Unbounded => s.serialize_none(),
        }
    }
}

/// `sqrt(ln(log_arg) / (2n))`; unbounded when `n = 0`.
pub fn hoeffding_radius(n: u64, log_arg: f64) -> Radius {
    if n == 0 {
        return Radius::Unbounded;
    }
    Radius::Finite(round_up((log_arg.ln() / (2.0 * n as f64)).sqrt()))
}

/// `sqrt((2 ln lb ⌊⌊n⌋⌋ + ln(log_arg)) / (2 ⌊⌊n⌋⌋))`; unbounded when `n < 2`.
pub fn lil_radius(n: u64, log_arg: f64) -> Radius {
    if n < 2 {
        return Radius::Unbounded;
    }
    let d = dyadic_floor(n);
    let lb = d.trailing_zeros() as f64;
    let num = 2.0 * lb.ln() + log_arg.ln();
    Radius::Finite(round_up((num / (2.0 * d as f64)).sqrt()))
}

/// Radius of the fixed-`n` Hoeffding interval at level `1 − δ`.
pub fn hoeffding_halfwidth(n: u64, delta: f64) -> Result<Radius, BoundsError> {
    check_delta(delta)?;
    Ok(hoeffding_radius(n, 2.0 / delta))
}

/// Radius of the dyadic iterated-logarithm confidence sequence at level `1 − δ`.
pub fn lil_halfwidth(n: u64, delta: f64) -> Result<Radius, BoundsError> {
    check_delta(delta)?;
    Ok(lil_radius(n, LIL_CONSTANT / delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen from a 40-digit mpmath evaluation of the closed forms.
    const HOEFFDING_200: f64 = 0.096_032_279_131_992_08;
    const HOEFFDING_800: f64 = 0.048_016_139_565_996_04;
    const LIL_1024: f64 = 0.065_531_275_810_730_93;

    fn close(a: Radius, b: f64) -> bool {
        (a.finite().unwrap() - b).abs() < 1e-12
    }

    #[test]
    fn hoeffding_examples() {
        assert!(close(hoeffding_halfwidth(200, 0.05).unwrap(), HOEFFDING_200));
        assert!(close(hoeffding_halfwidth(800, 0.05).unwrap(), HOEFFDING_800));
        assert_eq!(hoeffding_halfwidth(0, 0.3).unwrap(), Radius::Unbounded);
        let ratio = hoeffding_halfwidth(800, 0.05).unwrap().as_f64()
            / hoeffding_halfwidth(200, 0.05).unwrap().as_f64();
        assert!((ratio - 0.5).abs() < 1e-14);
    }

    #[test]
    fn lil_examples() {
        assert!(close(lil_halfwidth(1024, 0.05).unwrap(), LIL_1024));
        assert_eq!(lil_halfwidth(1, 0.05).unwrap(), Radius::Unbounded);
        assert_eq!(lil_halfwidth(0, 0.05).unwrap(), Radius::Unbounded);
        assert_eq!(
            lil_halfwidth(1024, 0.05).unwrap(),
            lil_halfwidth(2047, 0.05).unwrap()
        );
        // n = 2 has lb 2 = 1, so the iterated-log term vanishes.
        let two = lil_halfwidth(2, 0.1).unwrap().as_f64();
        assert!((two - ((33.0_f64).ln() / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn delta_validation() {
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(hoeffding_halfwidth(10, bad).is_err());
            assert!(lil_halfwidth(10, bad).is_err());
        }
    }

    #[test]
    fn radius_sum_absorbs_unbounded() {
        let s: Radius = [Radius::Finite(0.1), Radius::Finite(0.2)].into_iter().sum();
        assert_eq!(s, Radius::Finite(exact_sum([0.1, 0.2])));
        assert_eq!(Radius::Finite(1.0) + Radius::Unbounded, Radius::Unbounded);
        assert_eq!(serde_json::to_string(&Radius::Unbounded).unwrap(), "null");
    }

    #[test]
    fn lil_dominates_hoeffding() {
        for n in 2..3000 {
            for d in [0.2, 0.05, 0.001] {
                assert!(lil_halfwidth(n, d).unwrap() >= hoeffding_halfwidth(n, d).unwrap());
            }
        }
    }

    #[test]
    fn lil_shrinks_across_blocks() {
        for k in 1..=20u32 {
            for d in [0.2, 0.05, 0.001] {
                let a = lil_halfwidth(1 << k, d).unwrap();
                let b = lil_halfwidth(1 << (k + 1), d).unwrap();
                assert!(b < a, "k={k} delta={d}");
            }
        }
    }
}
