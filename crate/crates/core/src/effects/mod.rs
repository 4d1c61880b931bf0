//! Confidence intervals and confidence sequences for `P(y | do(x̃))`.
//!
//! | theorem | criterion  | regime         | estimates              |
//! |---------|------------|----------------|------------------------|
//! | 1       | back-door  | IID            | hat                    |
//! | 2       | front-door | IID            | hat                    |
//! | 3       | back-door  | adaptive fixed | hat `P(z)`, double-hat conditionals |
//! | 4       | front-door | adaptive fixed | hat `P(x)`, double-hat conditionals |
//! | 5       | back-door  | anytime        | double-hat everywhere  |
//! | 6       | front-door | anytime        | double-hat everywhere  |
//!
//! Each construction splits `δ` across its estimated probabilities with the
//! fixed constants listed in [`ConstantUsed`] records, and the half-width is
//! the sum over leaf occurrences of the expanded (or Horner) effect polynomial.
//!
//! When a conditioning count is zero the matching estimate is undefined; it
//! contributes 0 to the midpoint and makes the half-width unbounded.

mod backdoor;
pub mod expression;
mod frontdoor;
mod truth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{check_delta, BoundsError, Radius};
use crate::counts::{CountError, CountTable, Estimate};
use crate::intervals::radius_with_multiplicity;

pub use backdoor::{backdoor_ci_adaptive, backdoor_ci_iid, backdoor_cs_anytime, backdoor_midpoint_iid};
pub use frontdoor::{frontdoor_ci_adaptive, frontdoor_ci_iid, frontdoor_cs_anytime, frontdoor_halfwidth_variant};
pub use truth::{interventional_truth, true_effect, TruthError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EffectError {
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Counts(#[from] CountError),
    #[error("treatment value index {0} is outside the treatment domain")]
    TreatmentValue(usize),
    #[error("outcome value index {0} is outside the outcome domain")]
    OutcomeValue(usize),
    #[error("the binary toy constants need binary X, Y and a single binary Z")]
    ToyNotBinary,
    #[error("the binary toy constants exist only for the back-door criterion")]
    ToyFrontdoor,
    #[error("Horner forms are only defined for the front-door IID interval")]
    HornerUnavailable,
    #[error("query regime {got} does not match the {expected} construction")]
    RegimeMismatch { expected: Regime, got: Regime },
    #[error("query criterion {got} does not match the {expected} construction")]
    CriterionMismatch { expected: Criterion, got: Criterion },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Backdoor,
    Frontdoor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Iid,
    AdaptiveFixed,
    Anytime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrontdoorForm {
    #[default]
    Expanded,
    HornerZ,
    HornerX,
}

macro_rules! kebab_enum {
    ($ty:ty { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok(Self::$variant),)+
                    other => Err(format!("unknown value `{other}`; expected one of: {}", [$($text),+].join(", "))),
                }
            }
        }
    };
}

kebab_enum!(Criterion { Backdoor => "backdoor", Frontdoor => "frontdoor" });
kebab_enum!(Regime { Iid => "iid", AdaptiveFixed => "adaptive-fixed", Anytime => "anytime" });
kebab_enum!(FrontdoorForm { Expanded => "expanded", HornerZ => "horner-z", HornerX => "horner-x" });

/// What to estimate and how.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectQuery {
    pub criterion: Criterion,
    /// Index of the intervention value `x̃` in the treatment domain.
    pub treatment_value: usize,
    /// Index of `y` in the outcome domain.
    pub outcome_value: usize,
    pub delta: f64,
    pub regime: Regime,
    #[serde(default)]
    pub binary_toy: bool,
    #[serde(default)]
    pub frontdoor_form: FrontdoorForm,
}

impl EffectQuery {
    pub fn new(criterion: Criterion, treatment_value: usize, outcome_value: usize, delta: f64, regime: Regime) -> Self {
        Self {
            criterion,
            treatment_value,
            outcome_value,
            delta,
            regime,
            binary_toy: false,
            frontdoor_form: FrontdoorForm::Expanded,
        }
    }

    pub fn toy(mut self, on: bool) -> Self {
        self.binary_toy = on;
        self
    }

    pub fn form(mut self, form: FrontdoorForm) -> Self {
        self.frontdoor_form = form;
        self
    }

    /// Theorem number of the construction this query selects.
    pub fn theorem(&self) -> u8 {
        match (self.criterion, self.regime) {
            (Criterion::Backdoor, Regime::Iid) => 1,
            (Criterion::Frontdoor, Regime::Iid) => 2,
            (Criterion::Backdoor, Regime::AdaptiveFixed) => 3,
            (Criterion::Frontdoor, Regime::AdaptiveFixed) => 4,
            (Criterion::Backdoor, Regime::Anytime) => 5,
            (Criterion::Frontdoor, Regime::Anytime) => 6,
        }
    }

    pub fn validate(&self, table: &CountTable) -> Result<(), EffectError> {
        check_delta(self.delta)?;
        let schema = table.schema();
        if self.treatment_value >= schema.x_size() {
            return Err(EffectError::TreatmentValue(self.treatment_value));
        }
        if self.outcome_value >= schema.y_size() {
            return Err(EffectError::OutcomeValue(self.outcome_value));
        }
        if self.binary_toy {
            if self.criterion == Criterion::Frontdoor {
                return Err(EffectError::ToyFrontdoor);
            }
            if !schema.is_binary_single_z() {
                return Err(EffectError::ToyNotBinary);
            }
        }
        if self.frontdoor_form != FrontdoorForm::Expanded
            && (self.criterion != Criterion::Frontdoor || self.regime != Regime::Iid)
        {
            return Err(EffectError::HornerUnavailable);
        }
        Ok(())
    }

    pub(crate) fn expect(&self, criterion: Criterion, regime: Regime) -> Result<(), EffectError> {
        if self.criterion != criterion {
            return Err(EffectError::CriterionMismatch {
                expected: criterion,
                got: self.criterion,
            });
        }
        if self.regime != regime {
            return Err(EffectError::RegimeMismatch {
                expected: regime,
                got: self.regime,
            });
        }
        Ok(())
    }
}

/// `|X|`, `|Y|`, `|Z|` and `K = |X||Z| + |X| + |Z|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DomainSizes {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl DomainSizes {
    pub fn of(table: &CountTable) -> Self {
        let (x, y, z) = table.sizes();
        Self { x, y, z }
    }

    /// Number of distinct formal variables in the front-door polynomial.
    pub fn k(&self) -> usize {
        self.x * self.z + self.x + self.z
    }
}

/// Which concentration bound a half-width term uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Hoeffding,
    IteratedLog,
}

/// One δ-split constant: the term it applies to, its symbolic form, and the
/// numeric argument `c/δ` of the outer logarithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantUsed {
    pub term: &'static str,
    pub bound: BoundKind,
    pub constant: &'static str,
    pub value: f64,
}

/// A realised interval for one query at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectInterval {
    pub format_version: u32,
    pub theorem: u8,
    pub criterion: Criterion,
    pub regime: Regime,
    pub n: u64,
    pub midpoint: f64,
    pub halfwidth: Radius,
    pub lower: f64,
    pub upper: f64,
    pub unbounded: bool,
    pub constants_used: Vec<ConstantUsed>,
}

impl EffectInterval {
    pub(crate) fn build(query: &EffectQuery, n: u64, midpoint: f64, halfwidth: Radius, constants_used: Vec<ConstantUsed>) -> Self {
        let (lower, upper) = match halfwidth {
            Radius::Unbounded => (0.0, 1.0),
            Radius::Finite(hw) => {
                let lo = (midpoint - hw).max(0.0);
                let hi = (midpoint + hw).min(1.0);
                if lo <= hi {
                    (lo, hi)
                } else {
                    let m = midpoint.clamp(0.0, 1.0);
                    (m, m)
                }
            }
        };
        Self {
            format_version: crate::FORMAT_VERSION,
            theorem: query.theorem(),
            criterion: query.criterion,
            regime: query.regime,
            n,
            midpoint,
            halfwidth,
            lower,
            upper,
            unbounded: halfwidth.is_unbounded(),
            constants_used,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A formal variable of the effect polynomial: its estimate and radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Leaf {
    pub estimate: Estimate,
    pub radius: Radius,
}

impl Leaf {
    pub fn new(estimate: Estimate, radius: Radius) -> Self {
        Self { estimate, radius }
    }

    pub fn mid(&self) -> f64 {
        self.estimate.or_zero()
    }
}

pub(crate) fn leaf_radius_total(groups: &[(&[Leaf], usize)]) -> Radius {
    let terms: Vec<(Radius, usize)> = groups
        .iter()
        .flat_map(|(leaves, k)| leaves.iter().map(move |l| (l.radius, *k)))
        .collect();
    radius_with_multiplicity(&terms)
}

/// Dispatches on the query's criterion and regime; the anytime regime is
/// evaluated at the table's current length.
pub fn compute(table: &CountTable, query: &EffectQuery) -> Result<EffectInterval, EffectError> {
    match (query.criterion, query.regime) {
        (Criterion::Backdoor, Regime::Iid) => backdoor_ci_iid(table, query),
        (Criterion::Frontdoor, Regime::Iid) => frontdoor_ci_iid(table, query),
        (Criterion::Backdoor, Regime::AdaptiveFixed) => backdoor_ci_adaptive(table, query),
        (Criterion::Frontdoor, Regime::AdaptiveFixed) => frontdoor_ci_adaptive(table, query),
        (Criterion::Backdoor, Regime::Anytime) => backdoor_cs_anytime(table, query, table.n()),
        (Criterion::Frontdoor, Regime::Anytime) => frontdoor_cs_anytime(table, query, table.n()),
    }
}

/// Counts as of a prefix of length `n`, read from the live counts when `n`
/// is the full length and from the arrival log otherwise.
pub(crate) fn prefix_count(table: &CountTable, p: crate::counts::Pattern, n: u64) -> Result<u64, EffectError> {
    if n == table.n() {
        Ok(table.count(p))
    } else {
        Ok(table.count_at(p, n)?)
    }
}

#[cfg(test)]
mod tests;
