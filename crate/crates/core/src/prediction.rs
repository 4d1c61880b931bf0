//! Prediction set for the next outcome under intervention, binary back-door case.
//!
//! A candidate `y` is kept when the right end of the adaptive back-door
//! interval for `P(y | do(x̃))`, built at level `δ/2` with the binary
//! constants, is strictly above `δ/2`. At level `δ/2` those constants read
//! `12/δ` for the Hoeffding term and `20/δ` for the iterated-log terms.
//! An outcome with probability at most `δ/2` is then excluded with
//! probability at most `δ/2`, so a fresh intervened outcome lands outside the
//! set with probability at most `δ`.

use serde::Serialize;
use thiserror::Error;

use crate::bounds::{check_delta, BoundsError, Radius};
use crate::counts::CountTable;
use crate::effects::{backdoor_ci_adaptive, Criterion, EffectError, EffectQuery, Regime};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictionError {
    #[error("prediction sets need binary treatment and outcome and a single binary adjustment variable")]
    NotBinary,
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Effect(#[from] EffectError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateDiagnostics {
    pub y: usize,
    pub label: String,
    pub midpoint: f64,
    pub halfwidth: Radius,
    /// `midpoint + halfwidth`, unclipped; `null` when unbounded.
    pub right_endpoint: Option<f64>,
    pub threshold: f64,
    pub member: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionSet {
    pub format_version: u32,
    pub n: u64,
    pub delta: f64,
    pub treatment_value: usize,
    pub members: Vec<usize>,
    pub labels: Vec<String>,
    pub diagnostics: Vec<CandidateDiagnostics>,
}

impl PredictionSet {
    pub fn contains(&self, y: usize) -> bool {
        self.members.contains(&y)
    }
}

pub fn prediction_set(table: &CountTable, x_tilde: usize, delta: f64) -> Result<PredictionSet, PredictionError> {
    check_delta(delta)?;
    let schema = table.schema();
    if !schema.is_binary_single_z() {
        return Err(PredictionError::NotBinary);
    }
    let threshold = delta / 2.0;
    let mut diagnostics = Vec::with_capacity(2);
    for y in 0..2 {
        let query = EffectQuery::new(Criterion::Backdoor, x_tilde, y, threshold, Regime::AdaptiveFixed).toy(true);
        let iv = backdoor_ci_adaptive(table, &query)?;
        let right = iv.halfwidth.finite().map(|h| iv.midpoint + h);
        diagnostics.push(CandidateDiagnostics {
            y,
            label: schema.outcome.domain[y].clone(),
            midpoint: iv.midpoint,
            halfwidth: iv.halfwidth,
            right_endpoint: right,
            threshold,
            member: right.is_none_or(|r| r > threshold),
        });
    }
    let members: Vec<usize> = diagnostics.iter().filter(|d| d.member).map(|d| d.y).collect();
    Ok(PredictionSet {
        format_version: crate::FORMAT_VERSION,
        n: table.n(),
        delta,
        treatment_value: x_tilde,
        labels: members.iter().map(|&y| schema.outcome.domain[y].clone()).collect(),
        members,
        diagnostics,
    })
}
