//! Finite-sample confidence intervals and anytime-valid confidence sequences
//! for causal effects identified by the back-door or front-door criterion.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: finite-variable DAGs and the back-door / front-door criterion checks.
//! - [`counts`]: streaming occurrence counts with dyadic checkpoints.
//! - [`bounds`]: Hoeffding and iterated-logarithm radii.
//! - [`intervals`]: clipped interval arithmetic on `[0, 1]` and expression evaluation.
//! - [`effects`]: midpoints and half-widths for the six interval constructions.
//! - [`prediction`]: prediction sets for the next intervened outcome.
//! - [`simulator`]: causal models, IID and adaptive stream generation.
//! - [`coverage`]: Monte Carlo coverage harness.
//! - [`io`]: observation stream readers and writers.

pub mod bounds;
pub mod counts;
pub mod coverage;
pub mod effects;
pub mod graph;
pub mod intervals;
pub mod io;
pub mod numeric;
pub mod prediction;
pub mod simulator;

pub use bounds::Radius;
pub use counts::{CountTable, Estimate, Observation, Pattern, Schema, Variable};
pub use effects::{Criterion, EffectInterval, EffectQuery, FrontdoorForm, Regime};
pub use graph::{CriterionReport, Dag};
pub use intervals::{Expr, ProbInterval};
pub use simulator::{CausalModel, PolicySpec, Roles};

/// Version tag written into every emitted record and file.
pub const FORMAT_VERSION: u32 = 1;
