//! Front-door adjustment `Σ_z P(z | x̃) Σ_x P(y | x, z) P(x)`.
//!
//! The expanded polynomial has `|X||Z|` monomials `P(z|x̃) P(y|x,z) P(x)`, so
//! each `P(z|x̃)` occurs `|X|` times, each `P(x)` occurs `|Z|` times and each
//! `P(y|x,z)` once. The two Horner orderings reduce one of those
//! multiplicities to one:
//!
//! - `horner-z`: `Σ_z P(z|x̃) (Σ_x P(y|x,z) P(x))`
//! - `horner-x`: `Σ_x P(x) (Σ_z P(y|x,z) P(z|x̃))`

use crate::bounds::{hoeffding_radius, lil_radius, Radius, LIL_CONSTANT};
use crate::counts::{CountError, CountTable, Estimate, Pattern};

use super::{
    leaf_radius_total, prefix_count, BoundKind, ConstantUsed, Criterion, DomainSizes, EffectError, EffectInterval,
    EffectQuery, FrontdoorForm, Leaf, Regime,
};

/// Formal variables of the front-door polynomial.
#[derive(Debug, Clone)]
pub(crate) struct FrontdoorParts {
    pub n: u64,
    pub sizes: DomainSizes,
    /// `P(z | x̃)`, indexed by `z`.
    pub mediator: Vec<Leaf>,
    /// `P(y | x, z)`, indexed by `x * |Z| + z`.
    pub outcome: Vec<Leaf>,
    /// `P(x)`, indexed by `x`.
    pub treatment: Vec<Leaf>,
    pub constants: Vec<ConstantUsed>,
}

impl FrontdoorParts {
    /// Shared by every form.
    pub fn midpoint(&self) -> f64 {
        let nz = self.sizes.z;
        (0..nz)
            .map(|z| {
                let inner: f64 = (0..self.sizes.x)
                    .map(|x| self.outcome[x * nz + z].mid() * self.treatment[x].mid())
                    .sum();
                self.mediator[z].mid() * inner
            })
            .sum()
    }

    pub fn halfwidth(&self, form: FrontdoorForm) -> Radius {
        let (mediator_k, treatment_k) = match form {
            FrontdoorForm::Expanded => (self.sizes.x, self.sizes.z),
            FrontdoorForm::HornerZ => (1, self.sizes.z),
            FrontdoorForm::HornerX => (self.sizes.x, 1),
        };
        leaf_radius_total(&[
            (&self.treatment, treatment_k),
            (&self.mediator, mediator_k),
            (&self.outcome, 1),
        ])
    }
}

pub(crate) fn frontdoor_parts(table: &CountTable, query: &EffectQuery, n: u64) -> Result<FrontdoorParts, EffectError> {
    query.validate(table)?;
    let sizes = DomainSizes::of(table);
    let k = sizes.k() as f64;
    let d = query.delta;
    let x_tilde = query.treatment_value;
    let y = query.outcome_value;
    let (nx, nz) = (sizes.x, sizes.z);

    let hoeffding_arg = 2.0 * k / d;
    let lil_arg = LIL_CONSTANT * k / d;
    let hoeffding_sym = "2K/delta";
    let lil_sym = "3.3K/delta";

    let mut mediator = Vec::with_capacity(nz);
    let mut outcome = Vec::with_capacity(nx * nz);
    let mut treatment = Vec::with_capacity(nx);
    let constant = |term, bound, constant, value| ConstantUsed {
        term,
        bound,
        constant,
        value,
    };
    let constants = match query.regime {
        Regime::Iid => {
            let r_n = hoeffding_radius(n, hoeffding_arg);
            let r_x = hoeffding_radius(table.count_x(x_tilde), hoeffding_arg);
            for z in 0..nz {
                mediator.push(Leaf::new(table.hat_z_given_x(z, x_tilde), r_x));
            }
            for x in 0..nx {
                for z in 0..nz {
                    outcome.push(Leaf::new(
                        table.hat_y_given_xz(y, x, z),
                        hoeffding_radius(table.count_xz(x, z), hoeffding_arg),
                    ));
                }
                treatment.push(Leaf::new(table.hat_x(x), r_n));
            }
            vec![
                constant("N", BoundKind::Hoeffding, hoeffding_sym, hoeffding_arg),
                constant("#x~", BoundKind::Hoeffding, hoeffding_sym, hoeffding_arg),
                constant("#xz", BoundKind::Hoeffding, hoeffding_sym, hoeffding_arg),
            ]
        }
        Regime::AdaptiveFixed => {
            let r_n = hoeffding_radius(n, hoeffding_arg);
            let r_x = lil_radius(table.count_x(x_tilde), lil_arg);
            for z in 0..nz {
                mediator.push(Leaf::new(table.ddot_z_given_x(z, x_tilde), r_x));
            }
            for x in 0..nx {
                for z in 0..nz {
                    outcome.push(Leaf::new(
                        table.ddot_y_given_xz(y, x, z),
                        lil_radius(table.count_xz(x, z), lil_arg),
                    ));
                }
                treatment.push(Leaf::new(table.hat_x(x), r_n));
            }
            vec![
                constant("N", BoundKind::Hoeffding, hoeffding_sym, hoeffding_arg),
                constant("#x~", BoundKind::IteratedLog, lil_sym, lil_arg),
                constant("#xz", BoundKind::IteratedLog, lil_sym, lil_arg),
            ]
        }
        Regime::Anytime => {
            if n > table.n() {
                return Err(CountError::PrefixTooLong { m: n, n: table.n() }.into());
            }
            let r_n = lil_radius(n, lil_arg);
            let cx = prefix_count(table, Pattern::x(x_tilde), n)?;
            let r_x = lil_radius(cx, lil_arg);
            for z in 0..nz {
                mediator.push(Leaf::new(table.ddot_z_given_x_at(z, x_tilde, cx), r_x));
            }
            for x in 0..nx {
                for z in 0..nz {
                    let c = prefix_count(table, Pattern::xz(x, z), n)?;
                    outcome.push(Leaf::new(table.ddot_y_given_xz_at(y, x, z, c), lil_radius(c, lil_arg)));
                }
                let estimate = if n == 0 { Estimate::Undefined } else { table.ddot_x_at(x, n) };
                treatment.push(Leaf::new(estimate, r_n));
            }
            vec![
                constant("N", BoundKind::IteratedLog, lil_sym, lil_arg),
                constant("#x~", BoundKind::IteratedLog, lil_sym, lil_arg),
                constant("#xz", BoundKind::IteratedLog, lil_sym, lil_arg),
            ]
        }
    };
    Ok(FrontdoorParts {
        n,
        sizes,
        mediator,
        outcome,
        treatment,
        constants,
    })
}

fn finish(query: &EffectQuery, parts: FrontdoorParts) -> EffectInterval {
    let mid = parts.midpoint();
    let hw = parts.halfwidth(query.frontdoor_form);
    EffectInterval::build(query, parts.n, mid, hw, parts.constants)
}

/// Fixed-`N` interval from IID data. Honors `query.frontdoor_form`.
pub fn frontdoor_ci_iid(table: &CountTable, query: &EffectQuery) -> Result<EffectInterval, EffectError> {
    query.expect(Criterion::Frontdoor, Regime::Iid)?;
    Ok(finish(query, frontdoor_parts(table, query, table.n())?))
}

pub fn frontdoor_ci_adaptive(table: &CountTable, query: &EffectQuery) -> Result<EffectInterval, EffectError> {
    query.expect(Criterion::Frontdoor, Regime::AdaptiveFixed)?;
    Ok(finish(query, frontdoor_parts(table, query, table.n())?))
}

pub fn frontdoor_cs_anytime(table: &CountTable, query: &EffectQuery, n: u64) -> Result<EffectInterval, EffectError> {
    query.expect(Criterion::Frontdoor, Regime::Anytime)?;
    Ok(finish(query, frontdoor_parts(table, query, n)?))
}

/// IID front-door half-width for the given form, ignoring `query.frontdoor_form`.
pub fn frontdoor_halfwidth_variant(
    table: &CountTable,
    query: &EffectQuery,
    form: FrontdoorForm,
) -> Result<Radius, EffectError> {
    query.expect(Criterion::Frontdoor, Regime::Iid)?;
    Ok(frontdoor_parts(table, query, table.n())?.halfwidth(form))
}
