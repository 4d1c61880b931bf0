//! Back-door adjustment `Σ_z P(y | x̃, z) P(z)`.

use crate::bounds::{hoeffding_radius, lil_radius, Radius};
use crate::counts::{CountError, CountTable, Estimate, Pattern};

use super::{
    leaf_radius_total, prefix_count, BoundKind, ConstantUsed, Criterion, DomainSizes, EffectError, EffectInterval,
    EffectQuery, Leaf, Regime,
};

/// Formal variables of the back-door sum, indexed by flattened `z`.
#[derive(Debug, Clone)]
pub(crate) struct BackdoorParts {
    pub n: u64,
    pub z_marginal: Vec<Leaf>,
    pub outcome: Vec<Leaf>,
    pub constants: Vec<ConstantUsed>,
}

impl BackdoorParts {
    pub fn midpoint(&self) -> f64 {
        self.outcome
            .iter()
            .zip(&self.z_marginal)
            .map(|(o, z)| o.mid() * z.mid())
            .sum()
    }

    /// `|Z|` copies of the marginal radius plus one conditional radius per `z`.
    pub fn halfwidth(&self) -> Radius {
        leaf_radius_total(&[(&self.z_marginal, 1), (&self.outcome, 1)])
    }
}

fn constant(term: &'static str, bound: BoundKind, constant: &'static str, value: f64) -> ConstantUsed {
    ConstantUsed {
        term,
        bound,
        constant,
        value,
    }
}

pub(crate) fn backdoor_parts(table: &CountTable, query: &EffectQuery, n: u64) -> Result<BackdoorParts, EffectError> {
    query.validate(table)?;
    let sizes = DomainSizes::of(table);
    let zs = sizes.z as f64;
    let d = query.delta;
    let (x, y) = (query.treatment_value, query.outcome_value);
    let toy = query.binary_toy;

    let (hoeffding_arg, hoeffding_sym) = if toy { (6.0 / d, "6/delta") } else { (4.0 * zs / d, "4|Z|/delta") };
    let (lil_arg, lil_sym) = if toy { (10.0 / d, "10/delta") } else { (6.6 * zs / d, "6.6|Z|/delta") };

    let mut z_marginal = Vec::with_capacity(sizes.z);
    let mut outcome = Vec::with_capacity(sizes.z);
    let constants = match query.regime {
        Regime::Iid => {
            let r_n = hoeffding_radius(n, hoeffding_arg);
            for z in 0..sizes.z {
                z_marginal.push(Leaf::new(table.hat_z(z), r_n));
                outcome.push(Leaf::new(
                    table.hat_y_given_xz(y, x, z),
                    hoeffding_radius(table.count_xz(x, z), hoeffding_arg),
                ));
            }
            vec![
                constant("N", BoundKind::Hoeffding, hoeffding_sym, hoeffding_arg),
                constant("#x~z", BoundKind::Hoeffding, hoeffding_sym, hoeffding_arg),
            ]
        }
        Regime::AdaptiveFixed => {
            let r_n = hoeffding_radius(n, hoeffding_arg);
            for z in 0..sizes.z {
                z_marginal.push(Leaf::new(table.hat_z(z), r_n));
                outcome.push(Leaf::new(
                    table.ddot_y_given_xz(y, x, z),
                    lil_radius(table.count_xz(x, z), lil_arg),
                ));
            }
            vec![
                constant("N", BoundKind::Hoeffding, hoeffding_sym, hoeffding_arg),
                constant("#x~z", BoundKind::IteratedLog, lil_sym, lil_arg),
            ]
        }
        Regime::Anytime => {
            if n > table.n() {
                return Err(CountError::PrefixTooLong { m: n, n: table.n() }.into());
            }
            let r_n = lil_radius(n, lil_arg);
            for z in 0..sizes.z {
                let estimate = if n == 0 { Estimate::Undefined } else { table.ddot_z_at(z, n) };
                z_marginal.push(Leaf::new(estimate, r_n));
                let c = prefix_count(table, Pattern::xz(x, z), n)?;
                outcome.push(Leaf::new(table.ddot_y_given_xz_at(y, x, z, c), lil_radius(c, lil_arg)));
            }
            vec![
                constant("N", BoundKind::IteratedLog, lil_sym, lil_arg),
                constant("#x~z", BoundKind::IteratedLog, lil_sym, lil_arg),
            ]
        }
    };

    Ok(BackdoorParts {
        n,
        z_marginal,
        outcome,
        constants,
    })
}

fn finish(query: &EffectQuery, parts: BackdoorParts) -> EffectInterval {
    let mid = parts.midpoint();
    let hw = parts.halfwidth();
    EffectInterval::build(query, parts.n, mid, hw, parts.constants)
}

/// `Σ_z p̂(y | x̃, z) p̂(z)`; a `z` with `#x̃z = 0` contributes zero.
pub fn backdoor_midpoint_iid(table: &CountTable, x: usize, y: usize) -> f64 {
    (0..table.sizes().2)
        .map(|z| table.hat_y_given_xz(y, x, z).or_zero() * table.hat_z(z).or_zero())
        .sum()
}

/// Fixed-`N` interval from IID data (toy constant `6/δ` when `binary_toy`).
pub fn backdoor_ci_iid(table: &CountTable, query: &EffectQuery) -> Result<EffectInterval, EffectError> {
    query.expect(Criterion::Backdoor, Regime::Iid)?;
    Ok(finish(query, backdoor_parts(table, query, table.n())?))
}

/// Fixed-`N` interval when treatments may depend on the whole past.
pub fn backdoor_ci_adaptive(table: &CountTable, query: &EffectQuery) -> Result<EffectInterval, EffectError> {
    query.expect(Criterion::Backdoor, Regime::AdaptiveFixed)?;
    Ok(finish(query, backdoor_parts(table, query, table.n())?))
}

/// Member `n` of the anytime-valid confidence sequence, `1 ≤ n ≤ table.n()`.
/// Prefixes shorter than the table need a table built with an arrival log.
pub fn backdoor_cs_anytime(table: &CountTable, query: &EffectQuery, n: u64) -> Result<EffectInterval, EffectError> {
    query.expect(Criterion::Backdoor, Regime::Anytime)?;
    Ok(finish(query, backdoor_parts(table, query, n)?))
}
