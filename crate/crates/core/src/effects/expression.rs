//! The effect polynomials as [`Expr`] trees.
//!
//! The closed-form constructions in this module's siblings and the generic
//! [`eval_expr`] route share the same leaves, so the two must agree: midpoints
//! up to evaluation order, half-widths exactly.

use std::collections::HashMap;

use crate::counts::CountTable;
use crate::intervals::{eval_expr, Expr, ProbInterval};

use super::backdoor::backdoor_parts;
use super::frontdoor::frontdoor_parts;
use super::{Criterion, EffectError, EffectQuery, FrontdoorForm, Leaf};

/// Formal variable names used in the trees.
fn z_marginal(z: usize) -> String {
    format!("p(z{z})")
}

fn mediator(z: usize) -> String {
    format!("p(z{z}|x~)")
}

fn treatment(x: usize) -> String {
    format!("p(x{x})")
}

fn outcome_given_z(z: usize) -> String {
    format!("p(y|x~,z{z})")
}

fn outcome(x: usize, z: usize) -> String {
    format!("p(y|x{x},z{z})")
}

fn bind(map: &mut HashMap<String, ProbInterval>, name: String, leaf: &Leaf) {
    map.insert(name, ProbInterval::new(leaf.mid(), leaf.radius));
}

/// The query's effect polynomial and its leaf bindings at prefix length `n`.
pub fn effect_expression(
    table: &CountTable,
    query: &EffectQuery,
    n: u64,
) -> Result<(Expr, HashMap<String, ProbInterval>), EffectError> {
    let mut bindings = HashMap::new();
    let expr = match query.criterion {
        Criterion::Backdoor => {
            let parts = backdoor_parts(table, query, n)?;
            for (z, (o, m)) in parts.outcome.iter().zip(&parts.z_marginal).enumerate() {
                bind(&mut bindings, outcome_given_z(z), o);
                bind(&mut bindings, z_marginal(z), m);
            }
            Expr::sum((0..parts.z_marginal.len()).map(|z| {
                Expr::mul(Expr::var(outcome_given_z(z)), Expr::var(z_marginal(z)))
            }))
        }
        Criterion::Frontdoor => {
            let parts = frontdoor_parts(table, query, n)?;
            let (nx, nz) = (parts.sizes.x, parts.sizes.z);
            for z in 0..nz {
                bind(&mut bindings, mediator(z), &parts.mediator[z]);
            }
            for x in 0..nx {
                bind(&mut bindings, treatment(x), &parts.treatment[x]);
                for z in 0..nz {
                    bind(&mut bindings, outcome(x, z), &parts.outcome[x * nz + z]);
                }
            }
            let py = |x, z| Expr::var(outcome(x, z));
            let px = |x| Expr::var(treatment(x));
            let pz = |z| Expr::var(mediator(z));
            match query.frontdoor_form {
                FrontdoorForm::Expanded => Expr::sum(
                    (0..nz).flat_map(|z| (0..nx).map(move |x| (x, z))).map(|(x, z)| {
                        Expr::mul(Expr::mul(pz(z), py(x, z)), px(x))
                    }),
                ),
                FrontdoorForm::HornerZ => Expr::sum((0..nz).map(|z| {
                    let inner = Expr::sum((0..nx).map(|x| Expr::mul(py(x, z), px(x)))).expect("non-empty domain");
                    Expr::mul(pz(z), inner)
                })),
                FrontdoorForm::HornerX => Expr::sum((0..nx).map(|x| {
                    let inner = Expr::sum((0..nz).map(|z| Expr::mul(py(x, z), pz(z)))).expect("non-empty domain");
                    Expr::mul(px(x), inner)
                })),
            }
        }
    };
    Ok((expr.expect("domains are non-empty"), bindings))
}

/// Evaluates the query through [`eval_expr`] instead of the closed form.
pub fn effect_via_expression(table: &CountTable, query: &EffectQuery, n: u64) -> Result<ProbInterval, EffectError> {
    let (expr, bindings) = effect_expression(table, query, n)?;
    Ok(eval_expr(&expr, &bindings).expect("every leaf is bound"))
}
