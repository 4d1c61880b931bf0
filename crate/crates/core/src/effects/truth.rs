//! Exact effects from known model parameters, by enumeration of the joint.

use thiserror::Error;

use crate::simulator::{CausalModel, ModelError, Roles};

use super::Criterion;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TruthError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("treatment value index {0} is outside the treatment domain")]
    TreatmentValue(usize),
    #[error("outcome value index {0} is outside the outcome domain")]
    OutcomeValue(usize),
    #[error("the adjustment formula conditions on an event of probability zero ({0})")]
    ZeroProbability(String),
}

struct Marginals {
    nx: usize,
    nz: usize,
    /// `P(x, y_target, z)` at `x * nz + z`.
    xyz: Vec<f64>,
    /// `P(x, z)` at `x * nz + z`.
    xz: Vec<f64>,
}

fn marginals(model: &CausalModel, roles: &Roles, x_tilde: usize, y: usize) -> Result<Marginals, TruthError> {
    let dag = model.dag();
    let xi = dag.index_of(&roles.treatment).map_err(ModelError::from)?;
    let yi = dag.index_of(&roles.outcome).map_err(ModelError::from)?;
    let zi = roles
        .adjustment
        .iter()
        .map(|n| dag.index_of(n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ModelError::from)?;
    let nx = dag.domain(xi).len();
    if x_tilde >= nx {
        return Err(TruthError::TreatmentValue(x_tilde));
    }
    if y >= dag.domain(yi).len() {
        return Err(TruthError::OutcomeValue(y));
    }
    let nz: usize = zi.iter().map(|&v| dag.domain(v).len()).product();
    let mut m = Marginals {
        nx,
        nz,
        xyz: vec![0.0; nx * nz],
        xz: vec![0.0; nx * nz],
    };
    for (a, p) in model.joint(None)? {
        let z = zi.iter().fold(0, |acc, &v| acc * dag.domain(v).len() + a[v]);
        let cell = a[xi] * nz + z;
        m.xz[cell] += p;
        if a[yi] == y {
            m.xyz[cell] += p;
        }
    }
    Ok(m)
}

fn conditional(num: f64, den: f64, what: impl FnOnce() -> String) -> Result<f64, TruthError> {
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(TruthError::ZeroProbability(what()))
    }
}

/// The adjustment formula of `criterion` evaluated at the model's true
/// observational distribution over the role variables.
pub fn true_effect(
    model: &CausalModel,
    roles: &Roles,
    x_tilde: usize,
    y: usize,
    criterion: Criterion,
) -> Result<f64, TruthError> {
    let m = marginals(model, roles, x_tilde, y)?;
    let (nx, nz) = (m.nx, m.nz);
    let p_z = |z: usize| (0..nx).map(|x| m.xz[x * nz + z]).sum::<f64>();
    let p_x = |x: usize| (0..nz).map(|z| m.xz[x * nz + z]).sum::<f64>();
    let p_y_given = |x: usize, z: usize| {
        conditional(m.xyz[x * nz + z], m.xz[x * nz + z], || format!("treatment {x}, adjustment {z}"))
    };
    match criterion {
        Criterion::Backdoor => {
            let mut total = 0.0;
            for z in 0..nz {
                let pz = p_z(z);
                if pz > 0.0 {
                    total += p_y_given(x_tilde, z)? * pz;
                }
            }
            Ok(total)
        }
        Criterion::Frontdoor => {
            let px_tilde = p_x(x_tilde);
            let mut total = 0.0;
            for z in 0..nz {
                let pz = conditional(m.xz[x_tilde * nz + z], px_tilde, || format!("treatment {x_tilde}"))?;
                if pz == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for x in 0..nx {
                    let px = p_x(x);
                    if px > 0.0 {
                        inner += p_y_given(x, z)? * px;
                    }
                }
                total += pz * inner;
            }
            Ok(total)
        }
    }
}

/// `P(y | do(x̃))` computed in the mutilated model, without any adjustment formula.
pub fn interventional_truth(model: &CausalModel, roles: &Roles, x_tilde: usize, y: usize) -> Result<f64, TruthError> {
    let dag = model.dag();
    let xi = dag.index_of(&roles.treatment).map_err(ModelError::from)?;
    let yi = dag.index_of(&roles.outcome).map_err(ModelError::from)?;
    if x_tilde >= dag.domain(xi).len() {
        return Err(TruthError::TreatmentValue(x_tilde));
    }
    if y >= dag.domain(yi).len() {
        return Err(TruthError::OutcomeValue(y));
    }
    Ok(model
        .joint(Some((xi, x_tilde)))?
        .into_iter()
        .filter(|(a, _)| a[yi] == y)
        .map(|(_, p)| p)
        .sum())
}
