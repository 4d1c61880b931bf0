//! Observation streams drawn from a causal model.
//!
//! Two regimes are supported. In the IID regime every time step is an
//! independent ancestral draw over the whole DAG. In the adaptive regime the
//! treatment is chosen by a [`Policy`] that sees the whole past and the
//! current step's pre-treatment variables; every other vertex is still drawn
//! from its conditional table, independently of the past.
//!
//! # Randomness
//!
//! Every stream is driven by ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64(base_seed)` and split into independent streams with
//! `set_stream(replication)`. Uniforms on `[0, 1)` are `(next_u64() >> 11) · 2⁻⁵³`
//! and a categorical draw returns the first index whose cumulative probability
//! exceeds the uniform. This recipe is identified as [`PRNG_ID`]; changing it
//! changes every seeded output.
//!
//! # Model file
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "variables": [{"name": "Z", "domain": ["0", "1"]}, ...],
//!   "edges": [["Z", "X"], ["Z", "Y"], ["X", "Y"]],
//!   "cpts": {
//!     "Z": {"parents": [], "rows": [[0.6, 0.4]]},
//!     "Y": {"parents": ["X", "Z"], "rows": [[0.8, 0.2], [0.4, 0.6], [0.7, 0.3], [0.2, 0.8]]}
//!   },
//!   "roles": {"treatment": "X", "outcome": "Y", "adjustment": ["Z"]}
//! }
//! ```
//!
//! Rows of a table are indexed by the parent values in the listed parent
//! order, first parent slowest. Each row must sum to one within `1e-12`.
//! `edges` may be omitted, in which case the edges are read off the parent
//! lists; when present it must agree with them. `roles` is optional.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counts::{CountError, Observation, Schema, Variable};
use crate::graph::{Dag, GraphError};

pub const PRNG_ID: &str = "chacha8-v1";

/// Largest joint state space [`CausalModel::joint`] will enumerate.
pub const MAX_JOINT_STATES: usize = 1 << 22;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Counts(#[from] CountError),
    #[error("model JSON: {0}")]
    Json(String),
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u32),
    #[error("no conditional table for `{0}`")]
    MissingCpt(String),
    #[error("conditional table given for undeclared variable `{0}`")]
    UnknownCpt(String),
    #[error("parents listed in the table of `{0}` do not match its parents in the graph")]
    ParentMismatch(String),
    #[error("table of `{variable}` has {got} rows, expected {expected}")]
    RowCount {
        variable: String,
        expected: usize,
        got: usize,
    },
    #[error("row {row} of `{variable}` has {got} entries, expected {expected}")]
    RowLength {
        variable: String,
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row} of `{variable}` has a negative or non-finite entry")]
    BadProbability { variable: String, row: usize },
    #[error("row {row} of `{variable}` sums to {sum}")]
    RowSum { variable: String, row: usize, sum: f64 },
    #[error("the model has no roles; set treatment, outcome and adjustment variables")]
    NoRoles,
    #[error("invalid roles: {0}")]
    Roles(String),
    #[error("joint distribution has more than {MAX_JOINT_STATES} states")]
    TooManyStates,
    #[error("invalid policy `{0}`")]
    Policy(String),
    #[error("policy chose treatment index {0}, outside the treatment domain")]
    PolicyValue(usize),
}

/// Which variables play treatment, outcome and adjustment (or mediator).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub treatment: String,
    pub outcome: String,
    pub adjustment: Vec<String>,
}

impl Roles {
    pub fn new(treatment: &str, outcome: &str, adjustment: &[&str]) -> Self {
        Self {
            treatment: treatment.to_string(),
            outcome: outcome.to_string(),
            adjustment: adjustment.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub domain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptSpec {
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// The on-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub format_version: u32,
    pub variables: Vec<VariableSpec>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    pub cpts: BTreeMap<String, CptSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roles: Option<Roles>,
}

#[derive(Debug, Clone)]
struct Cpt {
    parents: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl Cpt {
    fn row_index(&self, dag: &Dag, assignment: &[usize]) -> usize {
        self.parents
            .iter()
            .fold(0, |acc, &p| acc * dag.domain(p).len() + assignment[p])
    }
}

#[derive(Debug, Clone)]
struct RoleIndex {
    treatment: usize,
    outcome: usize,
    adjustment: Vec<usize>,
}

/// A DAG with one conditional probability table per vertex.
#[derive(Debug, Clone)]
pub struct CausalModel {
    dag: Dag,
    cpts: Vec<Cpt>,
    roles: Option<Roles>,
    role_index: Option<RoleIndex>,
}

impl CausalModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self, ModelError> {
        if spec.format_version != crate::FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion(spec.format_version));
        }
        let mut dag = Dag::new();
        for v in &spec.variables {
            dag.add_vertex(v.name.clone(), v.domain.clone())?;
        }
        for name in spec.cpts.keys() {
            if dag.index_of(name).is_err() {
                return Err(ModelError::UnknownCpt(name.clone()));
            }
        }
        for (p, c) in &spec.edges {
            dag.add_edge(p, c)?;
        }
        for (child, cpt) in &spec.cpts {
            for p in &cpt.parents {
                dag.add_edge(p, child)?;
            }
        }
        let mut cpts = Vec::with_capacity(dag.len());
        for v in 0..dag.len() {
            let name = dag.name(v).to_string();
            let cpt = spec.cpts.get(&name).ok_or_else(|| ModelError::MissingCpt(name.clone()))?;
            let parents = cpt
                .parents
                .iter()
                .map(|p| dag.index_of(p))
                .collect::<Result<Vec<_>, _>>()?;
            let mut listed = parents.clone();
            listed.sort_unstable();
            listed.dedup();
            let mut actual = dag.parents(v).to_vec();
            actual.sort_unstable();
            if listed != actual || listed.len() != parents.len() {
                return Err(ModelError::ParentMismatch(name));
            }
            let expected_rows: usize = parents.iter().map(|&p| dag.domain(p).len()).product();
            if cpt.rows.len() != expected_rows {
                return Err(ModelError::RowCount {
                    variable: name,
                    expected: expected_rows,
                    got: cpt.rows.len(),
                });
            }
            let size = dag.domain(v).len();
            for (i, row) in cpt.rows.iter().enumerate() {
                if row.len() != size {
                    return Err(ModelError::RowLength {
                        variable: name,
                        row: i,
                        expected: size,
                        got: row.len(),
                    });
                }
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(ModelError::BadProbability { variable: name, row: i });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(ModelError::RowSum { variable: name, row: i, sum });
                }
            }
            cpts.push(Cpt {
                parents,
                rows: cpt.rows.clone(),
            });
        }
        let mut model = Self {
            dag,
            cpts,
            roles: None,
            role_index: None,
        };
        if let Some(roles) = &spec.roles {
            model.set_roles(roles.clone())?;
        }
        Ok(model)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn to_spec(&self) -> ModelSpec {
        let dag = &self.dag;
        ModelSpec {
            format_version: crate::FORMAT_VERSION,
            variables: (0..dag.len())
                .map(|v| VariableSpec {
                    name: dag.name(v).to_string(),
                    domain: dag.domain(v).to_vec(),
                })
                .collect(),
            edges: dag
                .edges()
                .map(|(p, c)| (dag.name(p).to_string(), dag.name(c).to_string()))
                .collect(),
            cpts: self
                .cpts
                .iter()
                .enumerate()
                .map(|(v, cpt)| {
                    let spec = CptSpec {
                        parents: cpt.parents.iter().map(|&p| dag.name(p).to_string()).collect(),
                        rows: cpt.rows.clone(),
                    };
                    (dag.name(v).to_string(), spec)
                })
                .collect(),
            roles: self.roles.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("model spec serialises")
    }

    pub fn with_roles(mut self, roles: Roles) -> Result<Self, ModelError> {
        self.set_roles(roles)?;
        Ok(self)
    }

    pub fn set_roles(&mut self, roles: Roles) -> Result<(), ModelError> {
        let treatment = self.dag.index_of(&roles.treatment)?;
        let outcome = self.dag.index_of(&roles.outcome)?;
        let adjustment = roles
            .adjustment
            .iter()
            .map(|n| self.dag.index_of(n))
            .collect::<Result<Vec<_>, _>>()?;
        if adjustment.is_empty() {
            return Err(ModelError::Roles("the adjustment set is empty".into()));
        }
        let mut all = adjustment.clone();
        all.push(treatment);
        all.push(outcome);
        let count = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != count {
            return Err(ModelError::Roles("treatment, outcome and adjustment must be distinct".into()));
        }
        self.roles = Some(roles);
        self.role_index = Some(RoleIndex {
            treatment,
            outcome,
            adjustment,
        });
        Ok(())
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn roles(&self) -> Option<&Roles> {
        self.roles.as_ref()
    }

    fn role_index(&self) -> Result<&RoleIndex, ModelError> {
        self.role_index.as_ref().ok_or(ModelError::NoRoles)
    }

    /// Count schema for the role variables.
    pub fn schema(&self) -> Result<Schema, ModelError> {
        let r = self.role_index()?;
        let var = |v: usize| Variable {
            name: self.dag.name(v).to_string(),
            domain: self.dag.domain(v).to_vec(),
        };
        Ok(Schema::new(
            var(r.treatment),
            var(r.outcome),
            r.adjustment.iter().map(|&v| var(v)).collect(),
        )?)
    }

    /// Conditional distribution of vertex `v` given the parent values in `assignment`.
    pub fn cpt_row(&self, v: usize, assignment: &[usize]) -> &[f64] {
        let cpt = &self.cpts[v];
        &cpt.rows[cpt.row_index(&self.dag, assignment)]
    }

    /// True if every table entry is strictly positive.
    pub fn is_positive(&self) -> bool {
        self.cpts.iter().all(|c| c.rows.iter().flatten().all(|&p| p > 0.0))
    }

    /// Every joint assignment with its probability under the factorisation,
    /// optionally with one vertex clamped to a value (the mutilated model).
    pub fn joint(&self, clamp: Option<(usize, usize)>) -> Result<Vec<(Vec<usize>, f64)>, ModelError> {
        let mut states = 1usize;
        for v in 0..self.dag.len() {
            states = states
                .checked_mul(self.dag.domain(v).len())
                .filter(|&s| s <= MAX_JOINT_STATES)
                .ok_or(ModelError::TooManyStates)?;
        }
        let order = self.dag.topological_order();
        let mut out = Vec::new();
        let mut assignment = vec![0; self.dag.len()];
        self.enumerate(&order, 0, 1.0, clamp, &mut assignment, &mut out);
        Ok(out)
    }

    fn enumerate(
        &self,
        order: &[usize],
        depth: usize,
        prob: f64,
        clamp: Option<(usize, usize)>,
        assignment: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if prob == 0.0 {
            return;
        }
        let Some(&v) = order.get(depth) else {
            out.push((assignment.clone(), prob));
            return;
        };
        match clamp {
            Some((cv, value)) if cv == v => {
                assignment[v] = value;
                self.enumerate(order, depth + 1, prob, clamp, assignment, out);
            }
            _ => {
                for value in 0..self.dag.domain(v).len() {
                    let p = self.cpt_row(v, assignment)[value];
                    assignment[v] = value;
                    self.enumerate(order, depth + 1, prob * p, clamp, assignment, out);
                }
            }
        }
    }
}

/// ChaCha8 stream `replication` of the generator seeded with `base_seed`.
pub fn replication_rng(base_seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(replication);
    rng
}

/// Uniform on `[0, 1)` with 53 random bits.
pub fn u01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Index drawn from a probability vector by inversion.
pub fn draw_categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u = u01(rng);
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// What a policy sees when choosing the treatment of the current step.
pub struct Step<'a> {
    pub model: &'a CausalModel,
    /// Values of the vertices drawn so far this step; other entries are stale.
    pub assignment: &'a [usize],
    /// Flattened adjustment value, when every adjustment variable precedes treatment.
    pub z: Option<usize>,
    /// Number of completed steps.
    pub t: u64,
}

/// A treatment rule that may depend on the whole observed past.
///
/// `observe` is called after every step with the realised treatment, outcome
/// and flattened adjustment value, so a policy can keep whatever summary of
/// the history it needs.
pub trait Policy: Send {
    fn choose(&mut self, step: &Step<'_>, rng: &mut ChaCha8Rng) -> usize;
    fn observe(&mut self, _x: usize, _y: usize, _z: usize) {}
}

/// Built-in policies.
///
/// | text | behaviour |
/// |------|-----------|
/// | `constant:<i>` | always treatment index `i` |
/// | `iid-from-cpt` | draws from the treatment's own table, reproducing the IID regime |
/// | `epsilon-greedy:<eps>` | uniform with probability `eps`, otherwise the treatment with the highest running rate of the last outcome value |
/// | `adversarial-alternating` | flips treatment when the running outcome-rate gap changes sign |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    Constant(usize),
    IidFromCpt,
    EpsilonGreedy(f64),
    AdversarialAlternating,
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Constant(x) => write!(f, "constant:{x}"),
            PolicySpec::IidFromCpt => f.write_str("iid-from-cpt"),
            PolicySpec::EpsilonGreedy(e) => write!(f, "epsilon-greedy:{e}"),
            PolicySpec::AdversarialAlternating => f.write_str("adversarial-alternating"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        let bad = || ModelError::Policy(s.to_string());
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("constant", Some(a)) => a.trim().parse().map(PolicySpec::Constant).map_err(|_| bad()),
            ("iid-from-cpt", None) => Ok(PolicySpec::IidFromCpt),
            ("epsilon-greedy", Some(a)) => {
                let eps: f64 = a.trim().parse().map_err(|_| bad())?;
                if (0.0..=1.0).contains(&eps) {
                    Ok(PolicySpec::EpsilonGreedy(eps))
                } else {
                    Err(bad())
                }
            }
            ("adversarial-alternating", None) => Ok(PolicySpec::AdversarialAlternating),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = ModelError;
    fn try_from(s: String) -> Result<Self, ModelError> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.to_string()
    }
}

impl PolicySpec {
    pub fn build(&self, model: &CausalModel) -> Result<Box<dyn Policy>, ModelError> {
        let r = model.role_index()?;
        let nx = model.dag.domain(r.treatment).len();
        let ny = model.dag.domain(r.outcome).len();
        let nz: usize = r.adjustment.iter().map(|&v| model.dag.domain(v).len()).product();
        Ok(match *self {
            PolicySpec::Constant(x) if x < nx => Box::new(ConstantPolicy(x)),
            PolicySpec::Constant(x) => return Err(ModelError::PolicyValue(x)),
            PolicySpec::IidFromCpt => Box::new(CptPolicy { treatment: r.treatment }),
            PolicySpec::EpsilonGreedy(eps) => Box::new(EpsilonGreedy {
                eps,
                stats: OutcomeRates::new(nx, ny, nz),
            }),
            PolicySpec::AdversarialAlternating => Box::new(Alternating {
                stats: OutcomeRates::new(nx, ny, nz),
                current: vec![0; nz + 1],
                last_sign: vec![0; nz + 1],
            }),
        })
    }
}

struct ConstantPolicy(usize);

impl Policy for ConstantPolicy {
    fn choose(&mut self, _: &Step<'_>, _: &mut ChaCha8Rng) -> usize {
        self.0
    }
}

struct CptPolicy {
    treatment: usize,
}

impl Policy for CptPolicy {
    fn choose(&mut self, step: &Step<'_>, rng: &mut ChaCha8Rng) -> usize {
        draw_categorical(step.model.cpt_row(self.treatment, step.assignment), rng)
    }
}

/// Running rate of the last outcome value per treatment, within a stratum
/// `z` or pooled over strata. Unseen cells count as `1/2`.
struct OutcomeRates {
    nx: usize,
    nz: usize,
    target: usize,
    trials: Vec<u64>,
    hits: Vec<u64>,
}

impl OutcomeRates {
    fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Self {
            nx,
            nz,
            target: ny - 1,
            trials: vec![0; nx * (nz + 1)],
            hits: vec![0; nx * (nz + 1)],
        }
    }

    /// Stratum `nz` is the pooled one.
    fn slot(&self, x: usize, z: Option<usize>) -> usize {
        x * (self.nz + 1) + z.unwrap_or(self.nz)
    }

    fn record(&mut self, x: usize, y: usize, z: usize) {
        let hit = u64::from(y == self.target);
        for s in [self.slot(x, Some(z)), self.slot(x, None)] {
            self.trials[s] += 1;
            self.hits[s] += hit;
        }
    }

    fn rate(&self, x: usize, z: Option<usize>) -> f64 {
        let s = self.slot(x, z);
        match self.trials[s] {
            0 => 0.5,
            n => self.hits[s] as f64 / n as f64,
        }
    }
}

struct EpsilonGreedy {
    eps: f64,
    stats: OutcomeRates,
}

impl Policy for EpsilonGreedy {
    fn choose(&mut self, step: &Step<'_>, rng: &mut ChaCha8Rng) -> usize {
        let nx = self.stats.nx;
        if u01(rng) < self.eps {
            return ((u01(rng) * nx as f64) as usize).min(nx - 1);
        }
        let mut best = 0;
        for x in 1..nx {
            if self.stats.rate(x, step.z) > self.stats.rate(best, step.z) {
                best = x;
            }
        }
        best
    }

    fn observe(&mut self, x: usize, y: usize, z: usize) {
        self.stats.record(x, y, z);
    }
}

/// Holds a treatment per stratum and moves to the next treatment whenever the
/// sign of `rate(x=1) − rate(x=0)` in that stratum flips, or while the gap is
/// exactly zero. Treatment choice therefore chases the noise in past outcomes.
struct Alternating {
    stats: OutcomeRates,
    current: Vec<usize>,
    last_sign: Vec<i8>,
}

impl Policy for Alternating {
    fn choose(&mut self, step: &Step<'_>, _: &mut ChaCha8Rng) -> usize {
        let nx = self.stats.nx;
        let stratum = step.z.unwrap_or(self.stats.nz);
        if nx < 2 {
            return 0;
        }
        let gap = self.stats.rate(1, step.z) - self.stats.rate(0, step.z);
        let sign: i8 = if gap > 0.0 {
            1
        } else if gap < 0.0 {
            -1
        } else {
            0
        };
        let last = self.last_sign[stratum];
        if sign == 0 || (last != 0 && sign != last) {
            self.current[stratum] = (self.current[stratum] + 1) % nx;
        }
        if sign != 0 {
            self.last_sign[stratum] = sign;
        }
        self.current[stratum]
    }

    fn observe(&mut self, x: usize, y: usize, z: usize) {
        self.stats.record(x, y, z);
    }
}

/// Precomputed sampling order for one model: vertices that are not
/// descendants of the treatment come first, so a policy can see them.
pub struct Sampler<'m> {
    model: &'m CausalModel,
    pre: Vec<usize>,
    post: Vec<usize>,
    roles: RoleIndex,
    z_sizes: Vec<usize>,
    z_before_treatment: bool,
    assignment: Vec<usize>,
    t: u64,
}

impl<'m> Sampler<'m> {
    pub fn new(model: &'m CausalModel) -> Result<Self, ModelError> {
        let roles = model.role_index()?.clone();
        let closure = model.dag.descendant_closure();
        let below = &closure[roles.treatment];
        let (post, pre): (Vec<usize>, Vec<usize>) = model.dag.topological_order().into_iter().partition(|&v| below[v]);
        let z_before_treatment = roles.adjustment.iter().all(|&v| !below[v]);
        Ok(Self {
            model,
            z_sizes: roles.adjustment.iter().map(|&v| model.dag.domain(v).len()).collect(),
            pre,
            post,
            roles,
            z_before_treatment,
            assignment: vec![0; model.dag.len()],
            t: 0,
        })
    }

    fn z_code(&self) -> usize {
        self.roles
            .adjustment
            .iter()
            .zip(&self.z_sizes)
            .fold(0, |acc, (&v, &size)| acc * size + self.assignment[v])
    }

    fn draw(&mut self, v: usize, rng: &mut ChaCha8Rng) {
        self.assignment[v] = draw_categorical(self.model.cpt_row(v, &self.assignment), rng);
    }

    fn observation(&self) -> Observation {
        Observation::new(
            self.assignment[self.roles.treatment],
            self.assignment[self.roles.outcome],
            self.roles.adjustment.iter().map(|&v| self.assignment[v]).collect(),
        )
    }

    /// One IID time step.
    pub fn step_iid(&mut self, rng: &mut ChaCha8Rng) -> Observation {
        for i in 0..self.pre.len() {
            self.draw(self.pre[i], rng);
        }
        for i in 0..self.post.len() {
            self.draw(self.post[i], rng);
        }
        self.t += 1;
        self.observation()
    }

    /// One time step with the treatment chosen by `policy`.
    pub fn step_adaptive(&mut self, policy: &mut dyn Policy, rng: &mut ChaCha8Rng) -> Result<Observation, ModelError> {
        for i in 0..self.pre.len() {
            self.draw(self.pre[i], rng);
        }
        let z = self.z_before_treatment.then(|| self.z_code());
        let x = policy.choose(
            &Step {
                model: self.model,
                assignment: &self.assignment,
                z,
                t: self.t,
            },
            rng,
        );
        if x >= self.model.dag.domain(self.roles.treatment).len() {
            return Err(ModelError::PolicyValue(x));
        }
        self.assignment[self.roles.treatment] = x;
        for i in 0..self.post.len() {
            let v = self.post[i];
            if v != self.roles.treatment {
                self.draw(v, rng);
            }
        }
        self.t += 1;
        policy.observe(x, self.assignment[self.roles.outcome], self.z_code());
        Ok(self.observation())
    }

    /// The outcome of one draw from the model with the treatment clamped to `x`.
    pub fn intervened_outcome(&mut self, x: usize, rng: &mut ChaCha8Rng) -> usize {
        for i in 0..self.pre.len() {
            self.draw(self.pre[i], rng);
        }
        self.assignment[self.roles.treatment] = x;
        for i in 0..self.post.len() {
            let v = self.post[i];
            if v != self.roles.treatment {
                self.draw(v, rng);
            }
        }
        self.assignment[self.roles.outcome]
    }
}

/// `n` independent ancestral draws.
pub fn sample_iid(model: &CausalModel, n: u64, rng: &mut ChaCha8Rng) -> Result<Vec<Observation>, ModelError> {
    let mut sampler = Sampler::new(model)?;
    Ok((0..n).map(|_| sampler.step_iid(rng)).collect())
}

/// `n` steps with treatments chosen by `policy`.
pub fn sample_adaptive(
    model: &CausalModel,
    policy: &mut dyn Policy,
    n: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Observation>, ModelError> {
    let mut sampler = Sampler::new(model)?;
    (0..n).map(|_| sampler.step_adaptive(policy, rng)).collect()
}

/// One outcome drawn with the treatment set to `x` by intervention.
pub fn draw_intervened_outcome(model: &CausalModel, x: usize, rng: &mut ChaCha8Rng) -> Result<usize, ModelError> {
    let mut sampler = Sampler::new(model)?;
    let size = model.dag.domain(sampler.roles.treatment).len();
    if x >= size {
        return Err(CountError::OutOfDomain {
            variable: model.dag.name(sampler.roles.treatment).to_string(),
            value: x,
            size,
        }
        .into());
    }
    Ok(sampler.intervened_outcome(x, rng))
}

/// Small models used across the test suites.
pub mod fixtures {
    use super::*;

    fn binary_vars(names: &[&str]) -> Vec<VariableSpec> {
        names
            .iter()
            .map(|n| VariableSpec {
                name: n.to_string(),
                domain: vec!["0".into(), "1".into()],
            })
            .collect()
    }

    fn cpt(parents: &[&str], rows: &[[f64; 2]]) -> CptSpec {
        CptSpec {
            parents: parents.iter().map(|s| s.to_string()).collect(),
            rows: rows.iter().map(|r| r.to_vec()).collect(),
        }
    }

    /// `Z → X → Y`, `Z → Y`, binary, with `P(y=1 | do(x=1)) = 0.5`.
    pub fn confounded_binary() -> CausalModel {
        let spec = ModelSpec {
            format_version: crate::FORMAT_VERSION,
            variables: binary_vars(&["Z", "X", "Y"]),
            edges: vec![],
            cpts: BTreeMap::from([
                ("Z".to_string(), cpt(&[], &[[0.6, 0.4]])),
                ("X".to_string(), cpt(&["Z"], &[[0.7, 0.3], [0.3, 0.7]])),
                (
                    "Y".to_string(),
                    cpt(&["X", "Z"], &[[0.8, 0.2], [0.4, 0.6], [0.7, 0.3], [0.2, 0.8]]),
                ),
            ]),
            roles: Some(Roles::new("X", "Y", &["Z"])),
        };
        CausalModel::from_spec(&spec).expect("fixture is well formed")
    }

    /// `U → X → M → Y`, `U → Y` with `U` unobserved, binary.
    pub fn frontdoor_chain() -> CausalModel {
        let spec = ModelSpec {
            format_version: crate::FORMAT_VERSION,
            variables: binary_vars(&["U", "X", "M", "Y"]),
            edges: vec![],
            cpts: BTreeMap::from([
                ("U".to_string(), cpt(&[], &[[0.5, 0.5]])),
                ("X".to_string(), cpt(&["U"], &[[0.8, 0.2], [0.3, 0.7]])),
                ("M".to_string(), cpt(&["X"], &[[0.9, 0.1], [0.25, 0.75]])),
                (
                    "Y".to_string(),
                    cpt(&["M", "U"], &[[0.9, 0.1], [0.5, 0.5], [0.6, 0.4], [0.2, 0.8]]),
                ),
            ]),
            roles: Some(Roles::new("X", "Y", &["M"])),
        };
        CausalModel::from_spec(&spec).expect("fixture is well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn rejects_bad_rows() {
        let mut spec = confounded_binary().to_spec();
        spec.cpts.get_mut("Z").unwrap().rows = vec![vec![0.5, 0.6]];
        assert!(matches!(CausalModel::from_spec(&spec), Err(ModelError::RowSum { .. })));
        spec.cpts.get_mut("Z").unwrap().rows = vec![vec![1.0]];
        assert!(matches!(CausalModel::from_spec(&spec), Err(ModelError::RowLength { .. })));
        spec.cpts.get_mut("Z").unwrap().rows = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert!(matches!(CausalModel::from_spec(&spec), Err(ModelError::RowCount { .. })));
    }

    #[test]
    fn rejects_parent_mismatch_and_missing_tables() {
        let mut spec = confounded_binary().to_spec();
        spec.edges.push(("Z".into(), "Y".into()));
        spec.edges.push(("X".into(), "Z".into()));
        assert!(CausalModel::from_spec(&spec).is_err());

        let mut spec = confounded_binary().to_spec();
        spec.cpts.remove("X");
        assert!(matches!(CausalModel::from_spec(&spec), Err(ModelError::MissingCpt(_))));
    }

    #[test]
    fn json_round_trip() {
        let m = confounded_binary();
        let back = CausalModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back.to_spec(), m.to_spec());
    }

    #[test]
    fn joint_sums_to_one() {
        let m = frontdoor_chain();
        let total: f64 = m.joint(None).unwrap().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let clamped: f64 = m.joint(Some((1, 1))).unwrap().iter().map(|(_, p)| p).sum();
        assert!((clamped - 1.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_stream() {
        let m = confounded_binary();
        let a = sample_iid(&m, 200, &mut replication_rng(7, 3)).unwrap();
        let b = sample_iid(&m, 200, &mut replication_rng(7, 3)).unwrap();
        let c = sample_iid(&m, 200, &mut replication_rng(7, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn iid_marginal_matches() {
        let m = confounded_binary();
        let obs = sample_iid(&m, 100_000, &mut replication_rng(1, 0)).unwrap();
        let z1 = obs.iter().filter(|o| o.z[0] == 1).count() as f64 / obs.len() as f64;
        assert!((z1 - 0.4).abs() < 0.01, "{z1}");
    }

    #[test]
    fn deterministic_model_repeats() {
        let mut spec = confounded_binary().to_spec();
        spec.cpts.get_mut("Z").unwrap().rows = vec![vec![0.0, 1.0]];
        spec.cpts.get_mut("X").unwrap().rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        spec.cpts.get_mut("Y").unwrap().rows = vec![vec![1.0, 0.0]; 4];
        let m = CausalModel::from_spec(&spec).unwrap();
        let obs = sample_iid(&m, 50, &mut replication_rng(3, 0)).unwrap();
        assert!(obs.iter().all(|o| *o == obs[0]));
    }

    #[test]
    fn constant_policy_fixes_treatment() {
        let m = confounded_binary();
        let mut p = PolicySpec::Constant(1).build(&m).unwrap();
        let obs = sample_adaptive(&m, p.as_mut(), 500, &mut replication_rng(2, 0)).unwrap();
        assert!(obs.iter().all(|o| o.x == 1));
        assert!(PolicySpec::Constant(2).build(&m).is_err());
    }

    #[test]
    fn adaptive_policies_stay_in_domain_and_visit_both_arms() {
        let m = confounded_binary();
        for spec in [PolicySpec::AdversarialAlternating, PolicySpec::EpsilonGreedy(0.1)] {
            let mut p = spec.build(&m).unwrap();
            let obs = sample_adaptive(&m, p.as_mut(), 2000, &mut replication_rng(5, 0)).unwrap();
            assert!(obs.iter().all(|o| o.x < 2 && o.y < 2 && o.z[0] < 2));
            assert!(obs.iter().any(|o| o.x == 0) && obs.iter().any(|o| o.x == 1), "{spec}");
        }
    }

    #[test]
    fn policy_text_round_trip() {
        for s in ["constant:1", "iid-from-cpt", "epsilon-greedy:0.25", "adversarial-alternating"] {
            assert_eq!(s.parse::<PolicySpec>().unwrap().to_string(), s);
        }
        assert!("epsilon-greedy:1.5".parse::<PolicySpec>().is_err());
        assert!("sometimes".parse::<PolicySpec>().is_err());
    }

    #[test]
    fn iid_from_cpt_matches_iid_frequencies() {
        let m = confounded_binary();
        let a = sample_iid(&m, 100_000, &mut replication_rng(11, 0)).unwrap();
        let mut p = PolicySpec::IidFromCpt.build(&m).unwrap();
        let b = sample_adaptive(&m, p.as_mut(), 100_000, &mut replication_rng(12, 0)).unwrap();
        let freq = |obs: &[Observation], x, y, z| {
            obs.iter().filter(|o| o.x == x && o.y == y && o.z[0] == z).count() as f64 / obs.len() as f64
        };
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    assert!((freq(&a, x, y, z) - freq(&b, x, y, z)).abs() < 0.01);
                }
            }
        }
    }

    #[test]
    fn outcome_frequencies_converge_under_adaptive_policy() {
        let m = confounded_binary();
        let mut p = PolicySpec::EpsilonGreedy(0.3).build(&m).unwrap();
        let obs = sample_adaptive(&m, p.as_mut(), 100_000, &mut replication_rng(13, 0)).unwrap();
        let truth = [[0.2, 0.6], [0.3, 0.8]];
        for x in 0..2 {
            for z in 0..2 {
                let cell: Vec<_> = obs.iter().filter(|o| o.x == x && o.z[0] == z).collect();
                if cell.len() >= 1000 {
                    let rate = cell.iter().filter(|o| o.y == 1).count() as f64 / cell.len() as f64;
                    assert!((rate - truth[x][z]).abs() < 0.02, "x={x} z={z} rate={rate}");
                }
            }
        }
    }

    #[test]
    fn frontdoor_policy_cannot_see_mediator() {
        let m = frontdoor_chain();
        let s = Sampler::new(&m).unwrap();
        assert!(!s.z_before_treatment);
        let mut p = PolicySpec::AdversarialAlternating.build(&m).unwrap();
        let obs = sample_adaptive(&m, p.as_mut(), 300, &mut replication_rng(4, 0)).unwrap();
        assert_eq!(obs.len(), 300);
    }

    #[test]
    fn intervened_outcome_frequency() {
        let m = confounded_binary();
        let mut rng = replication_rng(21, 0);
        let mut s = Sampler::new(&m).unwrap();
        let hits = (0..100_000).filter(|_| s.intervened_outcome(1, &mut rng) == 1).count();
        assert!((hits as f64 / 1e5 - 0.5).abs() < 0.01);
        assert!(draw_intervened_outcome(&m, 2, &mut rng).is_err());
    }

    #[test]
    fn u01_in_unit_interval() {
        let mut rng = replication_rng(0, 0);
        for _ in 0..10_000 {
            let u = u01(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
