//! Streaming occurrence counts over observation prefixes.
//!
//! A [`CountTable`] keeps the full-sample counts (`#xyz`, `#xz`, `#x`, `#z`,
//! `#xy`, `#y`) together with dyadic checkpoints: for each conditioning
//! pattern it remembers the event tallies among the first `2^j` occurrences
//! of that pattern. The dyadically truncated ("double-hat") estimates read
//! those checkpoints, so they cost O(1) and never need the arrival log.
//!
//! Composite adjustment values are flattened in mixed radix with the first
//! component varying slowest, which is also the lexicographic order used
//! everywhere output is enumerated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CountError {
    #[error("value index {value} is outside the domain of `{variable}` (size {size})")]
    OutOfDomain {
        variable: String,
        value: usize,
        size: usize,
    },
    #[error("value `{value}` is not in the domain of `{variable}`")]
    UnknownLabel { variable: String, value: String },
    #[error("expected {expected} adjustment values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("prefix length {m} exceeds the {n} observations ingested")]
    PrefixTooLong { m: u64, n: u64 },
    #[error("prefix counts need the arrival log; build the table with `with_log`")]
    LogDisabled,
    #[error("event pattern does not refine the condition pattern")]
    IncompatiblePatterns,
    #[error("no dyadic tally is kept for this event/condition combination")]
    NoDyadicTally,
    #[error("the schema needs at least one adjustment variable")]
    NoAdjustment,
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
}

/// A named variable with a finite, ordered domain of labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub domain: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, domain: &[&str]) -> Self {
        Self {
            name: name.into(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.domain.len()
    }

    pub fn value_index(&self, label: &str) -> Result<usize, CountError> {
        self.domain
            .iter()
            .position(|v| v == label)
            .ok_or_else(|| CountError::UnknownLabel {
                variable: self.name.clone(),
                value: label.to_string(),
            })
    }
}

/// Treatment, outcome and adjustment (or mediator) variables of a stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub treatment: Variable,
    pub outcome: Variable,
    pub adjustment: Vec<Variable>,
}

impl Schema {
    pub fn new(
        treatment: Variable,
        outcome: Variable,
        adjustment: Vec<Variable>,
    ) -> Result<Self, CountError> {
        if adjustment.is_empty() {
            return Err(CountError::NoAdjustment);
        }
        for v in std::iter::once(&treatment)
            .chain(std::iter::once(&outcome))
            .chain(adjustment.iter())
        {
            if v.domain.is_empty() {
                return Err(CountError::EmptyDomain(v.name.clone()));
            }
        }
        Ok(Self {
            treatment,
            outcome,
            adjustment,
        })
    }

    /// Fully binary schema with one adjustment variable.
    pub fn binary(x: &str, y: &str, z: &str) -> Self {
        let b = ["0", "1"];
        Self {
            treatment: Variable::new(x, &b),
            outcome: Variable::new(y, &b),
            adjustment: vec![Variable::new(z, &b)],
        }
    }

    pub fn x_size(&self) -> usize {
        self.treatment.size()
    }

    pub fn y_size(&self) -> usize {
        self.outcome.size()
    }

    /// `|Z|`: product of the adjustment domain sizes.
    pub fn z_size(&self) -> usize {
        self.adjustment.iter().map(Variable::size).product()
    }

    pub fn is_binary_single_z(&self) -> bool {
        self.x_size() == 2 && self.y_size() == 2 && self.adjustment.len() == 1 && self.z_size() == 2
    }

    pub fn encode_z(&self, z: &[usize]) -> Result<usize, CountError> {
        if z.len() != self.adjustment.len() {
            return Err(CountError::Arity {
                expected: self.adjustment.len(),
                got: z.len(),
            });
        }
        let mut code = 0;
        for (var, &v) in self.adjustment.iter().zip(z) {
            if v >= var.size() {
                return Err(CountError::OutOfDomain {
                    variable: var.name.clone(),
                    value: v,
                    size: var.size(),
                });
            }
            code = code * var.size() + v;
        }
        Ok(code)
    }

    pub fn decode_z(&self, mut code: usize) -> Vec<usize> {
        let mut out = vec![0; self.adjustment.len()];
        for (slot, var) in out.iter_mut().zip(&self.adjustment).rev() {
            *slot = code % var.size();
            code /= var.size();
        }
        out
    }

    pub fn z_labels(&self, code: usize) -> Vec<&str> {
        self.decode_z(code)
            .into_iter()
            .zip(&self.adjustment)
            .map(|(v, var)| var.domain[v].as_str())
            .collect()
    }

    pub fn observation_from_labels(
        &self,
        x: &str,
        y: &str,
        z: &[&str],
    ) -> Result<Observation, CountError> {
        if z.len() != self.adjustment.len() {
            return Err(CountError::Arity {
                expected: self.adjustment.len(),
                got: z.len(),
            });
        }
        Ok(Observation {
            x: self.treatment.value_index(x)?,
            y: self.outcome.value_index(y)?,
            z: z.iter()
                .zip(&self.adjustment)
                .map(|(l, var)| var.value_index(l))
                .collect::<Result<_, _>>()?,
        })
    }

    fn check_value(&self, var: &Variable, v: usize) -> Result<(), CountError> {
        if v < var.size() {
            Ok(())
        } else {
            Err(CountError::OutOfDomain {
                variable: var.name.clone(),
                value: v,
                size: var.size(),
            })
        }
    }
}

/// One time step: value indices for treatment, outcome and each adjustment component.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observation {
    pub x: usize,
    pub y: usize,
    pub z: Vec<usize>,
}

impl Observation {
    pub fn new(x: usize, y: usize, z: Vec<usize>) -> Self {
        Self { x, y, z }
    }
}

/// Largest power of two `2^k` with `k ≥ 1` and `2^k ≤ n`; `1` for `n < 2`.
pub fn dyadic_floor(n: u64) -> u64 {
    if n < 2 {
        1
    } else {
        1 << (63 - n.leading_zeros())
    }
}

/// An estimate that is undefined when its conditioning count is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    Value(f64),
    Undefined,
}

impl Estimate {
    pub fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            Estimate::Undefined
        } else {
            Estimate::Value(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Estimate::Value(v) => Some(v),
            Estimate::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Estimate::Value(_))
    }

    /// Value used inside midpoint sums: undefined factors contribute zero.
    pub fn or_zero(self) -> f64 {
        self.value().unwrap_or(0.0)
    }
}

/// Partial value pattern over `(x, y, z)`; `None` means "any".
/// `z` is the flattened adjustment code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pattern {
    pub x: Option<usize>,
    pub y: Option<usize>,
    pub z: Option<usize>,
}

impl Pattern {
    pub const ALL: Pattern = Pattern {
        x: None,
        y: None,
        z: None,
    };

    pub fn xyz(x: usize, y: usize, z: usize) -> Self {
        Self {
            x: Some(x),
            y: Some(y),
            z: Some(z),
        }
    }

    pub fn xz(x: usize, z: usize) -> Self {
        Self {
            x: Some(x),
            y: None,
            z: Some(z),
        }
    }

    pub fn x(x: usize) -> Self {
        Self {
            x: Some(x),
            ..Self::ALL
        }
    }

    pub fn z(z: usize) -> Self {
        Self {
            z: Some(z),
            ..Self::ALL
        }
    }

    pub fn xy(x: usize, y: usize) -> Self {
        Self {
            x: Some(x),
            y: Some(y),
            z: None,
        }
    }

    fn matches(&self, x: usize, y: usize, z: usize) -> bool {
        self.x.is_none_or(|v| v == x) && self.y.is_none_or(|v| v == y) && self.z.is_none_or(|v| v == z)
    }

    fn refines(&self, cond: &Pattern) -> bool {
        let ok = |a: Option<usize>, b: Option<usize>| b.is_none() || a == b;
        ok(self.x, cond.x) && ok(self.y, cond.y) && ok(self.z, cond.z)
    }
}

/// Event tallies among the first `2^j` occurrences of one conditioning pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicTally {
    occurrences: u64,
    running: Vec<u64>,
    checkpoints: Vec<Vec<u64>>,
}

impl DyadicTally {
    pub fn new(events: usize) -> Self {
        Self {
            occurrences: 0,
            running: vec![0; events],
            checkpoints: Vec::new(),
        }
    }

    pub fn record(&mut self, event: usize) {
        self.occurrences += 1;
        self.running[event] += 1;
        if self.occurrences.is_power_of_two() {
            self.checkpoints.push(self.running.clone());
        }
    }

    pub fn occurrences(&self) -> u64 {
        self.occurrences
    }

    /// Tally of `event` among the first `2^level` occurrences, if reached.
    pub fn level(&self, level: usize, event: usize) -> Option<u64> {
        self.checkpoints.get(level).map(|row| row[event])
    }

    pub fn levels(&self) -> usize {
        self.checkpoints.len()
    }

    /// Fraction of `event` among the first `dyadic_floor(count)` occurrences,
    /// where `count` is the pattern's occurrence count at some prefix.
    pub fn estimate_at(&self, event: usize, count: u64) -> Estimate {
        if count == 0 {
            return Estimate::Undefined;
        }
        debug_assert!(count <= self.occurrences);
        let level = dyadic_floor(count).trailing_zeros() as usize;
        let tally = self.checkpoints[level][event];
        Estimate::ratio(tally, dyadic_floor(count))
    }

    pub fn estimate(&self, event: usize) -> Estimate {
        self.estimate_at(event, self.occurrences)
    }
}

/// Streaming counts for a fixed schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    schema: Schema,
    nx: usize,
    ny: usize,
    nz: usize,
    n: u64,
    xyz: Vec<u64>,
    xz: Vec<u64>,
    xy: Vec<u64>,
    x: Vec<u64>,
    y: Vec<u64>,
    z: Vec<u64>,
    y_given_xz: Vec<DyadicTally>,
    z_given_x: Vec<DyadicTally>,
    z_all: DyadicTally,
    x_all: DyadicTally,
    log: Option<Vec<(u32, u32, u32)>>,
}

impl CountTable {
    pub fn new(schema: &Schema) -> Self {
        let (nx, ny, nz) = (schema.x_size(), schema.y_size(), schema.z_size());
        Self {
            schema: schema.clone(),
            nx,
            ny,
            nz,
            n: 0,
            xyz: vec![0; nx * ny * nz],
            xz: vec![0; nx * nz],
            xy: vec![0; nx * ny],
            x: vec![0; nx],
            y: vec![0; ny],
            z: vec![0; nz],
            y_given_xz: (0..nx * nz).map(|_| DyadicTally::new(ny)).collect(),
            z_given_x: (0..nx).map(|_| DyadicTally::new(nz)).collect(),
            z_all: DyadicTally::new(nz),
            x_all: DyadicTally::new(nx),
            log: None,
        }
    }

    /// Table that also keeps the arrival log, enabling [`CountTable::count_at`]
    /// for arbitrary prefixes.
    pub fn with_log(schema: &Schema) -> Self {
        let mut t = Self::new(schema);
        t.log = Some(Vec::new());
        t
    }

    pub fn enable_log(&mut self) {
        if self.log.is_none() && self.n == 0 {
            self.log = Some(Vec::new());
        }
    }

    pub fn has_log(&self) -> bool {
        self.log.is_some()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.nx, self.ny, self.nz)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Validates `obs` against the table's schema and records it.
    pub fn ingest(&mut self, obs: &Observation) -> Result<(), CountError> {
        let schema = &self.schema;
        schema.check_value(&schema.treatment, obs.x)?;
        schema.check_value(&schema.outcome, obs.y)?;
        let z = schema.encode_z(&obs.z)?;
        self.ingest_cell(obs.x, obs.y, z);
        Ok(())
    }

    /// Records an already validated `(x, y, z-code)` cell.
    pub fn ingest_cell(&mut self, x: usize, y: usize, z: usize) {
        assert!(x < self.nx && y < self.ny && z < self.nz, "cell out of range");
        self.n += 1;
        self.xyz[(x * self.ny + y) * self.nz + z] += 1;
        self.xz[x * self.nz + z] += 1;
        self.xy[x * self.ny + y] += 1;
        self.x[x] += 1;
        self.y[y] += 1;
        self.z[z] += 1;
        self.y_given_xz[x * self.nz + z].record(y);
        self.z_given_x[x].record(z);
        self.z_all.record(z);
        self.x_all.record(x);
        if let Some(log) = &mut self.log {
            log.push((x as u32, y as u32, z as u32));
        }
    }

    pub fn count_xyz(&self, x: usize, y: usize, z: usize) -> u64 {
        self.xyz[(x * self.ny + y) * self.nz + z]
    }

    pub fn count_xz(&self, x: usize, z: usize) -> u64 {
        self.xz[x * self.nz + z]
    }

    pub fn count_x(&self, x: usize) -> u64 {
        self.x[x]
    }

    pub fn count_z(&self, z: usize) -> u64 {
        self.z[z]
    }

    pub fn count_xy(&self, x: usize, y: usize) -> u64 {
        self.xy[x * self.ny + y]
    }

    /// Occurrences of an arbitrary pattern over the whole stream.
    pub fn count(&self, p: Pattern) -> u64 {
        match (p.x, p.y, p.z) {
            (None, None, None) => self.n,
            (Some(x), Some(y), Some(z)) => self.count_xyz(x, y, z),
            (Some(x), None, Some(z)) => self.count_xz(x, z),
            (Some(x), Some(y), None) => self.count_xy(x, y),
            (Some(x), None, None) => self.x[x],
            (None, Some(y), None) => self.y[y],
            (None, None, Some(z)) => self.z[z],
            (None, Some(y), Some(z)) => (0..self.nx).map(|x| self.count_xyz(x, y, z)).sum(),
        }
    }

    /// Occurrences of `p` among the first `m` observations (`#_m`).
    pub fn count_at(&self, p: Pattern, m: u64) -> Result<u64, CountError> {
        if m > self.n {
            return Err(CountError::PrefixTooLong { m, n: self.n });
        }
        if m == self.n {
            return Ok(self.count(p));
        }
        if m == 0 {
            return Ok(0);
        }
        let log = self.log.as_ref().ok_or(CountError::LogDisabled)?;
        Ok(log[..m as usize]
            .iter()
            .filter(|&&(x, y, z)| p.matches(x as usize, y as usize, z as usize))
            .count() as u64)
    }

    /// Dyadic floors of `n`, every `#x` and every `#xz`, with counts below two
    /// kept as they are. Every double-hat estimate and iterated-log radius is a
    /// function of these, so it changes only when the signature does.
    pub fn dyadic_signature(&self) -> Vec<u64> {
        let level = |c: u64| if c < 2 { c } else { dyadic_floor(c) };
        std::iter::once(self.n)
            .chain(self.x.iter().copied())
            .chain(self.xz.iter().copied())
            .map(level)
            .collect()
    }

    /// The standard estimate `#event / #condition` (`#event / n` for an empty condition).
    pub fn hat_estimate(&self, event: Pattern, condition: Pattern) -> Result<Estimate, CountError> {
        if !event.refines(&condition) {
            return Err(CountError::IncompatiblePatterns);
        }
        Ok(Estimate::ratio(self.count(event), self.count(condition)))
    }

    pub fn hat_y_given_xz(&self, y: usize, x: usize, z: usize) -> Estimate {
        Estimate::ratio(self.count_xyz(x, y, z), self.count_xz(x, z))
    }

    pub fn hat_z(&self, z: usize) -> Estimate {
        Estimate::ratio(self.z[z], self.n)
    }

    pub fn hat_x(&self, x: usize) -> Estimate {
        Estimate::ratio(self.x[x], self.n)
    }

    pub fn hat_z_given_x(&self, z: usize, x: usize) -> Estimate {
        Estimate::ratio(self.count_xz(x, z), self.x[x])
    }

    /// Double-hat estimate of `event` given `condition`.
    ///
    /// Supported shapes are the ones the interval constructions use:
    /// `y | x,z`, `z | x`, `z` and `x`.
    pub fn ddot_estimate(&self, event: Pattern, condition: Pattern) -> Result<Estimate, CountError> {
        let tally = self.tally_for(event, condition)?;
        Ok(tally.0.estimate(tally.1))
    }

    /// Double-hat estimate as of the prefix where the condition had occurred `count` times.
    pub fn ddot_estimate_at(
        &self,
        event: Pattern,
        condition: Pattern,
        count: u64,
    ) -> Result<Estimate, CountError> {
        let (tally, e) = self.tally_for(event, condition)?;
        if count > tally.occurrences() {
            return Err(CountError::PrefixTooLong {
                m: count,
                n: tally.occurrences(),
            });
        }
        Ok(tally.estimate_at(e, count))
    }

    fn tally_for(&self, event: Pattern, condition: Pattern) -> Result<(&DyadicTally, usize), CountError> {
        match (condition.x, condition.y, condition.z, event.x, event.y, event.z) {
            (Some(x), None, Some(z), Some(ex), Some(y), Some(ez)) if ex == x && ez == z => {
                Ok((&self.y_given_xz[x * self.nz + z], y))
            }
            (Some(x), None, None, Some(ex), None, Some(z)) if ex == x => Ok((&self.z_given_x[x], z)),
            (None, None, None, None, None, Some(z)) => Ok((&self.z_all, z)),
            (None, None, None, Some(x), None, None) => Ok((&self.x_all, x)),
            _ => Err(CountError::NoDyadicTally),
        }
    }

    pub fn ddot_y_given_xz(&self, y: usize, x: usize, z: usize) -> Estimate {
        self.y_given_xz[x * self.nz + z].estimate(y)
    }

    pub fn ddot_y_given_xz_at(&self, y: usize, x: usize, z: usize, count: u64) -> Estimate {
        self.y_given_xz[x * self.nz + z].estimate_at(y, count)
    }

    pub fn ddot_z_given_x_at(&self, z: usize, x: usize, count: u64) -> Estimate {
        self.z_given_x[x].estimate_at(z, count)
    }

    pub fn ddot_z_given_x(&self, z: usize, x: usize) -> Estimate {
        self.z_given_x[x].estimate(z)
    }

    /// `#_{⌊⌊n⌋⌋} z / ⌊⌊n⌋⌋` for a prefix of length `n`.
    pub fn ddot_z_at(&self, z: usize, n: u64) -> Estimate {
        self.z_all.estimate_at(z, n)
    }

    pub fn ddot_x_at(&self, x: usize, n: u64) -> Estimate {
        self.x_all.estimate_at(x, n)
    }

    pub fn tally_y_given_xz(&self, x: usize, z: usize) -> &DyadicTally {
        &self.y_given_xz[x * self.nz + z]
    }
}
