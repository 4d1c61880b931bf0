//! Finite-variable DAGs and the back-door / front-door criterion checks.
//!
//! Blocking follows standard d-separation: a path is blocked by a set `S` iff
//! it has an interior non-collider that lies in `S`, or an interior collider
//! such that neither it nor any of its descendants lies in `S`. Paths are
//! simple (no repeated vertices) and ignore edge direction while remembering
//! the orientation of each edge.
//!
//! # Config grammar
//!
//! A DAG config is line oriented. Blank lines and text after `#` are ignored.
//!
//! ```text
//! # vertex declarations: <name> : <value> <value> ...   (values may also be comma separated)
//! Z: 0 1
//! X: 0 1
//! Y: 0 1
//! # edges: <parent> -> <child>   (chains like `A -> B -> C` are allowed)
//! Z -> X
//! Z -> Y
//! X -> Y
//! ```
//!
//! Names are made of ASCII letters, digits, `_` and `.`; every vertex must be
//! declared with a non-empty domain before it appears in an edge.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("domain of `{0}` repeats value `{1}`")]
    DuplicateValue(String, String),
    #[error("edge {0} -> {1} would create a cycle")]
    Cycle(String, String),
    #[error("self loop on `{0}`")]
    SelfLoop(String),
    #[error("the variable sets overlap on `{0}`")]
    Overlap(String),
    #[error("{0} must not be empty")]
    EmptySet(&'static str),
    #[error("path endpoints must differ (got `{0}` twice)")]
    SameEndpoints(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A directed acyclic graph over named variables with finite domains.
#[derive(Debug, Clone, Default)]
pub struct Dag {
    names: Vec<String>,
    index: HashMap<String, usize>,
    domains: Vec<Vec<String>>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex<S: Into<String>>(
        &mut self,
        name: S,
        domain: Vec<String>,
    ) -> Result<usize, GraphError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(GraphError::DuplicateVariable(name));
        }
        if domain.is_empty() {
            return Err(GraphError::EmptyDomain(name));
        }
        let mut seen = BTreeSet::new();
        for v in &domain {
            if !seen.insert(v.as_str()) {
                return Err(GraphError::DuplicateValue(name, v.clone()));
            }
        }
        let id = self.names.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.domains.push(domain);
        self.parents.push(Vec::new());
        self.children.push(Vec::new());
        Ok(id)
    }

    /// Adds `parent -> child`. Adding an existing edge is a no-op.
    pub fn add_edge(&mut self, parent: &str, child: &str) -> Result<(), GraphError> {
        let p = self.index_of(parent)?;
        let c = self.index_of(child)?;
        if p == c {
            return Err(GraphError::SelfLoop(parent.to_string()));
        }
        if self.children[p].contains(&c) {
            return Ok(());
        }
        if self.is_ancestor_or_self(c, p) {
            return Err(GraphError::Cycle(parent.to_string(), child.to_string()));
        }
        self.children[p].push(c);
        self.parents[c].push(p);
        Ok(())
    }

    /// Parses the line-oriented config format described in the module docs.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut dag = Dag::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| GraphError::Parse {
                line: line_no,
                message,
            };
            if line.contains("->") {
                let parts: Vec<&str> = line.split("->").map(str::trim).collect();
                for name in &parts {
                    if !valid_name(name) {
                        return Err(err(format!("invalid vertex name `{name}`")));
                    }
                }
                for pair in parts.windows(2) {
                    dag.add_edge(pair[0], pair[1]).map_err(|e| err(e.to_string()))?;
                }
            } else if let Some((name, values)) = line.split_once(':') {
                let name = name.trim();
                if !valid_name(name) {
                    return Err(err(format!("invalid vertex name `{name}`")));
                }
                let domain: Vec<String> = values
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
                dag.add_vertex(name, domain).map_err(|e| err(e.to_string()))?;
            } else {
                return Err(err(format!("expected `name: values` or `a -> b`, got `{line}`")));
            }
        }
        Ok(dag)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownVariable(name.to_string()))
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain(&self, v: usize) -> &[String] {
        &self.domains[v]
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(p, cs)| cs.iter().map(move |&c| (p, c)))
    }

    /// Vertices in a topological order; ties are broken by declaration order.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    /// Reflexive transitive closure: `closure[a][b]` iff `b` is `a` or a descendant of `a`.
    pub fn descendant_closure(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut closure = vec![vec![false; n]; n];
        for v in self.topological_order().into_iter().rev() {
            closure[v][v] = true;
            for &c in &self.children[v] {
                let (row_v, row_c) = if v < c {
                    let (a, b) = closure.split_at_mut(c);
                    (&mut a[v], &b[0])
                } else {
                    let (a, b) = closure.split_at_mut(v);
                    (&mut b[0], &a[c])
                };
                for (dst, &src) in row_v.iter_mut().zip(row_c.iter()) {
                    *dst |= src;
                }
            }
        }
        closure
    }

    fn is_ancestor_or_self(&self, from: usize, to: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; self.len()];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(self.children[v].iter().copied());
        }
        false
    }

    fn resolve_set(&self, names: &[&str], what: &'static str) -> Result<Vec<usize>, GraphError> {
        if names.is_empty() {
            return Err(GraphError::EmptySet(what));
        }
        let mut out: Vec<usize> = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<_, _>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// A simple path between two vertices, ignoring edge direction.
///
/// `forward[i]` is true when the edge between `vertices[i]` and
/// `vertices[i + 1]` points from the former to the latter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub vertices: Vec<usize>,
    pub forward: Vec<bool>,
}

impl Path {
    /// True if the first edge points into the start vertex.
    pub fn is_backdoor(&self) -> bool {
        matches!(self.forward.first(), Some(false))
    }

    /// True if every edge points away from the start.
    pub fn is_directed(&self) -> bool {
        self.forward.iter().all(|&f| f)
    }

    /// Interior vertices with both adjacent edges pointing into them.
    pub fn is_collider_at(&self, i: usize) -> bool {
        i > 0 && i + 1 < self.vertices.len() && self.forward[i - 1] && !self.forward[i]
    }

    pub fn interior(&self) -> &[usize] {
        let n = self.vertices.len();
        if n <= 2 {
            &[]
        } else {
            &self.vertices[1..n - 1]
        }
    }

    pub fn render(&self, dag: &Dag) -> String {
        let mut s = String::new();
        for (i, &v) in self.vertices.iter().enumerate() {
            if i > 0 {
                s.push(if self.forward[i - 1] { '→' } else { '←' });
            }
            s.push_str(dag.name(v));
        }
        s
    }
}

/// Every simple path between `a` and `b`, each exactly once.
pub fn enumerate_paths(dag: &Dag, a: &str, b: &str) -> Result<Vec<Path>, GraphError> {
    let a = dag.index_of(a)?;
    let b = dag.index_of(b)?;
    if a == b {
        return Err(GraphError::SameEndpoints(dag.name(a).to_string()));
    }
    Ok(paths_between(dag, a, b))
}

pub(crate) fn paths_between(dag: &Dag, a: usize, b: usize) -> Vec<Path> {
    let mut out = Vec::new();
    let mut on_path = vec![false; dag.len()];
    let mut vertices = vec![a];
    let mut forward = Vec::new();
    on_path[a] = true;
    dfs(dag, b, &mut on_path, &mut vertices, &mut forward, &mut out);
    out
}

fn dfs(
    dag: &Dag,
    target: usize,
    on_path: &mut [bool],
    vertices: &mut Vec<usize>,
    forward: &mut Vec<bool>,
    out: &mut Vec<Path>,
) {
    let v = *vertices.last().expect("path is never empty");
    if v == target {
        out.push(Path {
            vertices: vertices.clone(),
            forward: forward.clone(),
        });
        return;
    }
    let steps = dag
        .children(v)
        .iter()
        .map(|&c| (c, true))
        .chain(dag.parents(v).iter().map(|&p| (p, false)));
    for (next, fwd) in steps {
        if on_path[next] {
            continue;
        }
        on_path[next] = true;
        vertices.push(next);
        forward.push(fwd);
        dfs(dag, target, on_path, vertices, forward, out);
        forward.pop();
        vertices.pop();
        on_path[next] = false;
    }
}

/// d-separation blocking of a single path by `conditioning`.
pub fn path_blocked(path: &Path, conditioning: &[usize], dag: &Dag) -> bool {
    let closure = dag.descendant_closure();
    blocked_with(path, conditioning, &closure)
}

fn blocked_with(path: &Path, conditioning: &[usize], closure: &[Vec<bool>]) -> bool {
    let in_set = |v: usize| conditioning.contains(&v);
    (1..path.vertices.len().saturating_sub(1)).any(|i| {
        let v = path.vertices[i];
        if path.is_collider_at(i) {
            !conditioning.iter().any(|&s| closure[v][s])
        } else {
            in_set(v)
        }
    })
}

/// Outcome of a criterion check with human-readable witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriterionReport {
    satisfied: bool,
    violations: Vec<String>,
}

impl CriterionReport {
    pub fn from_violations(violations: Vec<String>) -> Self {
        Self {
            satisfied: violations.is_empty(),
            violations,
        }
    }

    pub fn satisfied(&self) -> bool {
        self.satisfied
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.satisfied {
            return write!(f, "satisfied");
        }
        write!(f, "violated")?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

fn check_disjoint(dag: &Dag, sets: &[&[usize]]) -> Result<(), GraphError> {
    let mut seen = vec![false; dag.len()];
    for set in sets {
        for &v in *set {
            if std::mem::replace(&mut seen[v], true) {
                return Err(GraphError::Overlap(dag.name(v).to_string()));
            }
        }
    }
    Ok(())
}

/// Back-door criterion for sets: for every `X′ ∈ xs` and `Y′ ∈ ys`, no
/// member of `zs` descends from `X′` and `zs` blocks every path between `X′`
/// and `Y′` that starts with an arrow into `X′`.
pub fn check_backdoor(
    dag: &Dag,
    xs: &[&str],
    ys: &[&str],
    zs: &[&str],
) -> Result<CriterionReport, GraphError> {
    let xs = dag.resolve_set(xs, "X")?;
    let ys = dag.resolve_set(ys, "Y")?;
    let zs = dag.resolve_set(zs, "Z")?;
    check_disjoint(dag, &[&xs, &ys, &zs])?;
    let closure = dag.descendant_closure();

    let mut violations = Vec::new();
    for &x in &xs {
        for &z in &zs {
            if closure[x][z] {
                violations.push(format!(
                    "{} is a descendant of {}",
                    dag.name(z),
                    dag.name(x)
                ));
            }
        }
    }
    for &x in &xs {
        for &y in &ys {
            for path in paths_between(dag, x, y) {
                if path.is_backdoor() && !blocked_with(&path, &zs, &closure) {
                    violations.push(format!("unblocked backdoor path {}", path.render(dag)));
                }
            }
        }
    }
    Ok(CriterionReport::from_violations(violations))
}

/// Front-door criterion for a single treatment `x`, outcome `y` and mediator set `zs`.
pub fn check_frontdoor(
    dag: &Dag,
    x: &str,
    y: &str,
    zs: &[&str],
) -> Result<CriterionReport, GraphError> {
    let xi = dag.index_of(x)?;
    let yi = dag.index_of(y)?;
    let zs = dag.resolve_set(zs, "Z")?;
    if xi == yi {
        return Err(GraphError::SameEndpoints(x.to_string()));
    }
    check_disjoint(dag, &[&[xi], &[yi], &zs])?;
    let closure = dag.descendant_closure();

    let mut violations = Vec::new();
    for path in paths_between(dag, xi, yi) {
        if path.is_directed() && !path.interior().iter().any(|v| zs.contains(v)) {
            violations.push(format!(
                "directed path {} is not intercepted",
                path.render(dag)
            ));
        }
    }
    for &z in &zs {
        for path in paths_between(dag, xi, z) {
            if path.is_backdoor() && !blocked_with(&path, &[], &closure) {
                violations.push(format!(
                    "unblocked backdoor path {} from treatment to mediator",
                    path.render(dag)
                ));
            }
        }
    }
    for &z in &zs {
        for path in paths_between(dag, z, yi) {
            if path.is_backdoor() && !blocked_with(&path, &[xi], &closure) {
                violations.push(format!(
                    "backdoor path {} from mediator to outcome not blocked by {}",
                    path.render(dag),
                    dag.name(xi)
                ));
            }
        }
    }
    Ok(CriterionReport::from_violations(violations))
}
