//! Clipped interval arithmetic on `[0, 1]`.
//!
//! An interval `c ± Δc` stands for `[c − Δc, c + Δc] ∩ [0, 1]`. Sums,
//! differences and products of two such intervals are enclosed by
//! `(a ∘ b) ± (Δa + Δb)`, and by induction any `+ − ×` expression evaluated at
//! interval arguments is enclosed by its value at the midpoints plus the sum
//! of all leaf radii, counting each leaf occurrence separately.
//!
//! The product enclosure needs at least one operand midpoint with magnitude at
//! most one. That always holds when operands are probability estimates or
//! partial sums of probabilities that stay in `[0, 1]`, which is the case for
//! every effect expression in this crate. See [`Expr::products_well_scaled`].
//!
//! Midpoints may leave `[0, 1]` transiently (after a subtraction, say); only
//! realised sets are clipped.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::bounds::Radius;
use crate::numeric::exact_sum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntervalError {
    #[error("formal variable `{0}` is not bound")]
    Unbound(String),
    #[error("expression has {0} leaves; exact ranges are limited to {MAX_EXACT_LEAVES}")]
    TooLarge(usize),
}

/// Largest leaf count accepted by [`exact_range`].
pub const MAX_EXACT_LEAVES: usize = 16;

/// Midpoint and half-width of a subinterval of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbInterval {
    pub midpoint: f64,
    pub halfwidth: Radius,
}

impl ProbInterval {
    pub fn new(midpoint: f64, halfwidth: Radius) -> Self {
        Self {
            midpoint,
            halfwidth,
        }
    }

    pub fn point(midpoint: f64) -> Self {
        Self::new(midpoint, Radius::ZERO)
    }

    pub fn with_radius(midpoint: f64, hw: f64) -> Self {
        Self::new(midpoint, Radius::from_f64(hw))
    }

    pub fn unbounded(midpoint: f64) -> Self {
        Self::new(midpoint, Radius::Unbounded)
    }

    /// `[mid − hw, mid + hw] ∩ [0, 1]`, or `None` when that is empty.
    pub fn realized(&self) -> Option<(f64, f64)> {
        match self.halfwidth {
            Radius::Unbounded => Some((0.0, 1.0)),
            Radius::Finite(hw) => {
                let lo = (self.midpoint - hw).max(0.0);
                let hi = (self.midpoint + hw).min(1.0);
                (lo <= hi).then_some((lo, hi))
            }
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.realized().is_some_and(|(lo, hi)| lo <= p && p <= hi)
    }
}

impl fmt::Display for ProbInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {}", self.midpoint, self.halfwidth)
    }
}

pub fn iv_add(a: ProbInterval, b: ProbInterval) -> ProbInterval {
    ProbInterval::new(a.midpoint + b.midpoint, a.halfwidth + b.halfwidth)
}

pub fn iv_sub(a: ProbInterval, b: ProbInterval) -> ProbInterval {
    ProbInterval::new(a.midpoint - b.midpoint, a.halfwidth + b.halfwidth)
}

pub fn iv_mul(a: ProbInterval, b: ProbInterval) -> ProbInterval {
    ProbInterval::new(a.midpoint * b.midpoint, a.halfwidth + b.halfwidth)
}

impl std::ops::Add for ProbInterval {
    type Output = ProbInterval;
    fn add(self, rhs: Self) -> Self {
        iv_add(self, rhs)
    }
}

impl std::ops::Sub for ProbInterval {
    type Output = ProbInterval;
    fn sub(self, rhs: Self) -> Self {
        iv_sub(self, rhs)
    }
}

impl std::ops::Mul for ProbInterval {
    type Output = ProbInterval;
    fn mul(self, rhs: Self) -> Self {
        iv_mul(self, rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
}

impl Op {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
        }
    }
}

/// Arithmetic expression over named formal variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Bin(Op, Box<Expr>, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn var<S: Into<String>>(name: S) -> Self {
        Expr::Var(name.into())
    }

    pub fn bin(op: Op, a: Expr, b: Expr) -> Self {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Self::bin(Op::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Self::bin(Op::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Self::bin(Op::Mul, a, b)
    }

    /// Left-nested sum; `None` for an empty iterator.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Option<Self> {
        terms.into_iter().reduce(Expr::add)
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Option<Self> {
        factors.into_iter().reduce(Expr::mul)
    }

    /// Leaf occurrences in left-to-right order, duplicates included.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(name) => out.push(name),
            Expr::Bin(_, a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Expr::Var(_) => 1,
            Expr::Bin(_, a, b) => a.leaf_count() + b.leaf_count(),
        }
    }

    /// Value at the binding midpoints.
    pub fn eval_midpoint(&self, bindings: &HashMap<String, ProbInterval>) -> Result<f64, IntervalError> {
        match self {
            Expr::Var(name) => lookup(bindings, name).map(|b| b.midpoint),
            Expr::Bin(op, a, b) => Ok(op.apply(a.eval_midpoint(bindings)?, b.eval_midpoint(bindings)?)),
        }
    }

    /// True if every product node has an operand whose midpoint has magnitude
    /// at most one, the condition under which [`eval_expr`] encloses the exact range.
    pub fn products_well_scaled(&self, bindings: &HashMap<String, ProbInterval>) -> Result<bool, IntervalError> {
        match self {
            Expr::Var(_) => Ok(true),
            Expr::Bin(op, a, b) => {
                if !a.products_well_scaled(bindings)? || !b.products_well_scaled(bindings)? {
                    return Ok(false);
                }
                if *op == Op::Mul {
                    let ma = a.eval_midpoint(bindings)?;
                    let mb = b.eval_midpoint(bindings)?;
                    return Ok(ma.abs() <= 1.0 || mb.abs() <= 1.0);
                }
                Ok(true)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

fn lookup<'a>(bindings: &'a HashMap<String, ProbInterval>, name: &str) -> Result<&'a ProbInterval, IntervalError> {
    bindings
        .get(name)
        .ok_or_else(|| IntervalError::Unbound(name.to_string()))
}

/// Midpoint: the expression at the binding midpoints. Half-width: the
/// correctly rounded sum of the bound radius of every leaf occurrence.
pub fn eval_expr(e: &Expr, bindings: &HashMap<String, ProbInterval>) -> Result<ProbInterval, IntervalError> {
    let midpoint = e.eval_midpoint(bindings)?;
    let radii = e
        .leaves()
        .into_iter()
        .map(|l| lookup(bindings, l).map(|b| b.halfwidth))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProbInterval::new(midpoint, Radius::total(radii)))
}

/// Exact value set of `e` when every leaf occurrence ranges independently over
/// its realised interval and each operation keeps only results in `[0, 1]`.
///
/// Because leaf occurrences are independent, the two operands of any node
/// depend on disjoint variables, so each node's set is the clipped image of
/// the product of its children's sets; for `+ − ×` the extremes sit at
/// endpoint combinations. `None` denotes the empty set.
pub fn exact_range(e: &Expr, bindings: &HashMap<String, ProbInterval>) -> Result<Option<(f64, f64)>, IntervalError> {
    let leaves = e.leaf_count();
    if leaves > MAX_EXACT_LEAVES {
        return Err(IntervalError::TooLarge(leaves));
    }
    range_rec(e, bindings)
}

fn range_rec(e: &Expr, bindings: &HashMap<String, ProbInterval>) -> Result<Option<(f64, f64)>, IntervalError> {
    match e {
        Expr::Var(name) => Ok(lookup(bindings, name)?.realized()),
        Expr::Bin(op, a, b) => {
            let (Some((alo, ahi)), Some((blo, bhi))) = (range_rec(a, bindings)?, range_rec(b, bindings)?) else {
                return Ok(None);
            };
            let corners = [
                op.apply(alo, blo),
                op.apply(alo, bhi),
                op.apply(ahi, blo),
                op.apply(ahi, bhi),
            ];
            let lo = corners.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
            let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(1.0);
            Ok((lo <= hi).then_some((lo, hi)))
        }
    }
}

/// Sum of radii with multiplicity, as a plain helper for callers that build
/// radius lists without an expression tree.
pub fn radius_with_multiplicity(terms: &[(Radius, usize)]) -> Radius {
    let mut values = Vec::new();
    for &(r, k) in terms {
        match r {
            Radius::Unbounded if k > 0 => return Radius::Unbounded,
            Radius::Unbounded => {}
            Radius::Finite(v) => values.extend(std::iter::repeat_n(v, k)),
        }
    }
    Radius::Finite(exact_sum(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, f64, f64)]) -> HashMap<String, ProbInterval> {
        pairs
            .iter()
            .map(|&(n, m, h)| (n.to_string(), ProbInterval::with_radius(m, h)))
            .collect()
    }

    fn near(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn add_examples() {
        let s = iv_add(ProbInterval::point(0.3), ProbInterval::point(0.4));
        assert!(near(s.midpoint, 0.7));
        assert_eq!(s.halfwidth, Radius::ZERO);

        let a = ProbInterval::with_radius(0.5, 0.1);
        let s = a + a;
        assert!(near(s.midpoint, 1.0));
        assert!(near(s.halfwidth.as_f64(), 0.2));
        let (lo, hi) = s.realized().unwrap();
        assert!(near(lo, 0.8) && hi == 1.0);

        let u = ProbInterval::unbounded(0.2) + a;
        assert_eq!(u.halfwidth, Radius::Unbounded);
        assert_eq!(u.realized(), Some((0.0, 1.0)));
    }

    #[test]
    fn mul_examples() {
        let p = iv_mul(ProbInterval::with_radius(0.5, 0.1), ProbInterval::with_radius(0.4, 0.2));
        assert!(near(p.midpoint, 0.2));
        assert!(near(p.halfwidth.as_f64(), 0.3));
        let (lo, hi) = p.realized().unwrap();
        assert!(lo == 0.0 && near(hi, 0.5));
        // exact product range [0.4·0.2, 0.6·0.6]
        assert!(lo <= 0.08 && 0.36 <= hi);

        let x = ProbInterval::point(0.37);
        assert_eq!(iv_mul(x, ProbInterval::point(1.0)), x);

        let a = ProbInterval::with_radius(0.5, 0.1);
        let sq = a * a;
        assert!(near(sq.midpoint, 0.25) && near(sq.halfwidth.as_f64(), 0.2));
        let (lo, hi) = sq.realized().unwrap();
        assert!(lo <= 0.16 && 0.36 <= hi);
    }

    #[test]
    fn eval_examples() {
        let e = Expr::add(Expr::mul(Expr::var("a"), Expr::var("b")), Expr::var("c"));
        let r = eval_expr(&e, &bind(&[("a", 0.5, 0.0), ("b", 0.5, 0.0), ("c", 0.25, 0.0)])).unwrap();
        assert!(near(r.midpoint, 0.5));
        assert_eq!(r.halfwidth, Radius::ZERO);

        let ab = Expr::mul(Expr::var("a"), Expr::var("b"));
        let b = bind(&[("a", 0.5, 0.1), ("b", 0.5, 0.1)]);
        let r = eval_expr(&ab, &b).unwrap();
        let direct = iv_mul(b["a"], b["b"]);
        assert_eq!(r, direct);

        let aa = Expr::add(Expr::var("a"), Expr::var("a"));
        let r = eval_expr(&aa, &bind(&[("a", 0.3, 0.05)])).unwrap();
        assert!(near(r.midpoint, 0.6) && near(r.halfwidth.as_f64(), 0.10));

        assert_eq!(
            eval_expr(&ab, &bind(&[("a", 0.5, 0.1)])),
            Err(IntervalError::Unbound("b".into()))
        );
    }

    #[test]
    fn exact_range_examples() {
        let ab = Expr::mul(Expr::var("a"), Expr::var("b"));
        let (lo, hi) = exact_range(&ab, &bind(&[("a", 0.5, 0.1), ("b", 0.5, 0.1)])).unwrap().unwrap();
        assert!(near(lo, 0.16) && near(hi, 0.36));

        let e = Expr::add(Expr::mul(Expr::var("a"), Expr::var("b")), Expr::var("c"));
        let r = exact_range(&e, &bind(&[("a", 0.5, 0.0), ("b", 0.5, 0.0), ("c", 0.25, 0.0)])).unwrap();
        assert_eq!(r, Some((0.5, 0.5)));

        let diff = Expr::sub(Expr::var("a"), Expr::var("a"));
        let (lo, hi) = exact_range(&diff, &bind(&[("a", 0.5, 0.1)])).unwrap().unwrap();
        assert!(lo == 0.0 && near(hi, 0.2));
    }

    #[test]
    fn exact_range_guard() {
        let big = Expr::sum((0..=MAX_EXACT_LEAVES).map(|_| Expr::var("a"))).unwrap();
        assert_eq!(
            exact_range(&big, &bind(&[("a", 0.01, 0.0)])),
            Err(IntervalError::TooLarge(MAX_EXACT_LEAVES + 1))
        );
    }

    #[test]
    fn realized_sets_stay_in_unit_interval() {
        let i = ProbInterval::with_radius(-0.3, 0.1);
        assert_eq!(i.realized(), None);
        let i = ProbInterval::with_radius(1.1, 0.3);
        let (lo, hi) = i.realized().unwrap();
        assert!(near(lo, 0.8) && hi == 1.0);
    }

    #[test]
    fn well_scaled_detects_large_products() {
        let s = Expr::add(Expr::var("a"), Expr::var("b"));
        let e = Expr::mul(s.clone(), s);
        assert!(!e.products_well_scaled(&bind(&[("a", 0.6, 0.1), ("b", 0.6, 0.1)])).unwrap());
        assert!(e.products_well_scaled(&bind(&[("a", 0.3, 0.1), ("b", 0.6, 0.1)])).unwrap());
    }

    #[test]
    fn multiplicity_helper() {
        let r = radius_with_multiplicity(&[(Radius::Finite(0.1), 3), (Radius::Unbounded, 0)]);
        assert_eq!(r, Radius::Finite(exact_sum([0.1, 0.1, 0.1])));
        assert_eq!(
            radius_with_multiplicity(&[(Radius::Unbounded, 1)]),
            Radius::Unbounded
        );
    }
}
