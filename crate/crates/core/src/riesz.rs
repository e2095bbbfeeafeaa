//! Finite-dimensional Riesz spaces and regulators.
//!
//! The instantiated spaces are the reals and `R^d` with the componentwise
//! order. Both are Dedekind complete and weakly sigma-distributive, so the
//! only lattice machinery needed is componentwise max/min plus the
//! (D)-sequence algebra used to express integration errors.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RieszError {
    #[error("lattice space mismatch: {left} vs {right}")]
    SpaceMismatch { left: LatticeSpace, right: LatticeSpace },
    #[error("invalid lattice dimension {0}")]
    InvalidDimension(usize),
    #[error("regulator decay base {0} is outside (0, 1)")]
    InvalidBase(f64),
    #[error("regulator decay bases differ: {0} vs {1}")]
    BaseMismatch(f64, f64),
    #[error("element must be nonnegative: {0}")]
    Negative(LatticeElement),
    #[error("eval map entries must be >= 1")]
    InvalidEvalMap,
    #[error("coordinate is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Scalar,
    Vector,
}

/// The Riesz space a value lives in: the reals, or `R^dim` ordered
/// componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeSpace {
    kind: SpaceKind,
    dim: usize,
}

impl LatticeSpace {
    pub const fn scalar() -> Self {
        LatticeSpace { kind: SpaceKind::Scalar, dim: 1 }
    }

    pub fn vector(dim: usize) -> Result<Self, RieszError> {
        if dim == 0 {
            return Err(RieszError::InvalidDimension(dim));
        }
        Ok(LatticeSpace { kind: SpaceKind::Vector, dim })
    }

    /// Scalar for `dim == 1`, vector otherwise.
    pub fn for_dim(dim: usize) -> Result<Self, RieszError> {
        if dim == 1 {
            Ok(Self::scalar())
        } else {
            Self::vector(dim)
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl fmt::Display for LatticeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SpaceKind::Scalar => write!(f, "scalar"),
            SpaceKind::Vector => write!(f, "vector({})", self.dim),
        }
    }
}

pub(crate) type Coords = SmallVec<[f64; 4]>;

/// An element of a [`LatticeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeElement {
    space: LatticeSpace,
    coords: Coords,
}

impl LatticeElement {
    pub fn scalar(x: f64) -> Self {
        LatticeElement { space: LatticeSpace::scalar(), coords: smallvec::smallvec![x] }
    }

    pub fn new(space: LatticeSpace, coords: &[f64]) -> Result<Self, RieszError> {
        if coords.len() != space.dim {
            return Err(RieszError::InvalidDimension(coords.len()));
        }
        Ok(LatticeElement { space, coords: coords.iter().copied().collect() })
    }

    /// Builds an element from raw coordinates, scalar when there is exactly one.
    pub fn from_coords(coords: &[f64]) -> Result<Self, RieszError> {
        Self::new(LatticeSpace::for_dim(coords.len())?, coords)
    }

    pub fn zero(space: LatticeSpace) -> Self {
        Self::splat(space, 0.0)
    }

    pub fn splat(space: LatticeSpace, x: f64) -> Self {
        LatticeElement { space, coords: smallvec::smallvec![x; space.dim] }
    }

    pub fn space(&self) -> LatticeSpace {
        self.space
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    fn check(&self, other: &Self) -> Result<(), RieszError> {
        if self.space != other.space {
            return Err(RieszError::SpaceMismatch { left: self.space, right: other.space });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self, RieszError> {
        self.check(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(&a, &b)| op(a, b)).collect();
        Ok(LatticeElement { space: self.space, coords })
    }

    fn map(&self, op: impl Fn(f64) -> f64) -> Self {
        LatticeElement { space: self.space, coords: self.coords.iter().map(|&a| op(a)).collect() }
    }

    /// Supremum `x ∨ y`.
    pub fn join(&self, other: &Self) -> Result<Self, RieszError> {
        self.zip_with(other, f64::max)
    }

    /// Infimum `x ∧ y`.
    pub fn meet(&self, other: &Self) -> Result<Self, RieszError> {
        self.zip_with(other, f64::min)
    }

    pub fn add(&self, other: &Self) -> Result<Self, RieszError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, RieszError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        self.map(|a| -a)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|a| c * a)
    }

    /// `|x| = x ∨ (-x)`.
    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn positive_part(&self) -> Self {
        self.map(|a| a.max(0.0))
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> Result<bool, RieszError> {
        self.check(other)?;
        Ok(self.coords.iter().zip(&other.coords).all(|(a, b)| a <= b))
    }

    /// Componentwise strict `self < other` in every coordinate.
    pub fn lt_strict(&self, other: &Self) -> Result<bool, RieszError> {
        self.check(other)?;
        Ok(self.coords.iter().zip(&other.coords).all(|(a, b)| a < b))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coords.iter().all(|&a| a >= 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&a| a == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|a| a.is_finite())
    }

    /// Largest absolute coordinate.
    pub fn sup_norm(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

impl fmt::Display for LatticeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.space.kind == SpaceKind::Scalar {
            return write!(f, "{}", self.coords[0]);
        }
        write!(f, "(")?;
        for (k, c) in self.coords.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for LatticeElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.coords.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LatticeElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        LatticeElement::from_coords(&coords).map_err(D::Error::custom)
    }
}

/// Componentwise join of a nonempty collection.
pub fn join_all<'a>(items: impl IntoIterator<Item = &'a LatticeElement>) -> Option<LatticeElement> {
    fold_all(items, f64::max)
}

/// Componentwise meet of a nonempty collection.
pub fn meet_all<'a>(items: impl IntoIterator<Item = &'a LatticeElement>) -> Option<LatticeElement> {
    fold_all(items, f64::min)
}

fn fold_all<'a>(
    items: impl IntoIterator<Item = &'a LatticeElement>,
    op: impl Fn(f64, f64) -> f64,
) -> Option<LatticeElement> {
    let mut it = items.into_iter();
    let mut acc = it.next()?.clone();
    for x in it {
        assert_eq!(acc.space, x.space, "fold over mixed lattice spaces");
        for (a, &b) in acc.coords.iter_mut().zip(&x.coords) {
            *a = op(*a, b);
        }
    }
    Some(acc)
}

/// A point `φ ∈ ℕ^ℕ`, stored as a finite prefix and a constant tail.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvalMap {
    values: Vec<u32>,
    tail_value: u32,
}

impl EvalMap {
    pub fn new(values: Vec<u32>, tail_value: u32) -> Result<Self, RieszError> {
        if tail_value == 0 || values.contains(&0) {
            return Err(RieszError::InvalidEvalMap);
        }
        Ok(EvalMap { values, tail_value })
    }

    /// The constant map `φ ≡ n`.
    pub fn constant(n: u32) -> Self {
        assert!(n >= 1, "eval map entries start at 1");
        EvalMap { values: Vec::new(), tail_value: n }
    }

    /// `φ(i)` for `i >= 1`.
    pub fn at(&self, i: usize) -> u32 {
        debug_assert!(i >= 1);
        self.values.get(i - 1).copied().unwrap_or(self.tail_value)
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn tail_value(&self) -> u32 {
        self.tail_value
    }
}

/// Read-only view of a doubly indexed family `a_{i,j}` (1-based).
pub trait DSequence {
    fn space(&self) -> LatticeSpace;
    /// Number of rows that may be nonzero.
    fn row_count(&self) -> usize;
    fn entry(&self, i: usize, j: u32) -> LatticeElement;

    /// `⋁_i a_{i,φ(i)}`; rows past `row_count` contribute zero.
    fn eval(&self, phi: &EvalMap) -> LatticeElement {
        let mut acc = LatticeElement::zero(self.space());
        for i in 1..=self.row_count() {
            let e = self.entry(i, phi.at(i));
            for (a, &b) in acc.coords.iter_mut().zip(&e.coords) {
                *a = a.max(b);
            }
        }
        acc
    }
}

/// A regulator in canonical product form `a_{i,j} = u_i · base^(j - shift)`.
///
/// Each nonzero row is strictly decreasing to zero in `j`, so every row is an
/// (o)-sequence and the family is bounded by `Σ_i u_i · base^(1 - shift)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Regulator {
    space: LatticeSpace,
    base: f64,
    shift: i32,
    rows: Vec<LatticeElement>,
}

#[derive(Serialize, Deserialize)]
struct RegulatorRepr {
    base: f64,
    #[serde(default, skip_serializing_if = "is_zero_shift")]
    shift: i32,
    rows: Vec<LatticeElement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

fn is_zero_shift(s: &i32) -> bool {
    *s == 0
}

impl Serialize for Regulator {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let dim = self.rows.is_empty().then_some(self.space.dim).filter(|&d| d != 1);
        RegulatorRepr { base: self.base, shift: self.shift, rows: self.rows.clone(), dim }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Regulator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = RegulatorRepr::deserialize(deserializer)?;
        let space = match repr.rows.first() {
            Some(r) => r.space(),
            None => LatticeSpace::for_dim(repr.dim.unwrap_or(1)).map_err(D::Error::custom)?,
        };
        Regulator::with_shift(space, repr.base, repr.shift, repr.rows).map_err(D::Error::custom)
    }
}

impl Regulator {
    pub const DEFAULT_BASE: f64 = 0.5;

    pub fn new(space: LatticeSpace, base: f64, rows: Vec<LatticeElement>) -> Result<Self, RieszError> {
        Self::with_shift(space, base, 0, rows)
    }

    pub fn with_shift(
        space: LatticeSpace,
        base: f64,
        shift: i32,
        rows: Vec<LatticeElement>,
    ) -> Result<Self, RieszError> {
        if !(base > 0.0 && base < 1.0) {
            return Err(RieszError::InvalidBase(base));
        }
        for r in &rows {
            if r.space != space {
                return Err(RieszError::SpaceMismatch { left: space, right: r.space });
            }
            if !r.is_finite() {
                return Err(RieszError::NonFinite);
            }
            if !r.is_nonnegative() {
                return Err(RieszError::Negative(r.clone()));
            }
        }
        Ok(Regulator { space, base, shift, rows })
    }

    /// One-row regulator with base ½.
    pub fn single(u: LatticeElement) -> Result<Self, RieszError> {
        Self::new(u.space(), Self::DEFAULT_BASE, vec![u])
    }

    pub fn zero(space: LatticeSpace) -> Self {
        Regulator { space, base: Self::DEFAULT_BASE, shift: 0, rows: Vec::new() }
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn shift(&self) -> i32 {
        self.shift
    }

    pub fn rows(&self) -> &[LatticeElement] {
        &self.rows
    }

    /// `U = Σ_i u_i`.
    pub fn row_sum(&self) -> LatticeElement {
        let mut acc = LatticeElement::zero(self.space);
        for r in &self.rows {
            for (a, &b) in acc.coords.iter_mut().zip(&r.coords) {
                *a += b;
            }
        }
        acc
    }

    /// Upper bound of the whole family, attained at `j = 1`.
    pub fn bound(&self) -> LatticeElement {
        self.row_sum().scale(self.factor(1))
    }

    fn factor(&self, j: u32) -> f64 {
        self.base.powi(j as i32 - self.shift)
    }

    /// `|c| · a`, realized rowwise.
    pub fn scaled(&self, c: f64) -> Self {
        let rows = self.rows.iter().map(|r| r.scale(c.abs())).collect();
        Regulator { rows, ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(LatticeElement::is_zero)
    }
}

impl DSequence for Regulator {
    fn space(&self) -> LatticeSpace {
        self.space
    }

    fn row_count(&self) -> usize {
        self.rows.len()
    }

    fn entry(&self, i: usize, j: u32) -> LatticeElement {
        match self.rows.get(i - 1) {
            Some(u) => u.scale(self.factor(j)),
            None => LatticeElement::zero(self.space),
        }
    }
}

/// A regulator given by an explicit table; columns past the table repeat
/// the last column scaled by successive powers of ½. Only used for checks.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedRegulator {
    space: LatticeSpace,
    table: Vec<Vec<LatticeElement>>,
}

impl TabulatedRegulator {
    pub fn new(space: LatticeSpace, table: Vec<Vec<LatticeElement>>) -> Result<Self, RieszError> {
        for row in &table {
            for e in row {
                if e.space != space {
                    return Err(RieszError::SpaceMismatch { left: space, right: e.space });
                }
                if !e.is_nonnegative() {
                    return Err(RieszError::Negative(e.clone()));
                }
            }
        }
        Ok(TabulatedRegulator { space, table })
    }
}

impl DSequence for TabulatedRegulator {
    fn space(&self) -> LatticeSpace {
        self.space
    }

    fn row_count(&self) -> usize {
        self.table.len()
    }

    fn entry(&self, i: usize, j: u32) -> LatticeElement {
        let row = &self.table[i - 1];
        let j = j as usize;
        match row.len() {
            0 => LatticeElement::zero(self.space),
            n if j <= n => row[j - 1].clone(),
            n => row[n - 1].scale(0.5f64.powi((j - n) as i32)),
        }
    }
}

/// `⋁_i a_{i,φ(i)}`.
pub fn regulator_eval(r: &impl DSequence, phi: &EvalMap) -> LatticeElement {
    r.eval(phi)
}

/// Smallest `s >= 0` with `base^(-s) >= n`.
fn shift_for(base: f64, n: usize) -> i32 {
    let mut s = 0;
    while base.powi(-s) < n as f64 {
        s += 1;
    }
    s
}

fn check_family(rs: &[Regulator]) -> Result<Option<(LatticeSpace, f64)>, RieszError> {
    let Some(first) = rs.first() else { return Ok(None) };
    for r in &rs[1..] {
        if r.space != first.space {
            return Err(RieszError::SpaceMismatch { left: first.space, right: r.space });
        }
        if r.base != first.base {
            return Err(RieszError::BaseMismatch(first.base, r.base));
        }
    }
    Ok(Some((first.space, first.base)))
}

/// Builds `c` with `Σ_r ⋁_i a^r_{i,φ(i)} <= ⋁_i c_{i,φ(i)}` for every `φ`.
///
/// Rows of `c` are rowwise sums `Σ_r u^r_i`; the sum over `r` of suprema is
/// at most `R` times the supremum of the sums, which the shift absorbs.
pub fn regulator_combine(rs: &[Regulator]) -> Result<Regulator, RieszError> {
    let Some((space, base)) = check_family(rs)? else {
        return Err(RieszError::InvalidDimension(0));
    };
    let nonzero: Vec<&Regulator> = rs.iter().filter(|r| !r.is_zero()).collect();
    let rows_len = nonzero.iter().map(|r| r.rows.len()).max().unwrap_or(0);
    let shift = nonzero.iter().map(|r| r.shift).max().unwrap_or(0);
    let mut rows = vec![LatticeElement::zero(space); rows_len];
    for r in &nonzero {
        // Rescale so every input shares the common shift.
        let k = base.powi(shift - r.shift);
        for (acc, u) in rows.iter_mut().zip(&r.rows) {
            for (a, &b) in acc.coords.iter_mut().zip(&u.coords) {
                *a += k * b;
            }
        }
    }
    let shift = shift + shift_for(base, nonzero.len());
    if rows.iter().all(LatticeElement::is_zero) {
        return Ok(Regulator { space, base, shift: 0, rows: Vec::new() });
    }
    Ok(Regulator { space, base, shift, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaReport {
    pub values: Vec<LatticeElement>,
    pub decreasing: bool,
    pub infimum_proxy: LatticeElement,
}

/// Evaluates `r` along the constant maps `φ ≡ 1..=depth`.
pub fn sigma_distributivity_check(r: &impl DSequence, depth: u32) -> SigmaReport {
    let depth = depth.max(1);
    let values: Vec<LatticeElement> =
        (1..=depth).map(|n| r.eval(&EvalMap::constant(n))).collect();
    let decreasing = values.windows(2).all(|w| w[1].le(&w[0]).unwrap_or(false));
    let infimum_proxy = values.last().cloned().expect("depth >= 1");
    SigmaReport { values, decreasing, infimum_proxy }
}

/// Single regulator dominating a truncated countable family below `x`:
/// `x ∧ Σ_n ⋁_i a^n_{i,φ(i)+n} <= ⋁_i c_{i,φ(i)}`.
pub fn fremlin_combine(family: &[Regulator], x: &LatticeElement) -> Result<Regulator, RieszError> {
    if !x.is_nonnegative() {
        return Err(RieszError::Negative(x.clone()));
    }
    let Some((space, base)) = check_family(family)? else {
        return Ok(Regulator::zero(x.space()));
    };
    if space != x.space() {
        return Err(RieszError::SpaceMismatch { left: space, right: x.space() });
    }
    // Row i of c collects Σ_n u^n_i · base^(n - shift_n); summing the
    // suprema over i costs a factor of the row count, paid by the shift.
    let rows_len = family.iter().map(|r| r.rows.len()).max().unwrap_or(0);
    let mut rows = vec![LatticeElement::zero(space); rows_len];
    for (n, r) in family.iter().enumerate() {
        let k = base.powi(n as i32 + 1 - r.shift);
        for (acc, u) in rows.iter_mut().zip(&r.rows) {
            for (a, &b) in acc.coords.iter_mut().zip(&u.coords) {
                *a += k * b;
            }
        }
    }
    if rows.iter().all(LatticeElement::is_zero) {
        return Ok(Regulator::zero(space));
    }
    Ok(Regulator { space, base, shift: shift_for(base, rows_len), rows })
}

/// Left-hand side of the Fremlin inequality for a sampled `φ`.
pub fn fremlin_lhs(family: &[Regulator], x: &LatticeElement, phi: &EvalMap) -> Result<LatticeElement, RieszError> {
    let mut sum = LatticeElement::zero(x.space());
    for (n, r) in family.iter().enumerate() {
        let shifted = shifted_map(phi, n as u32 + 1, r.rows.len());
        sum = sum.add(&r.eval(&shifted))?;
    }
    x.meet(&sum)
}

fn shifted_map(phi: &EvalMap, by: u32, rows: usize) -> EvalMap {
    let len = rows.max(phi.values.len());
    let values = (1..=len).map(|i| phi.at(i) + by).collect();
    EvalMap { values, tail_value: phi.tail_value + by }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FremlinCheck {
    pub samples: usize,
    pub violations: usize,
}

/// Checks the Fremlin inequality for `c` on every map in `phis`.
pub fn fremlin_check(
    family: &[Regulator],
    x: &LatticeElement,
    c: &Regulator,
    phis: &[EvalMap],
) -> Result<FremlinCheck, RieszError> {
    let mut violations = 0;
    for phi in phis {
        if !fremlin_lhs(family, x, phi)?.le(&c.eval(phi))? {
            violations += 1;
        }
    }
    Ok(FremlinCheck { samples: phis.len(), violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> LatticeElement {
        LatticeElement::from_coords(c).unwrap()
    }

    fn s(x: f64) -> LatticeElement {
        LatticeElement::scalar(x)
    }

    #[test]
    fn join_meet_abs() {
        assert_eq!(v(&[1.0, -2.0]).join(&v(&[0.0, 3.0])).unwrap(), v(&[1.0, 3.0]));
        let x = v(&[-2.0, 1.0]);
        assert_eq!(x.join(&x).unwrap(), x);
        assert_eq!(x.abs(), x.join(&x.neg()).unwrap());
        assert_eq!(x.abs(), v(&[2.0, 1.0]));
        assert!(matches!(s(1.0).join(&x), Err(RieszError::SpaceMismatch { .. })));
    }

    #[test]
    fn incomparable_vectors() {
        let a = v(&[1.0, 0.0]);
        let b = v(&[0.0, 1.0]);
        assert!(!a.le(&b).unwrap());
        assert!(!b.le(&a).unwrap());
    }

    #[test]
    fn eval_examples() {
        let r = Regulator::single(s(1.0)).unwrap();
        assert_eq!(r.eval(&EvalMap::constant(3)), s(0.125));

        let rows = (1..=8).map(|i| s(0.5f64.powi(i))).collect();
        let r = Regulator::new(LatticeSpace::scalar(), 0.5, rows).unwrap();
        let phi = EvalMap::new((1..=8).collect(), 9).unwrap();
        assert_eq!(r.eval(&phi), s(0.25));

        let deep = r.eval(&EvalMap::constant(60));
        assert!(deep.coords()[0] <= r.row_sum().coords()[0] * 0.5f64.powi(60));
    }

    #[test]
    fn rows_are_o_sequences() {
        let r = Regulator::new(LatticeSpace::scalar(), 0.5, vec![s(3.0), s(0.0), s(1e-3)]).unwrap();
        for i in 1..=3 {
            let u = r.rows()[i - 1].coords()[0];
            for j in 1..60 {
                let (a, b) = (r.entry(i, j).coords()[0], r.entry(i, j + 1).coords()[0]);
                if u != 0.0 {
                    assert!(b < a);
                }
            }
            assert!(r.entry(i, 60).coords()[0] <= 1e-15 * u);
        }
    }

    #[test]
    fn combine_example() {
        let a = Regulator::single(s(1.0)).unwrap();
        let b = Regulator::single(s(2.0)).unwrap();
        let c = regulator_combine(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(c.rows(), &[s(3.0)]);
        assert_eq!(c.shift(), 1);
        let phi = EvalMap::constant(2);
        let lhs = a.eval(&phi).add(&b.eval(&phi)).unwrap();
        assert_eq!(lhs, s(0.75));
        assert_eq!(c.eval(&phi), s(1.5));
    }

    #[test]
    fn combine_zero_and_single() {
        let z = Regulator::zero(LatticeSpace::scalar());
        assert!(regulator_combine(std::slice::from_ref(&z)).unwrap().is_zero());
        let a = Regulator::new(LatticeSpace::scalar(), 0.5, vec![s(1.0), s(2.0)]).unwrap();
        assert_eq!(regulator_combine(&[a.clone(), z]).unwrap(), a);
    }

    #[test]
    fn combine_handles_late_rows() {
        // A single-row sum would only see φ(1) and miss row 2 here.
        let a = Regulator::new(LatticeSpace::scalar(), 0.5, vec![s(0.0), s(1.0)]).unwrap();
        let b = Regulator::single(s(1.0)).unwrap();
        let c = regulator_combine(&[a.clone(), b.clone()]).unwrap();
        let phi = EvalMap::new(vec![6, 1], 1).unwrap();
        let lhs = a.eval(&phi).add(&b.eval(&phi)).unwrap();
        assert!(lhs.le(&c.eval(&phi)).unwrap());
    }

    #[test]
    fn combine_rejects_mismatch() {
        let a = Regulator::single(s(1.0)).unwrap();
        let b = Regulator::new(LatticeSpace::scalar(), 0.25, vec![s(1.0)]).unwrap();
        assert!(matches!(regulator_combine(&[a.clone(), b]), Err(RieszError::BaseMismatch(..))));
        let c = Regulator::single(v(&[1.0, 1.0])).unwrap();
        assert!(matches!(regulator_combine(&[a, c]), Err(RieszError::SpaceMismatch { .. })));
    }

    #[test]
    fn scaled_regulator() {
        let a = Regulator::new(LatticeSpace::scalar(), 0.5, vec![s(1.0), s(0.5)]).unwrap();
        let b = a.scaled(-3.0);
        assert_eq!(b.rows(), &[s(3.0), s(1.5)]);
        let phi = EvalMap::constant(2);
        assert_eq!(b.eval(&phi), a.eval(&phi).scale(3.0));
    }

    #[test]
    fn sigma_examples() {
        let rows = (1..=8).map(|i| s(0.5f64.powi(i))).collect();
        let r = Regulator::new(LatticeSpace::scalar(), 0.5, rows).unwrap();
        let rep = sigma_distributivity_check(&r, 10);
        assert!(rep.decreasing);
        assert_eq!(rep.infimum_proxy, s(0.5f64.powi(11)));
        assert!((rep.infimum_proxy.coords()[0] - 4.88e-4).abs() < 1e-6);

        let z = sigma_distributivity_check(&Regulator::zero(LatticeSpace::scalar()), 5);
        assert!(z.decreasing && z.values.iter().all(LatticeElement::is_zero));

        let r = Regulator::single(v(&[1.0, 2.0])).unwrap();
        let rep = sigma_distributivity_check(&r, 4);
        for (n, val) in rep.values.iter().enumerate() {
            let n = n as i32 + 1;
            assert_eq!(val, &v(&[0.5f64.powi(n), 2.0 * 0.5f64.powi(n)]));
        }
    }

    #[test]
    fn tabulated_regulator_checks() {
        let table = vec![vec![s(1.0), s(0.5), s(0.25)], vec![s(2.0)]];
        let r = TabulatedRegulator::new(LatticeSpace::scalar(), table).unwrap();
        assert_eq!(r.entry(1, 5), s(0.0625));
        assert_eq!(r.entry(2, 2), s(1.0));
        assert_eq!(r.eval(&EvalMap::constant(1)), s(2.0));
        assert!(sigma_distributivity_check(&r, 30).decreasing);
    }

    #[test]
    fn fremlin_example() {
        let family: Vec<Regulator> =
            (1..=8).map(|n| Regulator::single(s(0.5f64.powi(n))).unwrap()).collect();
        let x = s(1.0);
        let c = fremlin_combine(&family, &x).unwrap();
        let phi = EvalMap::constant(1);
        let lhs = fremlin_lhs(&family, &x, &phi).unwrap();
        let expected: f64 = (1..=8).map(|n| 0.5f64.powi(2 * n + 1)).sum();
        assert_eq!(lhs, s(expected));
        assert!((expected - 0.1666).abs() < 1e-4);
        assert!(lhs.le(&c.eval(&phi)).unwrap());
    }

    #[test]
    fn fremlin_degenerate() {
        let x = s(1.0);
        let c = fremlin_combine(&[], &x).unwrap();
        assert!(c.is_zero());
        assert_eq!(fremlin_lhs(&[], &x, &EvalMap::constant(1)).unwrap(), s(0.0));

        let family = vec![Regulator::single(s(4.0)).unwrap()];
        let zero = s(0.0);
        for n in 1..6 {
            assert_eq!(fremlin_lhs(&family, &zero, &EvalMap::constant(n)).unwrap(), zero);
        }
        assert!(matches!(fremlin_combine(&family, &s(-1.0)), Err(RieszError::Negative(_))));
    }

    #[test]
    fn regulator_json_shape() {
        let r = Regulator::single(s(0.25)).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"base":0.5,"rows":[[0.25]]}"#);
        let back: Regulator = serde_json::from_str(r#"{"base":0.5,"shift":1,"rows":[[1,2]]}"#).unwrap();
        assert_eq!(back.shift(), 1);
        assert_eq!(back.space(), LatticeSpace::vector(2).unwrap());
        assert!(serde_json::from_str::<Regulator>(r#"{"base":0.5,"rows":[[-1]]}"#).is_err());
    }
}
