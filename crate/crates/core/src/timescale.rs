//! Bounded time scales built from finitely many closed intervals and points.
//!
//! Membership and the jump operators are exact: endpoints are stored as given
//! and lookups use binary search with no epsilon, so callers must query with
//! points obtained from the structure itself.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeScaleError {
    #[error("time scale has no components")]
    Empty,
    #[error("component bound is not finite")]
    NonFinite,
    #[error("interval [{0}, {1}] has lo > hi")]
    ReversedInterval(f64, f64),
    #[error("{0} is not a point of the time scale")]
    NotInScale(f64),
    #[error("interval endpoints must satisfy a < b (got a = {0}, b = {1})")]
    EmptyInterval(f64, f64),
    #[error("uniform grid step must be positive (got {0})")]
    BadStep(f64),
    #[error("q-scale ratio must lie in (0, 1) (got {0})")]
    BadRatio(f64),
    #[error("Cantor depth must be nonnegative (got {0})")]
    BadDepth(i64),
    #[error("generator would produce {0} components, above the limit of {1}")]
    TooLarge(u64, u64),
}

/// A maximal connected piece of the time scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Interval { lo: f64, hi: f64 },
    Point(f64),
}

impl Component {
    pub fn lo(&self) -> f64 {
        match *self {
            Component::Interval { lo, .. } => lo,
            Component::Point(p) => p,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            Component::Interval { hi, .. } => hi,
            Component::Point(p) => p,
        }
    }

    fn spanning(lo: f64, hi: f64) -> Self {
        if lo == hi {
            Component::Point(lo)
        } else {
            Component::Interval { lo, hi }
        }
    }
}

/// Right/left density of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Scattered,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PointClass {
    pub right: Side,
    pub left: Side,
}

impl PointClass {
    pub fn is_isolated(&self) -> bool {
        self.right == Side::Scattered && self.left == Side::Scattered
    }

    pub fn is_dense(&self) -> bool {
        self.right == Side::Dense && self.left == Side::Dense
    }
}

/// A nonempty closed bounded subset of the real line, stored as sorted,
/// pairwise disjoint components separated by strictly positive gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScale {
    components: Arc<[Component]>,
}

impl TimeScale {
    /// Sorts and merges the given components. Touching or overlapping
    /// pieces are fused.
    pub fn new(components: impl IntoIterator<Item = Component>) -> Result<Self, TimeScaleError> {
        let mut raw: Vec<(f64, f64)> = Vec::new();
        for c in components {
            let (lo, hi) = (c.lo(), c.hi());
            if !lo.is_finite() || !hi.is_finite() {
                return Err(TimeScaleError::NonFinite);
            }
            if lo > hi {
                return Err(TimeScaleError::ReversedInterval(lo, hi));
            }
            raw.push((lo, hi));
        }
        if raw.is_empty() {
            return Err(TimeScaleError::Empty);
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        let components = merged.into_iter().map(|(lo, hi)| Component::spanning(lo, hi)).collect();
        Ok(TimeScale { components })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self, TimeScaleError> {
        Self::new([Component::Interval { lo, hi }])
    }

    pub fn points(points: impl IntoIterator<Item = f64>) -> Result<Self, TimeScaleError> {
        Self::new(points.into_iter().map(Component::Point))
    }

    /// `{start + k·step : k = 0, 1, ...} ∩ [start, stop]`.
    pub fn uniform(start: f64, stop: f64, step: f64) -> Result<Self, TimeScaleError> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(TimeScaleError::BadStep(step));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(TimeScaleError::NonFinite);
        }
        if stop < start {
            return Err(TimeScaleError::ReversedInterval(start, stop));
        }
        let count = ((stop - start) / step + 1e-9).floor() as u64;
        check_size(count + 1)?;
        Self::points((0..=count).map(|k| start + k as f64 * step))
    }

    /// `{q^k · s : k = 0..=k_max} ∪ {0}`.
    pub fn qscale(q: f64, s: f64, k_max: u32) -> Result<Self, TimeScaleError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(TimeScaleError::BadRatio(q));
        }
        if !s.is_finite() {
            return Err(TimeScaleError::NonFinite);
        }
        check_size(k_max as u64 + 2)?;
        Self::points((0..=k_max).map(|k| s * q.powi(k as i32)).chain([0.0]))
    }

    /// The `depth`-th stage of the middle-thirds construction on `[lo, hi]`.
    pub fn cantor(lo: f64, hi: f64, depth: i64) -> Result<Self, TimeScaleError> {
        if depth < 0 {
            return Err(TimeScaleError::BadDepth(depth));
        }
        if depth > 20 {
            return Err(TimeScaleError::TooLarge(1u64 << depth.min(63), 1 << 20));
        }
        if !(lo < hi) {
            return Err(TimeScaleError::ReversedInterval(lo, hi));
        }
        let mut pieces = vec![(lo, hi)];
        for _ in 0..depth {
            pieces = pieces
                .into_iter()
                .flat_map(|(a, b)| {
                    let third = (b - a) / 3.0;
                    [(a, a + third), (b - third, b)]
                })
                .collect();
        }
        Self::new(pieces.into_iter().map(|(lo, hi)| Component::Interval { lo, hi }))
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn min(&self) -> f64 {
        self.components[0].lo()
    }

    pub fn max(&self) -> f64 {
        self.components[self.components.len() - 1].hi()
    }

    /// Index of the component containing `t`.
    pub fn component_of(&self, t: f64) -> Option<usize> {
        let idx = self.components.partition_point(|c| c.lo() <= t);
        if idx == 0 {
            return None;
        }
        (t <= self.components[idx - 1].hi()).then_some(idx - 1)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.component_of(t).is_some()
    }

    fn locate(&self, t: f64) -> Result<usize, TimeScaleError> {
        self.component_of(t).ok_or(TimeScaleError::NotInScale(t))
    }

    /// Forward jump `σ(t) = inf{s ∈ T : s > t}`, with `σ(max T) = max T`.
    pub fn sigma(&self, t: f64) -> Result<f64, TimeScaleError> {
        let k = self.locate(t)?;
        let c = self.components[k];
        if t < c.hi() {
            return Ok(t);
        }
        Ok(self.components.get(k + 1).map_or(t, Component::lo))
    }

    /// Backward jump `ρ(t) = sup{s ∈ T : s < t}`, with `ρ(min T) = min T`.
    pub fn rho(&self, t: f64) -> Result<f64, TimeScaleError> {
        let k = self.locate(t)?;
        let c = self.components[k];
        if t > c.lo() {
            return Ok(t);
        }
        Ok(if k == 0 { t } else { self.components[k - 1].hi() })
    }

    /// Forward graininess `μ(t) = σ(t) - t`.
    pub fn mu(&self, t: f64) -> Result<f64, TimeScaleError> {
        Ok(self.sigma(t)? - t)
    }

    /// Backward graininess `η(t) = t - ρ(t)`.
    pub fn eta(&self, t: f64) -> Result<f64, TimeScaleError> {
        Ok(t - self.rho(t)?)
    }

    pub fn classify(&self, t: f64) -> Result<PointClass, TimeScaleError> {
        let side = |scattered| if scattered { Side::Scattered } else { Side::Dense };
        Ok(PointClass { right: side(self.sigma(t)? > t), left: side(self.rho(t)? < t) })
    }

    /// The closed interval `[a, b]_T`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<TsInterval, TimeScaleError> {
        TsInterval::new(self.clone(), a, b)
    }

    pub fn whole(&self) -> Result<TsInterval, TimeScaleError> {
        self.restrict(self.min(), self.max())
    }
}

fn check_size(n: u64) -> Result<(), TimeScaleError> {
    const LIMIT: u64 = 1 << 22;
    if n > LIMIT {
        return Err(TimeScaleError::TooLarge(n, LIMIT));
    }
    Ok(())
}

impl fmt::Display for TimeScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.components.iter().enumerate() {
            if k > 0 {
                write!(f, " ∪ ")?;
            }
            match c {
                Component::Interval { lo, hi } => write!(f, "[{lo}, {hi}]")?,
                Component::Point(p) => write!(f, "{{{p}}}")?,
            }
        }
        Ok(())
    }
}

/// One piece of `[a, b]_T`: a continuum segment or a lone point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Segment { lo: f64, hi: f64 },
    Point(f64),
}

/// `[a, b]_T = {t ∈ T : a <= t <= b}` with `a < b` both in `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TsInterval {
    scale: TimeScale,
    a: f64,
    b: f64,
}

impl TsInterval {
    pub fn new(scale: TimeScale, a: f64, b: f64) -> Result<Self, TimeScaleError> {
        if !(a < b) {
            return Err(TimeScaleError::EmptyInterval(a, b));
        }
        for t in [a, b] {
            if !scale.contains(t) {
                return Err(TimeScaleError::NotInScale(t));
            }
        }
        Ok(TsInterval { scale, a, b })
    }

    pub fn scale(&self) -> &TimeScale {
        &self.scale
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, t: f64) -> bool {
        self.a <= t && t <= self.b && self.scale.contains(t)
    }

    /// Ordered decomposition of `[a, b]_T` into segments and points.
    pub fn points_in(&self) -> Vec<Piece> {
        let comps = self.scale.components();
        let first = self.scale.component_of(self.a).expect("a in scale");
        let last = self.scale.component_of(self.b).expect("b in scale");
        comps[first..=last]
            .iter()
            .map(|c| {
                let lo = c.lo().max(self.a);
                let hi = c.hi().min(self.b);
                if lo == hi {
                    Piece::Point(lo)
                } else {
                    Piece::Segment { lo, hi }
                }
            })
            .collect()
    }

    /// The point of `[a, b]_T` nearest to `x`, the lower one on ties.
    pub fn nearest(&self, x: f64) -> f64 {
        let mut best = self.a;
        let mut dist = f64::INFINITY;
        for piece in self.points_in() {
            let cand = match piece {
                Piece::Point(p) => p,
                Piece::Segment { lo, hi } => x.clamp(lo, hi),
            };
            if (cand - x).abs() < dist {
                dist = (cand - x).abs();
                best = cand;
            }
        }
        best
    }

    /// True when every point of `[a, b)_T` is right-scattered.
    pub fn is_purely_scattered(&self) -> bool {
        self.points_in().iter().all(|p| matches!(p, Piece::Point(_)))
    }

    /// Sub-interval `[lo, hi]_T` of this interval.
    pub fn sub(&self, lo: f64, hi: f64) -> Result<TsInterval, TimeScaleError> {
        if lo < self.a || hi > self.b {
            return Err(TimeScaleError::EmptyInterval(lo, hi));
        }
        TsInterval::new(self.scale.clone(), lo, hi)
    }
}

/// JSON description of a time scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeScaleSpec {
    Components { components: Vec<ComponentSpec> },
    Generator { generator: GeneratorSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ComponentSpec {
    Interval([f64; 2]),
    Point(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    Uniform { start: f64, stop: f64, step: f64 },
    Qscale { q: f64, s: f64, k: u32 },
    Cantor {
        depth: i64,
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
    },
}

impl TimeScaleSpec {
    pub fn build(&self) -> Result<TimeScale, TimeScaleError> {
        match self {
            TimeScaleSpec::Components { components } => TimeScale::new(components.iter().map(|c| match *c {
                ComponentSpec::Interval([lo, hi]) => Component::Interval { lo, hi },
                ComponentSpec::Point(p) => Component::Point(p),
            })),
            TimeScaleSpec::Generator { generator } => match *generator {
                GeneratorSpec::Uniform { start, stop, step } => TimeScale::uniform(start, stop, step),
                GeneratorSpec::Qscale { q, s, k } => TimeScale::qscale(q, s, k),
                GeneratorSpec::Cantor { depth, lo, hi } => {
                    TimeScale::cantor(lo.unwrap_or(0.0), hi.unwrap_or(1.0), depth)
                }
            },
        }
    }
}
