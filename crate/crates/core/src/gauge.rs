//! Δ-gauges: pairs of left/right neighbourhood radii on `[a, b]_T`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timescale::{TimeScale, TimeScaleError, TsInterval};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaugeError {
    #[error("gauge radius must be finite and {expected} (got {value})")]
    BadRadius { value: f64, expected: &'static str },
    #[error("expected {expected} per-component radii, got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error("gauges live on different intervals")]
    DomainMismatch,
    #[error("stitch point {0} must be an interior point of the time scale interval")]
    BadStitchPoint(f64),
    #[error(transparent)]
    TimeScale(#[from] TimeScaleError),
}

/// Left and right radii at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radii {
    #[serde(rename = "dL")]
    pub left: f64,
    #[serde(rename = "dR")]
    pub right: f64,
}

impl Radii {
    pub const fn new(left: f64, right: f64) -> Self {
        Radii { left, right }
    }

    fn validate(&self) -> Result<(), GaugeError> {
        if !(self.left.is_finite() && self.left > 0.0) {
            return Err(GaugeError::BadRadius { value: self.left, expected: "> 0" });
        }
        // The μ-clamp may still make a zero right radius admissible.
        if !(self.right.is_finite() && self.right >= 0.0) {
            return Err(GaugeError::BadRadius { value: self.right, expected: ">= 0" });
        }
        Ok(())
    }
}

type RadiusFn = Arc<dyn Fn(f64) -> Radii + Send + Sync>;

#[derive(Clone)]
enum GaugeKind {
    /// One constant pair per time-scale component, with optional overrides
    /// of `δ_L(a)` and `δ_R(b)`.
    Piecewise { radii: Arc<[Radii]>, left_at_a: Option<f64>, right_at_b: Option<f64> },
    Min(Box<DeltaGauge>, Box<DeltaGauge>),
    Stitched { first: Box<DeltaGauge>, second: Box<DeltaGauge>, c: f64 },
    Custom(RadiusFn),
}

/// A Δ-gauge on `[a, b]_T`.
///
/// The right radius is clamped from below by the graininess on `[a, b)_T`,
/// so `δ_R(ξ) >= μ(ξ)` holds for every gauge regardless of how it was built.
#[derive(Clone)]
pub struct DeltaGauge {
    domain: TsInterval,
    kind: GaugeKind,
}

impl fmt::Debug for DeltaGauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            GaugeKind::Piecewise { .. } => "piecewise",
            GaugeKind::Min(..) => "min",
            GaugeKind::Stitched { .. } => "stitched",
            GaugeKind::Custom(_) => "custom",
        };
        f.debug_struct("DeltaGauge")
            .field("a", &self.domain.a())
            .field("b", &self.domain.b())
            .field("kind", &kind)
            .finish()
    }
}

impl DeltaGauge {
    /// `δ_L ≡ left`, `δ_R ≡ right` before clamping.
    pub fn constant(domain: TsInterval, left: f64, right: f64) -> Result<Self, GaugeError> {
        let n = domain.scale().components().len();
        Self::per_component(domain, vec![Radii::new(left, right); n])
    }

    pub fn per_component(domain: TsInterval, radii: Vec<Radii>) -> Result<Self, GaugeError> {
        let expected = domain.scale().components().len();
        if radii.len() != expected {
            return Err(GaugeError::ComponentCount { expected, got: radii.len() });
        }
        for r in &radii {
            r.validate()?;
        }
        Ok(DeltaGauge {
            domain,
            kind: GaugeKind::Piecewise { radii: radii.into(), left_at_a: None, right_at_b: None },
        })
    }

    /// Overrides `δ_L(a)` and/or `δ_R(b)`; both may be zero.
    pub fn with_boundary(mut self, left_at_a: Option<f64>, right_at_b: Option<f64>) -> Result<Self, GaugeError> {
        for v in left_at_a.iter().chain(&right_at_b) {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(GaugeError::BadRadius { value: *v, expected: ">= 0" });
            }
        }
        match &mut self.kind {
            GaugeKind::Piecewise { left_at_a: la, right_at_b: rb, .. } => {
                *la = left_at_a.or(*la);
                *rb = right_at_b.or(*rb);
                Ok(self)
            }
            _ => Err(GaugeError::BadRadius { value: f64::NAN, expected: "a piecewise gauge" }),
        }
    }

    /// Gauge given by an arbitrary radius function. Positivity is checked
    /// where the partitioners evaluate it.
    pub fn from_fn(domain: TsInterval, f: impl Fn(f64) -> Radii + Send + Sync + 'static) -> Self {
        DeltaGauge { domain, kind: GaugeKind::Custom(Arc::new(f)) }
    }

    pub fn domain(&self) -> &TsInterval {
        &self.domain
    }

    pub fn scale(&self) -> &TimeScale {
        self.domain.scale()
    }

    fn mu(&self, xi: f64) -> f64 {
        self.scale().mu(xi).unwrap_or(0.0)
    }

    fn raw(&self, xi: f64) -> Radii {
        match &self.kind {
            GaugeKind::Piecewise { radii, left_at_a, right_at_b } => {
                let k = self.scale().component_of(xi).expect("gauge evaluated off the time scale");
                let mut r = radii[k];
                if xi == self.domain.a() {
                    r.left = left_at_a.unwrap_or(r.left);
                }
                if xi == self.domain.b() {
                    r.right = right_at_b.unwrap_or(r.right);
                }
                r
            }
            GaugeKind::Min(g1, g2) => {
                Radii::new(g1.left(xi).min(g2.left(xi)), g1.right(xi).min(g2.right(xi)))
            }
            GaugeKind::Stitched { first, second, c } => stitched_radii(first, second, *c, xi),
            GaugeKind::Custom(f) => f(xi),
        }
    }

    /// `δ_L(ξ)`.
    pub fn left(&self, xi: f64) -> f64 {
        self.raw(xi).left
    }

    /// `δ_R(ξ)`, clamped to at least `μ(ξ)` on `[a, b)_T`.
    pub fn right(&self, xi: f64) -> f64 {
        let r = self.raw(xi).right;
        if xi < self.domain.b() {
            r.max(self.mu(xi))
        } else {
            r
        }
    }

    pub fn radii(&self, xi: f64) -> Radii {
        Radii::new(self.left(xi), self.right(xi))
    }

    /// Checks the positivity conditions of a Δ-gauge at `ξ`.
    pub fn is_valid_at(&self, xi: f64) -> bool {
        let Radii { left, right } = self.radii(xi);
        let (a, b) = (self.domain.a(), self.domain.b());
        let left_ok = if xi > a { left > 0.0 } else { left >= 0.0 };
        let right_ok = if xi < b { right > 0.0 } else { right >= 0.0 };
        left_ok && right_ok && right >= if xi < b { self.mu(xi) } else { 0.0 }
    }

    /// Points at which the gauge forces a tag (stitch points).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.kind {
            GaugeKind::Piecewise { .. } | GaugeKind::Custom(_) => Vec::new(),
            GaugeKind::Min(g1, g2) => {
                let mut v = g1.breakpoints();
                v.extend(g2.breakpoints());
                v
            }
            GaugeKind::Stitched { first, second, c } => {
                let mut v = first.breakpoints();
                v.push(*c);
                v.extend(second.breakpoints());
                v
            }
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Constant radii valid on the continuum stretch `[lo, hi)` when the
    /// gauge is piecewise constant there.
    pub(crate) fn constant_on(&self, lo: f64, hi: f64) -> Option<Radii> {
        match &self.kind {
            GaugeKind::Piecewise { radii, left_at_a, right_at_b } => {
                let k = self.scale().component_of(lo)?;
                if self.scale().components()[k].hi() < hi {
                    return None;
                }
                let touches_a = lo <= self.domain.a() && left_at_a.is_some();
                let touches_b = hi >= self.domain.b() && right_at_b.is_some();
                (!touches_a && !touches_b).then_some(radii[k])
            }
            _ => None,
        }
    }
}

fn stitched_radii(first: &DeltaGauge, second: &DeltaGauge, c: f64, xi: f64) -> Radii {
    let scale = first.scale();
    let left = if xi < c {
        first.left(xi)
    } else if xi == c {
        let rho = scale.rho(c).expect("c in scale");
        if rho == c {
            first.left(c)
        } else {
            first.left(c).min(0.5 * (c - rho))
        }
    } else {
        second.left(xi).min(0.5 * (xi - c))
    };
    let right = if xi < c {
        let mu = scale.mu(xi).expect("xi in scale");
        first.right(xi).min(mu.max(0.5 * (c - xi)))
    } else {
        second.right(xi)
    };
    Radii::new(left, right)
}

/// Pointwise minimum `min{δ₁, δ₂}`, re-clamped to `δ_R >= μ`.
pub fn gauge_min(g1: &DeltaGauge, g2: &DeltaGauge) -> Result<DeltaGauge, GaugeError> {
    if g1.domain != g2.domain {
        return Err(GaugeError::DomainMismatch);
    }
    Ok(DeltaGauge { domain: g1.domain.clone(), kind: GaugeKind::Min(Box::new(g1.clone()), Box::new(g2.clone())) })
}

/// Joins a gauge on `[a, c]_T` and one on `[c, b]_T` into a gauge on
/// `[a, b]_T` whose fine partitions all split at `c`: either `c` is a tag,
/// or `ρ(c) < c` is a tag whose interval ends at `c`.
pub fn stitch_gauges(g1: &DeltaGauge, g2: &DeltaGauge) -> Result<DeltaGauge, GaugeError> {
    let (left, right) = (g1.domain(), g2.domain());
    if left.scale() != right.scale() {
        return Err(GaugeError::DomainMismatch);
    }
    let c = left.b();
    if right.a() != c {
        return Err(GaugeError::BadStitchPoint(c));
    }
    let domain = TsInterval::new(left.scale().clone(), left.a(), right.b())?;
    Ok(DeltaGauge {
        domain,
        kind: GaugeKind::Stitched { first: Box::new(g1.clone()), second: Box::new(g2.clone()), c },
    })
}

/// JSON description of a piecewise-constant gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GaugeSpec {
    PerComponent {
        components: Vec<Radii>,
        #[serde(default, rename = "dL_at_a")]
        left_at_a: Option<f64>,
        #[serde(default, rename = "dR_at_b")]
        right_at_b: Option<f64>,
    },
    Constant {
        #[serde(rename = "dL")]
        left: f64,
        #[serde(rename = "dR")]
        right: f64,
        #[serde(default, rename = "dL_at_a")]
        left_at_a: Option<f64>,
        #[serde(default, rename = "dR_at_b")]
        right_at_b: Option<f64>,
    },
}

impl GaugeSpec {
    pub fn build(&self, domain: TsInterval) -> Result<DeltaGauge, GaugeError> {
        match self {
            GaugeSpec::PerComponent { components, left_at_a, right_at_b } => {
                DeltaGauge::per_component(domain, components.clone())?.with_boundary(*left_at_a, *right_at_b)
            }
            GaugeSpec::Constant { left, right, left_at_a, right_at_b } => {
                DeltaGauge::constant(domain, *left, *right)?.with_boundary(*left_at_a, *right_at_b)
            }
        }
    }
}
