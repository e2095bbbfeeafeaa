//! Tagged partitions of `[a, b]_T`, the δ-fineness predicate and
//! constructive fine-partition generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauge::DeltaGauge;
use crate::timescale::{Piece, TimeScale, TsInterval};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("point {0} of the partition is not in the time scale")]
    NotInScale(f64),
    #[error("item {index} is malformed: {reason}")]
    Malformed { index: usize, reason: &'static str },
    #[error("items {0} and {1} overlap or are out of order")]
    Overlap(usize, usize),
    #[error("item {0} lies outside [a, b]")]
    OutsideInterval(usize),
    #[error("gauge is degenerate at {at}: {reason}")]
    InvalidGauge { at: f64, reason: &'static str },
    #[error("partition would exceed {0} items")]
    TooManyItems(usize),
}

/// `([left, right]_T, tag)` with `left < right` and `tag ∈ [left, right]_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggedInterval {
    pub left: f64,
    pub right: f64,
    pub tag: f64,
}

impl TaggedInterval {
    pub fn new(left: f64, right: f64, tag: f64) -> Self {
        TaggedInterval { left, right, tag }
    }

    pub fn length(&self) -> f64 {
        self.right - self.left
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coverage {
    /// `t_0 = a < t_1 < … < t_n = b` with consecutive items sharing endpoints.
    Full,
    /// Items lie in `[a, b]_T` but do not chain from `a` to `b`.
    Partial,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaggedPartition {
    pub items: Vec<TaggedInterval>,
}

impl TaggedPartition {
    pub fn new(items: Vec<TaggedInterval>) -> Self {
        TaggedPartition { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn tags(&self) -> impl Iterator<Item = f64> + '_ {
        self.items.iter().map(|it| it.tag)
    }

    /// Validates the items against `interval` and reports whether they
    /// form a full or a partial partition.
    pub fn classify(&self, interval: &TsInterval) -> Result<Coverage, PartitionError> {
        let scale = interval.scale();
        for (k, it) in self.items.iter().enumerate() {
            for p in [it.left, it.right, it.tag] {
                if !scale.contains(p) {
                    return Err(PartitionError::NotInScale(p));
                }
            }
            if !(it.left < it.right) {
                return Err(PartitionError::Malformed { index: k, reason: "left >= right" });
            }
            if !(it.left <= it.tag && it.tag <= it.right) {
                return Err(PartitionError::Malformed { index: k, reason: "tag outside its interval" });
            }
            if it.left < interval.a() || it.right > interval.b() {
                return Err(PartitionError::OutsideInterval(k));
            }
        }
        let mut chained = true;
        for (k, w) in self.items.windows(2).enumerate() {
            if w[0].right > w[1].left {
                return Err(PartitionError::Overlap(k, k + 1));
            }
            chained &= w[0].right == w[1].left;
        }
        let full = chained
            && self.items.first().is_some_and(|f| f.left == interval.a())
            && self.items.last().is_some_and(|l| l.right == interval.b());
        Ok(if full { Coverage::Full } else { Coverage::Partial })
    }

    pub fn to_json(&self, coverage: Coverage) -> serde_json::Value {
        serde_json::json!({ "items": self.items, "full": coverage == Coverage::Full })
    }
}

/// Outcome of the fineness predicate with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinenessReport {
    pub fine: bool,
    /// Items accepted only because their right endpoint is `σ(tag)`.
    pub sigma_clause_uses: usize,
    pub first_violation: Option<usize>,
}

fn item_fineness(g: &DeltaGauge, scale: &TimeScale, it: &TaggedInterval) -> (bool, bool) {
    let xi = it.tag;
    let left_ok = it.left == xi || xi - g.left(xi) < it.left;
    if !left_ok || !(it.left <= xi && xi <= it.right) {
        return (false, false);
    }
    if it.right == xi || it.right < xi + g.right(xi) {
        return (true, false);
    }
    let sigma_ok = scale.sigma(xi).is_ok_and(|s| s == it.right);
    (sigma_ok, sigma_ok)
}

/// Evaluates δ-fineness of every item:
/// `ξ - δ_L(ξ) < t_{i-1} <= ξ <= t_i` and (`t_i < ξ + δ_R(ξ)` or `t_i = σ(ξ)`).
/// An endpoint equal to the tag is always inside the tag's neighbourhood.
pub fn fineness_report(p: &TaggedPartition, g: &DeltaGauge) -> Result<FinenessReport, PartitionError> {
    let scale = g.scale();
    let mut report = FinenessReport { fine: true, sigma_clause_uses: 0, first_violation: None };
    for (k, it) in p.items.iter().enumerate() {
        for q in [it.left, it.right, it.tag] {
            if !g.domain().contains(q) {
                return Err(PartitionError::NotInScale(q));
            }
        }
        let (ok, via_sigma) = item_fineness(g, scale, it);
        report.sigma_clause_uses += via_sigma as usize;
        if !ok && report.fine {
            report.fine = false;
            report.first_violation = Some(k);
        }
    }
    Ok(report)
}

pub fn is_fine(p: &TaggedPartition, g: &DeltaGauge) -> Result<bool, PartitionError> {
    Ok(fineness_report(p, g)?.fine)
}

/// Step fraction used by the partitioners.
pub const DEFAULT_SAFETY: f64 = 0.5;

/// Upper bound on generated partition sizes.
pub const MAX_ITEMS: usize = 50_000_000;

const MAX_BISECTION_DEPTH: u32 = 64;

struct Sweep<'g, F> {
    gauge: &'g DeltaGauge,
    safety: f64,
    rng: Option<ChaCha8Rng>,
    sink: F,
    count: usize,
}

impl<F: FnMut(TaggedInterval)> Sweep<'_, F> {
    fn emit(&mut self, left: f64, right: f64, tag: f64) -> Result<(), PartitionError> {
        self.count += 1;
        if self.count > MAX_ITEMS {
            return Err(PartitionError::TooManyItems(MAX_ITEMS));
        }
        (self.sink)(TaggedInterval { left, right, tag });
        Ok(())
    }

    /// Step fraction in `(0, safety]` and a right-tag coin, from one draw.
    fn draw(&mut self) -> (f64, bool) {
        match &mut self.rng {
            Some(rng) => {
                let x = rng.next_u64();
                // 1 - U with U uniform on the 53-bit grid in [0, 1).
                let u = (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                (self.safety * (1.0 - u), x & 1 == 1)
            }
            None => (self.safety, false),
        }
    }

    fn run(&mut self) -> Result<(), PartitionError> {
        let domain = self.gauge.domain().clone();
        let scale = domain.scale();
        let b = domain.b();
        let breaks = self.gauge.breakpoints();
        for piece in domain.points_in() {
            match piece {
                Piece::Point(p) => {
                    if p < b {
                        let next = scale.sigma(p).expect("point in scale");
                        self.emit(p, next, p)?;
                    }
                }
                Piece::Segment { lo, hi } => {
                    let mut start = lo;
                    for &c in breaks.iter().filter(|&&c| lo < c && c <= hi) {
                        self.fill(start, c, true)?;
                        start = c;
                    }
                    if start < hi {
                        self.fill(start, hi, false)?;
                    }
                    if hi < b {
                        let next = scale.sigma(hi).expect("segment end in scale");
                        self.emit(hi, next, hi)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Covers the continuum stretch `[lo, end]` left to right. When
    /// `close_at_end` is set the final item is tagged at `end`.
    fn fill(&mut self, lo: f64, end: f64, close_at_end: bool) -> Result<(), PartitionError> {
        let g = self.gauge;
        let fixed = if close_at_end { None } else { g.constant_on(lo, end) };
        let close_radius = if close_at_end { g.left(end) } else { 0.0 };
        let stall = (end - lo) * 1e-13;
        let mut t = lo;
        while t < end {
            if close_at_end && end - close_radius < t {
                return self.emit(t, end, end);
            }
            let r = match fixed {
                Some(radii) => radii.right,
                None => g.right(t),
            };
            if !(r > 0.0) {
                return Err(PartitionError::InvalidGauge { at: t, reason: "zero right radius at a right-dense point" });
            }
            let (fraction, right_tag) = self.draw();
            let step = fraction * r;
            let next = if t + step >= end { end } else { t + step };
            if next - t <= stall {
                return self.bisect(t, end, 0);
            }
            let mut tag = t;
            if right_tag {
                let left = fixed.map_or_else(|| g.left(next), |radii| radii.left);
                if next - left < t {
                    tag = next;
                }
            }
            self.emit(t, next, tag)?;
            t = next;
        }
        Ok(())
    }

    /// Cousin-style bisection over a continuum stretch, used when the sweep
    /// stops making progress.
    fn bisect(&mut self, lo: f64, hi: f64, depth: u32) -> Result<(), PartitionError> {
        let g = self.gauge;
        if hi < lo + g.right(lo) {
            return self.emit(lo, hi, lo);
        }
        if hi - g.left(hi) < lo {
            return self.emit(lo, hi, hi);
        }
        let mid = 0.5 * (lo + hi);
        if mid - g.left(mid) < lo && hi < mid + g.right(mid) {
            return self.emit(lo, hi, mid);
        }
        if depth >= MAX_BISECTION_DEPTH || !(lo < mid && mid < hi) {
            return Err(PartitionError::InvalidGauge { at: mid, reason: "no fine cover found by bisection" });
        }
        self.bisect(lo, mid, depth + 1)?;
        self.bisect(mid, hi, depth + 1)
    }
}

/// Streams the items of the deterministic left-tagged fine partition.
pub fn cousin_for_each(
    g: &DeltaGauge,
    safety: f64,
    sink: impl FnMut(TaggedInterval),
) -> Result<usize, PartitionError> {
    let mut sweep = Sweep { gauge: g, safety, rng: None, sink, count: 0 };
    sweep.run()?;
    Ok(sweep.count)
}

/// Streams the items of a randomized fine partition drawn from `rng`.
pub fn random_for_each(
    g: &DeltaGauge,
    safety: f64,
    rng: ChaCha8Rng,
    sink: impl FnMut(TaggedInterval),
) -> Result<usize, PartitionError> {
    let mut sweep = Sweep { gauge: g, safety, rng: Some(rng), sink, count: 0 };
    sweep.run()?;
    Ok(sweep.count)
}

/// Deterministic full δ-fine partition of the gauge's interval.
///
/// Sweeps from `a`: a right-scattered point `t` yields `([t, σ(t)], t)`; on
/// continuum stretches each step advances by `safety · δ_R(t)`, clipped to
/// the stretch.
pub fn cousin_partition(g: &DeltaGauge) -> Result<TaggedPartition, PartitionError> {
    cousin_partition_with(g, DEFAULT_SAFETY)
}

pub fn cousin_partition_with(g: &DeltaGauge, safety: f64) -> Result<TaggedPartition, PartitionError> {
    let mut items = Vec::new();
    cousin_for_each(g, safety, |it| items.push(it))?;
    Ok(TaggedPartition { items })
}

/// Random stream for `(seed, level, index)`.
pub fn stream_rng(seed: u64, level: u32, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((level as u64) << 32) | index as u64);
    rng
}

/// Randomized full δ-fine partition: step fractions uniform in `(0, safety]`
/// and tags drawn from the two endpoints on continuum stretches.
pub fn random_fine_partition(g: &DeltaGauge, seed: u64) -> Result<TaggedPartition, PartitionError> {
    let mut items = Vec::new();
    random_for_each(g, DEFAULT_SAFETY, stream_rng(seed, 0, 0), |it| items.push(it))?;
    Ok(TaggedPartition { items })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{stitch_gauges, Radii};
    use crate::timescale::Component;

    fn unit() -> TsInterval {
        TimeScale::interval(0.0, 1.0).unwrap().whole().unwrap()
    }

    fn hybrid() -> TimeScale {
        TimeScale::new([
            Component::Interval { lo: 0.0, hi: 1.0 },
            Component::Point(1.5),
            Component::Interval { lo: 2.0, hi: 3.0 },
        ])
        .unwrap()
    }

    fn items(v: &[(f64, f64, f64)]) -> TaggedPartition {
        TaggedPartition::new(v.iter().map(|&(l, r, t)| TaggedInterval::new(l, r, t)).collect())
    }

    #[test]
    fn fineness_examples() {
        let p = items(&[(0.0, 0.5, 0.0), (0.5, 1.0, 1.0)]);
        let g = DeltaGauge::constant(unit(), 0.6, 0.6).unwrap();
        assert!(is_fine(&p, &g).unwrap());
        let g = DeltaGauge::constant(unit(), 0.5, 0.5).unwrap();
        assert!(!is_fine(&p, &g).unwrap());

        let grid = TimeScale::uniform(0.0, 2.0, 1.0).unwrap().whole().unwrap();
        let g = DeltaGauge::constant(grid, 0.1, 0.0).unwrap();
        let p = items(&[(0.0, 1.0, 0.0), (1.0, 2.0, 1.0)]);
        let rep = fineness_report(&p, &g).unwrap();
        assert!(rep.fine);
        assert_eq!(rep.sigma_clause_uses, 2);
        assert_eq!(cousin_partition(&g).unwrap(), p);
    }

    #[test]
    fn fineness_rejects_foreign_points() {
        let g = DeltaGauge::constant(unit(), 0.6, 0.6).unwrap();
        let p = items(&[(0.0, 1.5, 0.0)]);
        assert_eq!(is_fine(&p, &g), Err(PartitionError::NotInScale(1.5)));
    }

    #[test]
    fn cousin_on_unit_interval() {
        let g = DeltaGauge::constant(unit(), 0.3, 0.3).unwrap();
        let p = cousin_partition(&g).unwrap();
        assert_eq!(p.len(), 7);
        for it in &p.items[..6] {
            assert!((it.length() - 0.15).abs() < 1e-12);
        }
        assert!((p.items[6].length() - 0.1).abs() < 1e-12);
        assert!(p.tags().zip(&p.items).all(|(t, it)| t == it.left));
        assert!(is_fine(&p, &g).unwrap());
        assert_eq!(p.classify(&unit()).unwrap(), Coverage::Full);
    }

    #[test]
    fn cousin_on_hybrid_crosses_gaps() {
        let i = hybrid().whole().unwrap();
        let g = DeltaGauge::constant(i.clone(), 0.4, 0.4).unwrap();
        let p = cousin_partition(&g).unwrap();
        assert!(is_fine(&p, &g).unwrap());
        assert_eq!(p.classify(&i).unwrap(), Coverage::Full);
        assert!(p.items.contains(&TaggedInterval::new(1.0, 1.5, 1.0)));
        assert!(p.items.contains(&TaggedInterval::new(1.5, 2.0, 1.5)));
    }

    #[test]
    fn degenerate_gauge_is_reported() {
        let g = DeltaGauge::constant(unit(), 0.3, 0.0).unwrap();
        assert!(matches!(cousin_partition(&g), Err(PartitionError::InvalidGauge { .. })));
    }

    #[test]
    fn zero_left_radius_at_a() {
        let g = DeltaGauge::constant(unit(), 0.3, 0.3).unwrap().with_boundary(Some(0.0), None).unwrap();
        let p = cousin_partition(&g).unwrap();
        assert!(is_fine(&p, &g).unwrap());
    }

    #[test]
    fn random_partitions() {
        let g = DeltaGauge::constant(unit(), 0.3, 0.3).unwrap();
        let p = random_fine_partition(&g, 1).unwrap();
        assert!(is_fine(&p, &g).unwrap());
        assert_eq!(p.classify(&unit()).unwrap(), Coverage::Full);
        assert_eq!(p, random_fine_partition(&g, 1).unwrap());
        assert_ne!(p, random_fine_partition(&g, 2).unwrap());

        let grid = TimeScale::uniform(0.0, 5.0, 1.0).unwrap().whole().unwrap();
        let g = DeltaGauge::constant(grid, 2.0, 2.0).unwrap();
        let forced = cousin_partition(&g).unwrap();
        for seed in 0..5 {
            assert_eq!(random_fine_partition(&g, seed).unwrap(), forced);
        }
    }

    #[test]
    fn stitched_partitions_split_at_c() {
        for (scale, c) in [(TimeScale::interval(0.0, 3.0).unwrap(), 1.5), (hybrid(), 1.5), (hybrid(), 2.0)] {
            let g1 = DeltaGauge::constant(scale.restrict(0.0, c).unwrap(), 0.4, 0.4).unwrap();
            let g2 = DeltaGauge::constant(scale.restrict(c, 3.0).unwrap(), 0.4, 0.4).unwrap();
            let g = stitch_gauges(&g1, &g2).unwrap();
            let rho = scale.rho(c).unwrap();
            let mut parts = vec![cousin_partition(&g).unwrap()];
            parts.extend((0..50).map(|s| random_fine_partition(&g, s).unwrap()));
            for p in parts {
                assert!(is_fine(&p, &g).unwrap());
                assert_eq!(p.classify(g.domain()).unwrap(), Coverage::Full);
                let splits = p.items.iter().any(|it| it.tag == c || (rho < c && it.tag == rho && it.right == c));
                assert!(splits, "no split at {c}: {p:?}");
            }
        }
    }

    #[test]
    fn custom_gauge_falls_back_to_bisection() {
        // δ_R shrinks to zero at 0.5, so the left-tagged sweep stalls there.
        let g = DeltaGauge::from_fn(unit(), |x| {
            let d = (x - 0.5).abs();
            Radii::new(0.1, if d == 0.0 { 0.1 } else { d.min(0.1) })
        });
        let p = cousin_partition(&g).unwrap();
        assert!(is_fine(&p, &g).unwrap());
        assert_eq!(p.classify(&unit()).unwrap(), Coverage::Full);
    }

    #[test]
    fn classify_partial_and_errors() {
        let i = unit();
        assert_eq!(items(&[(0.0, 0.5, 0.0)]).classify(&i).unwrap(), Coverage::Partial);
        assert_eq!(items(&[(0.0, 0.5, 0.0), (0.6, 1.0, 1.0)]).classify(&i).unwrap(), Coverage::Partial);
        assert_eq!(TaggedPartition::default().classify(&i).unwrap(), Coverage::Partial);
        assert!(matches!(
            items(&[(0.0, 0.5, 0.7)]).classify(&i),
            Err(PartitionError::Malformed { index: 0, .. })
        ));
        assert_eq!(
            items(&[(0.0, 0.6, 0.0), (0.5, 1.0, 1.0)]).classify(&i),
            Err(PartitionError::Overlap(0, 1))
        );
        let sub = i.sub(0.2, 0.8).unwrap();
        assert_eq!(items(&[(0.0, 0.5, 0.0)]).classify(&sub), Err(PartitionError::OutsideInterval(0)));
    }

    #[test]
    fn partition_json_shape() {
        let p = items(&[(0.0, 0.5, 0.0)]);
        assert_eq!(
            p.to_json(Coverage::Partial).to_string(),
            r#"{"full":false,"items":[{"left":0.0,"right":0.5,"tag":0.0}]}"#
        );
    }
}
