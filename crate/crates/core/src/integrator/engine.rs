use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::integrand::Integrand;
use super::sum::SumSink;
use super::IntegrateError;
use crate::gauge::DeltaGauge;
use crate::partition::{
    cousin_for_each, random_for_each, stream_rng, PartitionError, TaggedPartition, DEFAULT_SAFETY,
};
use crate::riesz::{LatticeElement, Regulator};
use crate::timescale::{Piece, TsInterval};

/// Knobs of the refinement loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub seed: u64,
    /// Random partitions per level, in addition to the Cousin partition.
    pub samples_per_level: usize,
    pub max_levels: u32,
    /// Gauge radius at level 0; defaults to `b − a`.
    pub initial_scale: Option<f64>,
    pub safety: f64,
    /// A level whose projected item count (all partitions together) exceeds
    /// this is not started.
    pub level_budget: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: 0,
            samples_per_level: 8,
            max_levels: 40,
            initial_scale: None,
            safety: DEFAULT_SAFETY,
            level_budget: 1 << 26,
        }
    }
}

impl EngineConfig {
    pub fn with_seed(seed: u64) -> Self {
        EngineConfig { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<(), IntegrateError> {
        if self.samples_per_level < 2 {
            return Err(IntegrateError::Config("samples_per_level must be at least 2".into()));
        }
        if self.max_levels == 0 {
            return Err(IntegrateError::Config("max_levels must be at least 1".into()));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(IntegrateError::Config(format!("safety factor {} is not in (0, 1)", self.safety)));
        }
        if let Some(h) = self.initial_scale {
            if !(h.is_finite() && h > 0.0) {
                return Err(IntegrateError::Config(format!("initial scale {h} is not positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralResult {
    /// Midpoint of the extreme sampled sums at the reported level.
    pub value: LatticeElement,
    /// `⋁ sums − ⋀ sums` at the reported level.
    pub spread: LatticeElement,
    pub levels_used: u32,
    /// Index of the level whose sums are reported.
    pub level: u32,
    pub partitions_evaluated: usize,
    pub items_evaluated: u64,
    pub converged: bool,
    /// `a_{1,j} = 2·spread·(½)^j`.
    pub fitted_regulator: Regulator,
    pub level_spreads: Vec<LatticeElement>,
}

impl IntegralResult {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "value": self.value,
            "spread": self.spread,
            "converged": self.converged,
            "levels": self.levels_used,
            "level": self.level,
            "partitions": self.partitions_evaluated,
            "regulator": self.fitted_regulator,
        })
    }
}

/// The constant gauge `h₀·2^{−k}` used at level `k`.
pub fn level_gauge(interval: &TsInterval, cfg: &EngineConfig, level: u32) -> Result<DeltaGauge, IntegrateError> {
    let h0 = cfg.initial_scale.unwrap_or_else(|| interval.length());
    let h = h0 * 0.5f64.powi(level as i32);
    if !(h > 0.0) {
        return Err(IntegrateError::Config(format!("gauge radius underflows at level {level}")));
    }
    Ok(DeltaGauge::constant(interval.clone(), h, h)?)
}

/// The partitions sampled at `level`: index 0 is the Cousin partition, the
/// rest are drawn from streams `(seed, level, index)`.
pub fn level_partitions(
    interval: &TsInterval,
    cfg: &EngineConfig,
    level: u32,
) -> Result<Vec<TaggedPartition>, IntegrateError> {
    cfg.validate()?;
    let g = level_gauge(interval, cfg, level)?;
    (0..=cfg.samples_per_level)
        .map(|idx| {
            let mut items = Vec::new();
            sweep(&g, cfg, level, idx, |it| items.push(it))?;
            Ok(TaggedPartition::new(items))
        })
        .collect()
}

fn sweep(
    g: &DeltaGauge,
    cfg: &EngineConfig,
    level: u32,
    idx: usize,
    sink: impl FnMut(crate::partition::TaggedInterval),
) -> Result<usize, PartitionError> {
    if idx == 0 {
        cousin_for_each(g, cfg.safety, sink)
    } else {
        random_for_each(g, cfg.safety, stream_rng(cfg.seed, level, idx as u32), sink)
    }
}

struct Level {
    sup: Vec<f64>,
    inf: Vec<f64>,
    items: usize,
}

fn run_level<F: Integrand + ?Sized>(
    f: &F,
    interval: &TsInterval,
    cfg: &EngineConfig,
    level: u32,
) -> Result<Level, IntegrateError> {
    let g = level_gauge(interval, cfg, level)?;
    let outcomes: Vec<Result<(Vec<f64>, usize), IntegrateError>> = (0..=cfg.samples_per_level)
        .into_par_iter()
        .map(|idx| {
            let mut sink = SumSink::new(f);
            let count = sweep(&g, cfg, level, idx, |it| sink.push(it))?;
            Ok((sink.finish()?, count))
        })
        .collect();
    let mut sup = vec![f64::NEG_INFINITY; f.space().dim()];
    let mut inf = vec![f64::INFINITY; f.space().dim()];
    let mut items = 0;
    for outcome in outcomes {
        let (sums, count) = outcome?;
        items += count;
        for (k, s) in sums.into_iter().enumerate() {
            sup[k] = sup[k].max(s);
            inf[k] = inf[k].min(s);
        }
    }
    Ok(Level { sup, inf, items })
}

fn probe_points(interval: &TsInterval) -> Vec<f64> {
    let mut pts = vec![interval.a(), interval.b()];
    for piece in interval.points_in() {
        match piece {
            Piece::Point(p) => pts.push(p),
            Piece::Segment { lo, hi } => pts.extend([lo, 0.5 * (lo + hi), hi]),
        }
        if pts.len() > 16 {
            break;
        }
    }
    pts
}

/// Evaluates the integrand twice at a few points and rejects it if the
/// results differ bitwise.
fn purity_probe<F: Integrand + ?Sized>(f: &F, interval: &TsInterval) -> Result<(), IntegrateError> {
    let dim = f.space().dim();
    let (mut x, mut y) = (vec![0.0; dim], vec![0.0; dim]);
    for t in probe_points(interval) {
        f.eval_into(t, &mut x)?;
        f.eval_into(t, &mut y)?;
        if x.iter().zip(&y).any(|(p, q)| p.to_bits() != q.to_bits()) {
            return Err(IntegrateError::Impure(t));
        }
    }
    Ok(())
}

/// HK Δ-integral of `f` over `interval` by gauge refinement.
///
/// Level `k` uses the constant gauge `h₀·2^{−k}` (clamped to the
/// graininess), sums `f` over the Cousin partition and `m` random fine
/// partitions, and stops once `⋁ sums − ⋀ sums ≤ tol` componentwise. When no
/// level converges the level with the smallest spread is reported with
/// `converged = false`.
pub fn hk_integrate<F: Integrand + ?Sized>(
    f: &F,
    interval: &TsInterval,
    tol: &LatticeElement,
    cfg: &EngineConfig,
) -> Result<IntegralResult, IntegrateError> {
    cfg.validate()?;
    let space = f.space();
    if tol.space() != space {
        return Err(IntegrateError::Config(format!(
            "tolerance has dimension {}, integrand has {}",
            tol.dim(),
            space.dim()
        )));
    }
    if !(tol.is_finite() && tol.is_nonnegative()) {
        return Err(IntegrateError::Config(format!("tolerance {tol} must be finite and nonnegative")));
    }
    purity_probe(f, interval)?;

    let mut best: Option<(u32, Level, f64)> = None;
    let mut level_spreads = Vec::new();
    let mut partitions = 0;
    let mut items_total = 0u64;
    let mut converged = false;
    let mut prev_items = 0usize;
    for level in 0..cfg.max_levels {
        if level > 0 && prev_items.saturating_mul(2) > cfg.level_budget {
            break;
        }
        let lv = run_level(f, interval, cfg, level)?;
        partitions += cfg.samples_per_level + 1;
        items_total += lv.items as u64;
        prev_items = lv.items;
        let spread: Vec<f64> = lv.sup.iter().zip(&lv.inf).map(|(s, i)| s - i).collect();
        let norm = spread.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let done = spread.iter().zip(tol.coords()).all(|(s, t)| s <= t);
        level_spreads.push(LatticeElement::new(space, &spread)?);
        if best.as_ref().is_none_or(|(_, _, n)| norm < *n) || done {
            best = Some((level, lv, norm));
        }
        if done {
            converged = true;
            break;
        }
    }
    let (level, lv, _) = best.expect("at least one level runs");
    let value: Vec<f64> = lv.sup.iter().zip(&lv.inf).map(|(s, i)| 0.5 * (s + i)).collect();
    let spread: Vec<f64> = lv.sup.iter().zip(&lv.inf).map(|(s, i)| s - i).collect();
    let spread = LatticeElement::new(space, &spread)?;
    Ok(IntegralResult {
        value: LatticeElement::new(space, &value)?,
        fitted_regulator: Regulator::single(spread.scale(2.0))?,
        spread,
        levels_used: level_spreads.len() as u32,
        level,
        partitions_evaluated: partitions,
        items_evaluated: items_total,
        converged,
        level_spreads,
    })
}
