use serde::Serialize;

use super::engine::{hk_integrate, EngineConfig, IntegralResult};
use super::integrand::{Integrand, LinearCombination, SharedIntegrand};
use super::sum::{riemann_sum, ExactSum};
use super::IntegrateError;
use crate::gauge::{stitch_gauges, DeltaGauge};
use crate::partition::{random_for_each, stream_rng, TaggedInterval, TaggedPartition};
use crate::riesz::LatticeElement;
use crate::timescale::TsInterval;

/// Random stitched-gauge partitions examined by [`split_integrate`].
pub const STITCH_SAMPLES: usize = 10;

fn require_converged(r: &IntegralResult, interval: &TsInterval) -> Result<(), IntegrateError> {
    if r.converged {
        Ok(())
    } else {
        Err(IntegrateError::NotConverged { lo: interval.a(), hi: interval.b(), spread: r.spread.sup_norm() })
    }
}

fn add3(x: &LatticeElement, y: &LatticeElement, z: &LatticeElement) -> Result<LatticeElement, IntegrateError> {
    Ok(x.add(y)?.add(z)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearityReport {
    pub alpha: f64,
    pub beta: f64,
    /// `∫(αf + βg)`.
    pub combined: LatticeElement,
    /// `α∫f + β∫g`.
    pub separate: LatticeElement,
    pub defect: LatticeElement,
    /// Sum of the three spreads.
    pub spreads: LatticeElement,
    /// `spreads + tol`.
    pub bound: LatticeElement,
    pub pass: bool,
}

/// Integrates `f`, `g` and `αf + βg` independently and compares.
pub fn check_linearity(
    f: &SharedIntegrand,
    g: &SharedIntegrand,
    alpha: f64,
    beta: f64,
    interval: &TsInterval,
    tol: &LatticeElement,
    cfg: &EngineConfig,
) -> Result<LinearityReport, IntegrateError> {
    let h = LinearCombination::new(vec![(alpha, f.clone()), (beta, g.clone())])
        .ok_or_else(|| IntegrateError::Config("f and g live in different spaces".into()))?;
    let rf = hk_integrate(f.as_ref(), interval, tol, cfg)?;
    let rg = hk_integrate(g.as_ref(), interval, tol, cfg)?;
    let rh = hk_integrate(&h, interval, tol, cfg)?;
    for r in [&rf, &rg, &rh] {
        require_converged(r, interval)?;
    }
    let separate = rf.value.scale(alpha).add(&rg.value.scale(beta))?;
    let defect = rh.value.sub(&separate)?.abs();
    let spreads = add3(&rf.spread, &rg.spread, &rh.spread)?;
    let bound = spreads.add(tol)?;
    let pass = defect.le(&bound)?;
    Ok(LinearityReport { alpha, beta, combined: rh.value, separate, defect, spreads, bound, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StitchCheck {
    pub samples: usize,
    /// Partitions containing tag `c`, or tag `ρ(c)` on an item ending at `c`.
    pub split_at_c: usize,
}

impl StitchCheck {
    pub fn all_split(&self) -> bool {
        self.samples == self.split_at_c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub c: f64,
    pub whole: LatticeElement,
    pub left: LatticeElement,
    pub right: LatticeElement,
    pub defect: LatticeElement,
    /// Sum of the three spreads.
    pub spreads: LatticeElement,
    /// `spreads + tol`.
    pub bound: LatticeElement,
    pub stitch: StitchCheck,
    pub pass: bool,
}

fn splits_at(items: &[TaggedInterval], c: f64, rho_c: f64) -> bool {
    items.iter().any(|it| it.tag == c || (rho_c < c && it.tag == rho_c && it.right == c))
}

fn stitch_check(interval: &TsInterval, c: f64, cfg: &EngineConfig) -> Result<StitchCheck, IntegrateError> {
    let h = cfg.initial_scale.unwrap_or_else(|| interval.length());
    let g1 = DeltaGauge::constant(interval.sub(interval.a(), c)?, h, h)?;
    let g2 = DeltaGauge::constant(interval.sub(c, interval.b())?, h, h)?;
    let g = stitch_gauges(&g1, &g2)?;
    let rho_c = interval.scale().rho(c)?;
    let mut split_at_c = 0;
    for idx in 0..STITCH_SAMPLES {
        let mut items = Vec::new();
        let rng = stream_rng(cfg.seed ^ c.to_bits(), u32::MAX, idx as u32);
        random_for_each(&g, cfg.safety, rng, |it| items.push(it))?;
        if splits_at(&items, c, rho_c) {
            split_at_c += 1;
        }
    }
    Ok(StitchCheck { samples: STITCH_SAMPLES, split_at_c })
}

/// Compares `∫_a^b` with `∫_a^c + ∫_c^b` and samples partitions of the
/// stitched gauge at level 0.
pub fn split_integrate<F: Integrand + ?Sized>(
    f: &F,
    interval: &TsInterval,
    c: f64,
    tol: &LatticeElement,
    cfg: &EngineConfig,
) -> Result<SplitReport, IntegrateError> {
    if !(interval.a() < c && c < interval.b()) {
        return Err(IntegrateError::Config(format!("split point {c} is not interior")));
    }
    let lower = interval.sub(interval.a(), c)?;
    let upper = interval.sub(c, interval.b())?;
    let whole = hk_integrate(f, interval, tol, cfg)?;
    let left = hk_integrate(f, &lower, tol, cfg)?;
    let right = hk_integrate(f, &upper, tol, cfg)?;
    require_converged(&whole, interval)?;
    require_converged(&left, &lower)?;
    require_converged(&right, &upper)?;
    let defect = whole.value.sub(&left.value.add(&right.value)?)?.abs();
    let spreads = add3(&whole.spread, &left.spread, &right.spread)?;
    let bound = spreads.add(tol)?;
    let stitch = stitch_check(interval, c, cfg)?;
    let pass = defect.le(&bound)? && stitch.all_split();
    Ok(SplitReport {
        c,
        whole: whole.value,
        left: left.value,
        right: right.value,
        defect,
        spreads,
        bound,
        stitch,
        pass,
    })
}

/// `|S(f, D′) − Σ_k ∫_{t_{k−1}}^{t_k} f Δt|` for a partial partition `D′`,
/// each piece integrated by the engine at `tol / |D′|`.
pub fn saks_henstock_residual<F: Integrand + ?Sized>(
    f: &F,
    interval: &TsInterval,
    partial: &TaggedPartition,
    tol: &LatticeElement,
    cfg: &EngineConfig,
) -> Result<LatticeElement, IntegrateError> {
    let sum = riemann_sum(f, partial, interval)?;
    if partial.is_empty() {
        return Ok(sum);
    }
    let piece_tol = tol.scale(1.0 / partial.len() as f64);
    let mut acc = ExactSum::new(f.space().dim());
    for item in &partial.items {
        let sub = interval.sub(item.left, item.right)?;
        let r = hk_integrate(f, &sub, &piece_tol, cfg)?;
        require_converged(&r, &sub)?;
        acc.add_value(r.value.coords());
    }
    let integrals = LatticeElement::new(f.space(), &acc.values())?;
    Ok(sum.sub(&integrals)?.abs())
}
