//! Experiments for sequences of integrands: convergence with a common
//! regulating sequence, uniform integrability, and the uniform and monotone
//! convergence theorems.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::integrator::{
    hk_integrate, level_partitions, riemann_sum, EngineConfig, IntegrandError, IntegrateError, Integrand,
    SharedIntegrand,
};
use crate::partition::cousin_for_each;
use crate::riesz::{fremlin_check, fremlin_combine, DSequence, EvalMap, FremlinCheck, LatticeElement, LatticeSpace, Regulator, RieszError};
use crate::timescale::TsInterval;

/// Default search bound for `p(t)`.
pub const DEFAULT_N_MAX: u32 = 10_000;
/// Quasi-random points added to the partition tags by [`sample_points`].
pub const QUASI_RANDOM_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvergenceError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("no witness p <= {n_max} at t = {t} for φ = {phi}")]
    WitnessNotFound { t: f64, phi: EvalMap, n_max: u32 },
    #[error("{0}")]
    NoCommonLevel(Box<NoCommonLevel>),
    #[error("sequence is not monotone at t = {t} between n = {n} and the next term")]
    Monotonicity { t: f64, n: u32 },
    #[error("bound violated at t = {t}: {message}")]
    Bounds { t: f64, message: String },
    #[error("invalid experiment: {0}")]
    Config(String),
}

/// The uniform integrability check found no gauge level that works for
/// every `n` at once.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("no common gauge level among the first {levels} for bound {bound} at φ = {phi} (n = {n}, residual {residual})")]
pub struct NoCommonLevel {
    pub levels: u32,
    pub phi: EvalMap,
    pub bound: LatticeElement,
    pub n: u32,
    pub residual: LatticeElement,
}

impl From<IntegrandError> for ConvergenceError {
    fn from(e: IntegrandError) -> Self {
        ConvergenceError::Integrate(e.into())
    }
}

impl From<RieszError> for ConvergenceError {
    fn from(e: RieszError) -> Self {
        ConvergenceError::Integrate(e.into())
    }
}

impl fmt::Display for EvalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for v in self.values() {
            write!(f, "{v}, ")?;
        }
        write!(f, "{}, …)", self.tail_value())
    }
}

type Generator = dyn Fn(u32) -> SharedIntegrand + Send + Sync;

/// `f_1, f_2, …` given by a generator, together with the limit `f`.
#[derive(Clone)]
pub struct FunctionSequence {
    pub name: String,
    space: LatticeSpace,
    gen: Arc<Generator>,
    limit: SharedIntegrand,
}

impl fmt::Debug for FunctionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSequence").field("name", &self.name).field("space", &self.space).finish()
    }
}

impl FunctionSequence {
    pub fn new(
        name: impl Into<String>,
        limit: SharedIntegrand,
        gen: impl Fn(u32) -> SharedIntegrand + Send + Sync + 'static,
    ) -> Self {
        FunctionSequence { name: name.into(), space: limit.space(), gen: Arc::new(gen), limit }
    }

    pub fn space(&self) -> LatticeSpace {
        self.space
    }

    pub fn limit(&self) -> &SharedIntegrand {
        &self.limit
    }

    /// `f_n` for `n >= 1`.
    pub fn term(&self, n: u32) -> Result<SharedIntegrand, ConvergenceError> {
        if n == 0 {
            return Err(ConvergenceError::Config("sequence indices start at 1".into()));
        }
        let f = (self.gen)(n);
        if f.space() != self.space {
            return Err(ConvergenceError::Config(format!(
                "term {n} of {} has dimension {}, the limit has {}",
                self.name,
                f.space().dim(),
                self.space.dim()
            )));
        }
        Ok(f)
    }
}

/// Tags of the level-0 Cousin partition plus [`QUASI_RANDOM_POINTS`]
/// golden-ratio points snapped onto `[a, b]_T`, sorted and deduplicated.
pub fn sample_points(interval: &TsInterval, cfg: &EngineConfig) -> Result<Vec<f64>, ConvergenceError> {
    let g = crate::integrator::level_gauge(interval, cfg, 0)?;
    let mut pts = Vec::new();
    cousin_for_each(&g, cfg.safety, |it| pts.push(it.tag)).map_err(IntegrateError::from)?;
    pts.push(interval.b());
    let alpha = 0.5 * (5f64.sqrt() - 1.0);
    for k in 0..QUASI_RANDOM_POINTS {
        let x = (0.5 + k as f64 * alpha).fract();
        pts.push(interval.nearest(interval.a() + x * interval.length()));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(pts)
}

/// The constant maps `1..=8` followed by eight random maps with entries in
/// `1..=8`.
pub fn sample_phis(seed: u64) -> Vec<EvalMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut draw = || (rng.next_u64() % 8) as u32 + 1;
    let mut phis: Vec<EvalMap> = (1..=8).map(EvalMap::constant).collect();
    for _ in 0..8 {
        let values = (0..8).map(|_| draw()).collect();
        phis.push(EvalMap::new(values, draw()).expect("entries are positive"));
    }
    phis
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PTable {
    pub phi: EvalMap,
    pub bound: LatticeElement,
    /// `(t, p(t))` per sampled point.
    pub p: Vec<(f64, u32)>,
}

impl PTable {
    pub fn max_p(&self) -> u32 {
        self.p.iter().map(|&(_, p)| p).max().unwrap_or(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WcrsWitness {
    pub regulator: Regulator,
    pub n_max: u32,
    pub tables: Vec<PTable>,
}

impl WcrsWitness {
    pub fn phi_samples(&self) -> impl Iterator<Item = &EvalMap> {
        self.tables.iter().map(|t| &t.phi)
    }
}

/// `|f_n(t) − f(t)|` for `n = 1..=n_max` at each point.
fn deviations(seq: &FunctionSequence, points: &[f64], n_max: u32) -> Result<Vec<Vec<Vec<f64>>>, ConvergenceError> {
    let terms: Vec<SharedIntegrand> = (1..=n_max).map(|n| seq.term(n)).collect::<Result<_, _>>()?;
    let dim = seq.space.dim();
    points
        .par_iter()
        .map(|&t| {
            let mut limit = vec![0.0; dim];
            seq.limit.eval_into(t, &mut limit)?;
            let mut buf = vec![0.0; dim];
            terms
                .iter()
                .map(|f| {
                    f.eval_into(t, &mut buf)?;
                    Ok(buf.iter().zip(&limit).map(|(x, y)| (x - y).abs()).collect())
                })
                .collect()
        })
        .collect()
}

/// Per sampled `(t, φ)`, the least `p` such that
/// `|f_n(t) − f(t)| < ⋁_i a_{i,φ(i)}` for every `n ∈ [p, n_max]`.
pub fn wcrs_witness(
    seq: &FunctionSequence,
    reg: &Regulator,
    points: &[f64],
    phis: &[EvalMap],
    n_max: u32,
) -> Result<WcrsWitness, ConvergenceError> {
    if n_max == 0 {
        return Err(ConvergenceError::Config("n_max must be positive".into()));
    }
    if reg.space() != seq.space {
        return Err(RieszError::SpaceMismatch { left: seq.space, right: reg.space() }.into());
    }
    let dev = deviations(seq, points, n_max)?;
    let mut tables = Vec::with_capacity(phis.len());
    for phi in phis {
        let bound = reg.eval(phi);
        let mut p = Vec::with_capacity(points.len());
        for (&t, rows) in points.iter().zip(&dev) {
            let below = |d: &Vec<f64>| d.iter().zip(bound.coords()).all(|(x, b)| x < b);
            // Scan down from n_max; binary search needs monotone deviations.
            let good = rows.iter().rev().take_while(|d| below(d)).count() as u32;
            if good == 0 {
                return Err(ConvergenceError::WitnessNotFound { t, phi: phi.clone(), n_max });
            }
            p.push((t, n_max - good + 1));
        }
        tables.push(PTable { phi: phi.clone(), bound, p });
    }
    Ok(WcrsWitness { regulator: reg.clone(), n_max, tables })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformConfig {
    pub n_set: Vec<u32>,
    /// Levels `0..gauge_levels` are searched for a common gauge.
    pub gauge_levels: u32,
    /// Engine tolerance for the reference integrals `∫ f_n`.
    pub tol: LatticeElement,
    pub phis: Vec<EvalMap>,
    /// `samples_per_level` is the number `m` of random partitions per level.
    pub engine: EngineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermIntegral {
    pub n: u32,
    pub value: LatticeElement,
    pub spread: LatticeElement,
    pub regulator: Regulator,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiLevel {
    pub phi: EvalMap,
    pub bound: LatticeElement,
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformReport {
    pub integrals: Vec<TermIntegral>,
    /// First level at which every `φ` and every `n` pass together.
    pub common_level: u32,
    /// `max_D |S(f_n, D) − ∫ f_n|` at `common_level`, by `n`.
    pub max_residuals: Vec<(u32, LatticeElement)>,
    pub per_phi: Vec<PhiLevel>,
}

fn integrate_terms(
    seq: &FunctionSequence,
    interval: &TsInterval,
    n_set: &[u32],
    tol: &LatticeElement,
    cfg: &EngineConfig,
) -> Result<Vec<(SharedIntegrand, TermIntegral)>, ConvergenceError> {
    n_set
        .par_iter()
        .map(|&n| {
            let f = seq.term(n)?;
            let r = hk_integrate(f.as_ref(), interval, tol, cfg)?;
            if !r.converged {
                return Err(IntegrateError::NotConverged {
                    lo: interval.a(),
                    hi: interval.b(),
                    spread: r.spread.sup_norm(),
                }
                .into());
            }
            let t = TermIntegral { n, value: r.value, spread: r.spread, regulator: r.fitted_regulator };
            Ok((f, t))
        })
        .collect()
}

/// `max_D |S(f, D) − value|` over the partitions sampled at `level`.
fn level_residuals(
    terms: &[(SharedIntegrand, TermIntegral)],
    interval: &TsInterval,
    cfg: &EngineConfig,
    level: u32,
) -> Result<Vec<LatticeElement>, ConvergenceError> {
    let parts = level_partitions(interval, cfg, level)?;
    terms
        .par_iter()
        .map(|(f, ti)| {
            let mut worst = LatticeElement::zero(ti.value.space());
            for d in &parts {
                let s = riemann_sum(f.as_ref(), d, interval)?;
                worst = worst.join(&s.sub(&ti.value)?.abs())?;
            }
            Ok(worst)
        })
        .collect()
}

/// Searches for one gauge level at which `|S(f_n, D) − ∫ f_n| <= ⋁_i b_{i,φ(i)}`
/// holds for every `n` in the set and every sampled partition, per sampled `φ`.
pub fn uniform_integrability_check(
    seq: &FunctionSequence,
    interval: &TsInterval,
    reg: &Regulator,
    cfg: &UniformConfig,
) -> Result<UniformReport, ConvergenceError> {
    if cfg.n_set.is_empty() || cfg.phis.is_empty() || cfg.gauge_levels == 0 {
        return Err(ConvergenceError::Config("n_set, phis and gauge_levels must be nonempty".into()));
    }
    let terms = integrate_terms(seq, interval, &cfg.n_set, &cfg.tol, &cfg.engine)?;
    let bounds: Vec<LatticeElement> = cfg.phis.iter().map(|phi| reg.eval(phi)).collect();
    let mut found: Vec<Option<u32>> = vec![None; bounds.len()];
    let mut last = Vec::new();
    for level in 0..cfg.gauge_levels {
        let residuals = level_residuals(&terms, interval, &cfg.engine, level)?;
        let mut all = true;
        for (slot, bound) in found.iter_mut().zip(&bounds) {
            let ok = residuals.iter().map(|r| r.le(bound)).collect::<Result<Vec<_>, _>>()?.into_iter().all(|b| b);
            if ok {
                slot.get_or_insert(level);
            } else {
                all = false;
            }
        }
        if all {
            let integrals: Vec<TermIntegral> = terms.into_iter().map(|(_, t)| t).collect();
            let max_residuals = integrals.iter().map(|t| t.n).zip(residuals).collect();
            let per_phi = cfg
                .phis
                .iter()
                .zip(bounds)
                .zip(found)
                .map(|((phi, bound), level)| PhiLevel { phi: phi.clone(), bound, level: level.expect("all passed") })
                .collect();
            return Ok(UniformReport { integrals, common_level: level, max_residuals, per_phi });
        }
        last = residuals;
    }
    // Report the tightest failing bound and the worst term against it.
    let k = (0..bounds.len())
        .filter(|&k| found[k].is_none())
        .min_by(|&x, &y| bounds[x].sup_norm().total_cmp(&bounds[y].sup_norm()))
        .expect("some φ failed");
    let (worst, residual) = last
        .iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| x.sup_norm().total_cmp(&y.sup_norm()))
        .expect("n_set is nonempty");
    Err(ConvergenceError::NoCommonLevel(Box::new(NoCommonLevel {
        levels: cfg.gauge_levels,
        phi: cfg.phis[k].clone(),
        bound: bounds[k].clone(),
        n: cfg.n_set[worst],
        residual: residual.clone(),
    })))
}

/// `(b − a) · max_t |f_n(t) − f(t)|` over the sampled points, componentwise.
fn sampled_distance(
    f: &dyn Integrand,
    limit: &dyn Integrand,
    points: &[f64],
    length: f64,
) -> Result<LatticeElement, ConvergenceError> {
    let dim = f.space().dim();
    let mut worst = vec![0.0f64; dim];
    let (mut x, mut y) = (vec![0.0; dim], vec![0.0; dim]);
    for &t in points {
        f.eval_into(t, &mut x)?;
        limit.eval_into(t, &mut y)?;
        for k in 0..dim {
            worst[k] = worst[k].max((x[k] - y[k]).abs());
        }
    }
    let worst: Vec<f64> = worst.iter().map(|w| w * length).collect();
    Ok(LatticeElement::new(f.space(), &worst)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UctRow {
    pub n: u32,
    pub integral: LatticeElement,
    pub spread: LatticeElement,
    /// `|∫ f_n − ∫ f|`.
    pub gap: LatticeElement,
    /// `(b − a) · sup |f_n − f|` over the sampled points.
    pub eps: LatticeElement,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UctReport {
    pub sequence: String,
    pub limit: LatticeElement,
    pub limit_spread: LatticeElement,
    pub witness_max_p: Vec<u32>,
    pub common_level: u32,
    pub rows: Vec<UctRow>,
    pub pass: bool,
}

/// Runs the uniform convergence theorem on `seq`: a w.c.r.s. witness, a
/// common gauge level, then `|∫ f_n − ∫ f| <= ε_n + spreads + tol` per `n`.
pub fn uct_experiment(
    seq: &FunctionSequence,
    interval: &TsInterval,
    wcrs_reg: &Regulator,
    uniform_reg: &Regulator,
    cfg: &UniformConfig,
) -> Result<UctReport, ConvergenceError> {
    let points = sample_points(interval, &cfg.engine)?;
    let witness = wcrs_witness(seq, wcrs_reg, &points, &cfg.phis, DEFAULT_N_MAX)?;
    let uniform = uniform_integrability_check(seq, interval, uniform_reg, cfg)?;
    let lim = hk_integrate(seq.limit.as_ref(), interval, &cfg.tol, &cfg.engine)?;
    if !lim.converged {
        return Err(IntegrateError::NotConverged { lo: interval.a(), hi: interval.b(), spread: lim.spread.sup_norm() }.into());
    }
    let mut rows = Vec::with_capacity(uniform.integrals.len());
    for ti in &uniform.integrals {
        let f = seq.term(ti.n)?;
        let eps = sampled_distance(f.as_ref(), seq.limit.as_ref(), &points, interval.length())?;
        let gap = ti.value.sub(&lim.value)?.abs();
        let bound = eps.add(&ti.spread)?.add(&lim.spread)?.add(&cfg.tol)?;
        let ok = gap.le(&bound)?;
        rows.push(UctRow { n: ti.n, integral: ti.value.clone(), spread: ti.spread.clone(), gap, eps, ok });
    }
    let pass = rows.iter().all(|r| r.ok);
    Ok(UctReport {
        sequence: seq.name.clone(),
        limit: lim.value,
        limit_spread: lim.spread,
        witness_max_p: witness.tables.iter().map(PTable::max_p).collect(),
        common_level: uniform.common_level,
        rows,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MctConfig {
    pub lower: LatticeElement,
    pub upper: LatticeElement,
    pub n_schedule: Vec<u32>,
    pub tol: LatticeElement,
    /// Partitions of levels `0..crude_levels` are checked against `x`.
    pub crude_levels: u32,
    pub phis: Vec<EvalMap>,
    pub engine: EngineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MctRow {
    pub n: u32,
    pub integral: LatticeElement,
    pub spread: LatticeElement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MctReport {
    pub sequence: String,
    pub rows: Vec<MctRow>,
    pub nondecreasing: bool,
    pub bounded_above: bool,
    pub limit: LatticeElement,
    pub limit_spread: LatticeElement,
    /// `|∫ f_{n_max} − ∫ f|`.
    pub limit_gap: LatticeElement,
    /// `(b − a) · sup |f_{n_max} − f|` + both spreads + `tol`.
    pub limit_bound: LatticeElement,
    /// `x = (b − a)(L − l)`.
    pub x: LatticeElement,
    pub crude_samples: usize,
    pub crude_violations: usize,
    pub fremlin: FremlinCheck,
    pub pass: bool,
}

fn check_le(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a <= b)
}

/// Spot-checks `l <= f_1 <= f_n <= f_{n'} <= f <= L` at the sampled points.
fn check_hypotheses(
    terms: &[(u32, SharedIntegrand)],
    limit: &dyn Integrand,
    points: &[f64],
    cfg: &MctConfig,
) -> Result<(), ConvergenceError> {
    let dim = limit.space().dim();
    let mut prev = vec![0.0; dim];
    let mut cur = vec![0.0; dim];
    let mut lim = vec![0.0; dim];
    for &t in points {
        limit.eval_into(t, &mut lim)?;
        if !check_le(&lim, cfg.upper.coords()) {
            return Err(ConvergenceError::Bounds { t, message: format!("f(t) exceeds L = {}", cfg.upper) });
        }
        for (k, (n, f)) in terms.iter().enumerate() {
            f.eval_into(t, &mut cur)?;
            if k == 0 && !check_le(cfg.lower.coords(), &cur) {
                return Err(ConvergenceError::Bounds { t, message: format!("f_{n}(t) is below l = {}", cfg.lower) });
            }
            if k > 0 && !check_le(&prev, &cur) {
                return Err(ConvergenceError::Monotonicity { t, n: terms[k - 1].0 });
            }
            if !check_le(&cur, &lim) {
                return Err(ConvergenceError::Monotonicity { t, n: *n });
            }
            std::mem::swap(&mut prev, &mut cur);
        }
    }
    Ok(())
}

/// Runs the monotone convergence theorem on `seq` over `cfg.n_schedule`.
pub fn mct_experiment(seq: &FunctionSequence, interval: &TsInterval, cfg: &MctConfig) -> Result<MctReport, ConvergenceError> {
    let mut schedule = cfg.n_schedule.clone();
    schedule.sort_unstable();
    schedule.dedup();
    if schedule.is_empty() {
        return Err(ConvergenceError::Config("empty n schedule".into()));
    }
    if !cfg.lower.le(&cfg.upper)? {
        return Err(ConvergenceError::Config(format!("lower bound {} exceeds upper bound {}", cfg.lower, cfg.upper)));
    }
    let points = sample_points(interval, &cfg.engine)?;
    let terms: Vec<(u32, SharedIntegrand)> =
        schedule.iter().map(|&n| Ok((n, seq.term(n)?))).collect::<Result<_, ConvergenceError>>()?;
    check_hypotheses(&terms, seq.limit.as_ref(), &points, cfg)?;

    let integrated = integrate_terms(seq, interval, &schedule, &cfg.tol, &cfg.engine)?;
    let lim = hk_integrate(seq.limit.as_ref(), interval, &cfg.tol, &cfg.engine)?;
    if !lim.converged {
        return Err(IntegrateError::NotConverged { lo: interval.a(), hi: interval.b(), spread: lim.spread.sup_norm() }.into());
    }
    let len = interval.length();
    let rows: Vec<MctRow> = integrated
        .iter()
        .map(|(_, t)| MctRow { n: t.n, integral: t.value.clone(), spread: t.spread.clone() })
        .collect();

    let mut nondecreasing = true;
    for w in rows.windows(2) {
        let slack = w[0].spread.add(&w[1].spread)?;
        nondecreasing &= w[0].integral.le(&w[1].integral.add(&slack)?)?;
    }
    let ceiling = cfg.upper.scale(len);
    let mut bounded_above = true;
    for r in &rows {
        bounded_above &= r.integral.le(&ceiling.add(&r.spread)?)?;
    }

    let (last_f, last) = integrated.last().expect("schedule is nonempty");
    let limit_gap = last.value.sub(&lim.value)?.abs();
    let tail = sampled_distance(last_f.as_ref(), seq.limit.as_ref(), &points, len)?;
    let limit_bound = tail.add(&last.spread)?.add(&lim.spread)?.add(&cfg.tol)?;

    let x = cfg.upper.sub(&cfg.lower)?.scale(len);
    let mut crude_samples = 0;
    let mut crude_violations = 0;
    for level in 0..cfg.crude_levels {
        let residuals = level_residuals_all(&integrated, interval, &cfg.engine, level)?;
        for r in residuals {
            crude_samples += 1;
            if !r.le(&x)? {
                crude_violations += 1;
            }
        }
    }

    let family: Vec<Regulator> = integrated.iter().map(|(_, t)| t.regulator.clone()).collect();
    let c = fremlin_combine(&family, &x)?;
    let fremlin = fremlin_check(&family, &x, &c, &cfg.phis)?;

    let pass = nondecreasing
        && bounded_above
        && limit_gap.le(&limit_bound)?
        && crude_violations == 0
        && fremlin.violations == 0;
    Ok(MctReport {
        sequence: seq.name.clone(),
        rows,
        nondecreasing,
        bounded_above,
        limit: lim.value,
        limit_spread: lim.spread,
        limit_gap,
        limit_bound,
        x,
        crude_samples,
        crude_violations,
        fremlin,
        pass,
    })
}

/// `|S(f_n, D) − ∫ f_n|` for every term and every partition sampled at `level`.
fn level_residuals_all(
    terms: &[(SharedIntegrand, TermIntegral)],
    interval: &TsInterval,
    cfg: &EngineConfig,
    level: u32,
) -> Result<Vec<LatticeElement>, ConvergenceError> {
    let parts = level_partitions(interval, cfg, level)?;
    let mut out = Vec::with_capacity(terms.len() * parts.len());
    for (f, ti) in terms {
        for d in &parts {
            out.push(riemann_sum(f.as_ref(), d, interval)?.sub(&ti.value)?.abs());
        }
    }
    Ok(out)
}
