//! Theorem suites over the built-in catalog, each producing a table of
//! named cases with a pass flag and a JSON detail record.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog::{self, CatalogSequence, Problem};
use crate::convergence::{
    mct_experiment, sample_phis, uct_experiment, uniform_integrability_check, ConvergenceError, MctConfig,
    UniformConfig,
};
use crate::integrator::{
    check_linearity, hk_integrate, level_partitions, saks_henstock_residual, split_integrate, EngineConfig,
    IntegrateError,
};
use crate::partition::{TaggedInterval, TaggedPartition};
use crate::riesz::{
    fremlin_combine, fremlin_lhs, regulator_combine, sigma_distributivity_check, DSequence, EvalMap, LatticeElement,
    LatticeSpace, Regulator,
};

pub const SUITES: [&str; 6] = ["linearity", "additivity", "saks-henstock", "uct", "mct", "riesz"];

/// Slack added to the sum of spreads in the linearity and additivity bounds.
pub const DEFECT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub engine: EngineConfig,
    pub linearity_cases: usize,
    pub additivity_cases: usize,
    pub saks_henstock_cases: usize,
    pub fremlin_samples: usize,
    /// Engine tolerance of the linearity, additivity and Saks–Henstock suites.
    pub tol: f64,
    /// Engine tolerance of the convergence theorem suites.
    pub sequence_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            engine: EngineConfig::default(),
            linearity_cases: 20,
            additivity_cases: 20,
            saks_henstock_cases: 100,
            fremlin_samples: 1000,
            tol: 1e-4,
            sequence_tol: 1e-5,
        }
    }
}

impl VerifyConfig {
    pub fn with_seed(seed: u64) -> Self {
        VerifyConfig { seed, engine: EngineConfig::with_seed(seed), ..Self::default() }
    }

    fn rng(&self, suite: &str) -> ChaCha8Rng {
        let salt = suite.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        ChaCha8Rng::seed_from_u64(self.seed ^ salt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case {
    pub case: String,
    pub pass: bool,
    pub detail: Value,
}

impl Case {
    fn new(case: impl Into<String>, pass: bool, detail: Value) -> Self {
        Case { case: case.into(), pass, detail }
    }

    fn error(case: impl Into<String>, e: impl std::fmt::Display) -> Self {
        Case::new(case, false, json!({ "error": e.to_string() }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub cases: Vec<Case>,
}

impl SuiteReport {
    fn new(suite: &str, cases: Vec<Case>) -> Self {
        SuiteReport { suite: suite.into(), pass: cases.iter().all(|c| c.pass), cases }
    }

    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| !c.pass).count()
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[(rng.next_u64() % items.len() as u64) as usize]
}

fn fast_problems() -> Vec<Problem> {
    catalog::problems().into_iter().filter(|p| !p.slow).collect()
}

fn splat(space: LatticeSpace, x: f64) -> LatticeElement {
    LatticeElement::splat(space, x)
}

/// Coefficients are multiples of 1/8 in `[-3, 3]`.
fn coefficient(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() % 49) as f64 / 8.0 - 3.0
}

pub fn linearity(cfg: &VerifyConfig) -> SuiteReport {
    let mut rng = cfg.rng("linearity");
    let problems = fast_problems();
    let mut cases = Vec::new();
    for k in 0..cfg.linearity_cases {
        let f = pick(&mut rng, &problems).clone();
        let partners: Vec<&Problem> = problems
            .iter()
            .filter(|g| g.domain == f.domain && g.integrand.space() == f.integrand.space())
            .collect();
        let g = (*pick(&mut rng, &partners)).clone();
        let (alpha, beta) = (coefficient(&mut rng), coefficient(&mut rng));
        let name = format!("{k:02} {alpha}·{} + {beta}·{}", f.name, g.name);
        let tol = splat(f.integrand.space(), cfg.tol);
        match check_linearity(&f.integrand, &g.integrand, alpha, beta, &f.interval, &tol, &cfg.engine) {
            Ok(r) => {
                let slack = splat(f.integrand.space(), DEFECT_SLACK);
                let bound = r.spreads.add(&slack).expect("same space");
                let exact = f.exact.scale(alpha).add(&g.exact.scale(beta)).expect("same space");
                let oracle_gap = r.combined.sub(&exact).expect("same space").abs();
                let pass = r.defect.le(&bound).unwrap_or(false) && oracle_gap.le(&r.bound).unwrap_or(false);
                cases.push(Case::new(
                    name,
                    pass,
                    json!({ "defect": r.defect, "bound": bound, "combined": r.combined, "exact": exact, "oracle_gap": oracle_gap }),
                ));
            }
            Err(e) => cases.push(Case::error(name, e)),
        }
    }
    SuiteReport::new("linearity", cases)
}

/// Split points: the left-scattered points of the hybrid scale and the grid,
/// then random points of random catalog problems.
fn split_cases(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Vec<(Problem, f64)> {
    let problems = fast_problems();
    let named = |n: &str| problems.iter().find(|p| p.name == n).cloned().expect("catalog problem");
    let mut out = vec![
        (named("identity-hybrid"), 1.5),
        (named("identity-hybrid"), 2.0),
        (named("square-grid"), 3.0),
    ];
    let cantor = named("abs-cantor");
    let c = cantor.interval.nearest(2.0 / 3.0);
    out.push((cantor, c));
    while out.len() < cfg.additivity_cases {
        let p = pick(rng, &problems).clone();
        let i = &p.interval;
        let c = i.nearest(i.a() + uniform(rng) * i.length());
        if i.a() < c && c < i.b() {
            out.push((p, c));
        }
    }
    out.truncate(cfg.additivity_cases);
    out
}

pub fn additivity(cfg: &VerifyConfig) -> SuiteReport {
    let mut rng = cfg.rng("additivity");
    let mut cases = Vec::new();
    for (k, (p, c)) in split_cases(cfg, &mut rng).into_iter().enumerate() {
        let name = format!("{k:02} {} at {c}", p.name);
        let space = p.integrand.space();
        let left_scattered = p.interval.scale().rho(c).map(|r| r < c).unwrap_or(false);
        match split_integrate(&p.integrand, &p.interval, c, &splat(space, cfg.tol), &cfg.engine) {
            Ok(r) => {
                let bound = r.spreads.add(&splat(space, DEFECT_SLACK)).expect("same space");
                let pass = r.defect.le(&bound).unwrap_or(false) && r.stitch.all_split();
                cases.push(Case::new(
                    name,
                    pass,
                    json!({
                        "left_scattered": left_scattered,
                        "whole": r.whole,
                        "left": r.left,
                        "right": r.right,
                        "defect": r.defect,
                        "bound": bound,
                        "stitch_samples": r.stitch.samples,
                        "split_at_c": r.stitch.split_at_c,
                    }),
                ));
            }
            Err(e) => cases.push(Case::error(name, e)),
        }
    }
    SuiteReport::new("additivity", cases)
}

/// Problems whose integrands are monotone on their interval.
const MONOTONE_PROBLEMS: [&str; 8] = [
    "identity-unit",
    "square-unit",
    "exp-unit",
    "sqrt-unit",
    "step-unit",
    "identity-hybrid",
    "square-grid",
    "identity-qscale",
];

struct Converged {
    problem: Problem,
    partitions: Vec<TaggedPartition>,
    bound: LatticeElement,
}

fn converge(p: Problem, cfg: &VerifyConfig) -> Result<Converged, IntegrateError> {
    let tol = splat(p.integrand.space(), cfg.tol);
    let r = hk_integrate(&p.integrand, &p.interval, &tol, &cfg.engine)?;
    if !r.converged {
        return Err(IntegrateError::NotConverged { lo: p.interval.a(), hi: p.interval.b(), spread: r.spread.sup_norm() });
    }
    let partitions = level_partitions(&p.interval, &cfg.engine, r.level)?;
    let bound = r.fitted_regulator.eval(&EvalMap::constant(1));
    Ok(Converged { problem: p, partitions, bound })
}

pub fn saks_henstock(cfg: &VerifyConfig) -> SuiteReport {
    let mut rng = cfg.rng("saks-henstock");
    let mut cases = Vec::new();
    let mut converged = Vec::new();
    for name in MONOTONE_PROBLEMS {
        let p = catalog::problem_named(name).expect("catalog problem");
        match converge(p, cfg) {
            Ok(c) => converged.push(c),
            Err(e) => cases.push(Case::error(format!("{name} full partition"), e)),
        }
    }
    if converged.is_empty() {
        return SuiteReport::new("saks-henstock", cases);
    }
    for k in 0..cfg.saks_henstock_cases {
        let c = pick(&mut rng, &converged);
        let full = pick(&mut rng, &c.partitions);
        let mut items: Vec<TaggedInterval> = full.items.iter().copied().filter(|_| rng.next_u64() & 1 == 1).collect();
        if items.is_empty() {
            items.push(*pick(&mut rng, &full.items));
        }
        let partial = TaggedPartition::new(items);
        let name = format!("{k:03} {} ({} of {} items)", c.problem.name, partial.len(), full.len());
        let tol = splat(c.problem.integrand.space(), cfg.tol);
        match saks_henstock_residual(&c.problem.integrand, &c.problem.interval, &partial, &tol, &cfg.engine) {
            Ok(res) => {
                let pass = res.le(&c.bound).unwrap_or(false);
                cases.push(Case::new(name, pass, json!({ "residual": res, "bound": c.bound })));
            }
            Err(e) => cases.push(Case::error(name, e)),
        }
    }
    SuiteReport::new("saks-henstock", cases)
}

/// `1, 2, 4, …, 1024`.
pub fn doubling_schedule() -> Vec<u32> {
    (0..=10).map(|k| 1 << k).collect()
}

pub fn uniform_config(cfg: &VerifyConfig, space: LatticeSpace) -> UniformConfig {
    UniformConfig {
        n_set: doubling_schedule(),
        gauge_levels: 10,
        tol: splat(space, cfg.sequence_tol),
        phis: sample_phis(cfg.seed),
        engine: cfg.engine.clone(),
    }
}

fn uct_case(cs: &CatalogSequence, cfg: &VerifyConfig) -> Case {
    let ucfg = uniform_config(cfg, cs.seq.space());
    if cs.counterexample {
        let name = format!("{} (expected failure)", cs.seq.name);
        return match uniform_integrability_check(&cs.seq, &cs.interval, &cs.uniform, &ucfg) {
            Err(e @ ConvergenceError::NoCommonLevel(_)) => {
                Case::new(name, true, json!({ "reported": e.to_string() }))
            }
            Err(e) => Case::error(name, e),
            Ok(r) => Case::new(name, false, json!({ "unexpected_common_level": r.common_level })),
        };
    }
    match uct_experiment(&cs.seq, &cs.interval, &cs.wcrs, &cs.uniform, &ucfg) {
        Ok(r) => {
            let detail = serde_json::to_value(&r).expect("serializable");
            Case::new(cs.seq.name.clone(), r.pass, detail)
        }
        Err(e) => Case::error(cs.seq.name.clone(), e),
    }
}

pub fn uct(cfg: &VerifyConfig) -> SuiteReport {
    let cases = catalog::sequences().iter().map(|cs| uct_case(cs, cfg)).collect();
    SuiteReport::new("uct", cases)
}

pub fn mct_config(cfg: &VerifyConfig, lower: f64, upper: f64) -> MctConfig {
    MctConfig {
        lower: LatticeElement::scalar(lower),
        upper: LatticeElement::scalar(upper),
        n_schedule: doubling_schedule(),
        tol: LatticeElement::scalar(cfg.sequence_tol),
        crude_levels: 4,
        phis: sample_phis(cfg.seed),
        engine: cfg.engine.clone(),
    }
}

pub fn mct(cfg: &VerifyConfig) -> SuiteReport {
    let mut cases = Vec::new();
    let runs = [
        (catalog::linear_shrink(), catalog::unit_interval(), 0.0, 1.0),
        (catalog::linear_shrink(), catalog::hybrid_interval(), 0.0, 3.0),
        (catalog::constant_sequence(), catalog::unit_interval(), 1.0, 1.0),
    ];
    for (seq, interval, l, u) in runs {
        let name = format!("{} on [{}, {}]", seq.name, interval.a(), interval.b());
        match mct_experiment(&seq, &interval, &mct_config(cfg, l, u)) {
            Ok(r) => cases.push(Case::new(name, r.pass, serde_json::to_value(&r).expect("serializable"))),
            Err(e) => cases.push(Case::error(name, e)),
        }
    }
    let name = "shifted-constant (expected monotonicity failure)";
    match mct_experiment(&catalog::shifted_constant(), &catalog::unit_interval(), &mct_config(cfg, 0.0, 2.0)) {
        Err(e @ ConvergenceError::Monotonicity { .. }) => {
            cases.push(Case::new(name, true, json!({ "reported": e.to_string() })))
        }
        Err(e) => cases.push(Case::error(name, e)),
        Ok(_) => cases.push(Case::new(name, false, json!({ "unexpected": "accepted a decreasing sequence" }))),
    }
    SuiteReport::new("mct", cases)
}

/// Every `φ` with `φ(i) ∈ 1..=max_entry` for `i <= rows`.
fn all_maps(rows: usize, max_entry: u32) -> Vec<EvalMap> {
    let mut out = vec![Vec::new()];
    for _ in 0..rows {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<u32>| {
                (1..=max_entry).map(move |j| {
                    let mut v = prefix.clone();
                    v.push(j);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(|v| EvalMap::new(v, 1).expect("positive entries")).collect()
}

/// `Σ_r ⋁_i a^r_{i,φ(i)} <= ⋁_i c_{i,φ(i)}` for every family of up to three
/// catalog regulators with at most four rows, over all maps with entries
/// in `1..=6`.
fn combination_domination() -> Case {
    let regs: Vec<(&str, Regulator)> = catalog::regulators().into_iter().filter(|(_, r)| r.rows().len() <= 4).collect();
    let maps = all_maps(4, 6);
    let mut families = 0;
    let mut checks = 0u64;
    let mut violations = 0u64;
    let n = regs.len();
    let mut subsets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for i in 0..n {
        for j in i..n {
            subsets.push(vec![i, j]);
            for k in j..n {
                subsets.push(vec![i, j, k]);
            }
        }
    }
    for s in subsets {
        let family: Vec<Regulator> = s.iter().map(|&k| regs[k].1.clone()).collect();
        let Ok(c) = regulator_combine(&family) else { continue };
        families += 1;
        for phi in &maps {
            let mut lhs = LatticeElement::zero(c.space());
            for r in &family {
                lhs = lhs.add(&r.eval(phi)).expect("same space");
            }
            checks += 1;
            if !lhs.le(&c.eval(phi)).expect("same space") {
                violations += 1;
            }
        }
    }
    Case::new(
        "combination domination",
        violations == 0 && families > 0,
        json!({ "families": families, "maps": maps.len(), "checks": checks, "violations": violations }),
    )
}

fn random_regulator(rng: &mut ChaCha8Rng, space: LatticeSpace) -> Regulator {
    let rows = 1 + (rng.next_u64() % 4) as usize;
    let rows = (0..rows)
        .map(|_| {
            let coords: Vec<f64> = (0..space.dim()).map(|_| 10f64.powf(4.0 * uniform(rng) - 2.0)).collect();
            LatticeElement::new(space, &coords).expect("dimension matches")
        })
        .collect();
    let shift = (rng.next_u64() % 3) as i32;
    Regulator::with_shift(space, 0.5, shift, rows).expect("nonnegative rows")
}

fn random_map(rng: &mut ChaCha8Rng) -> EvalMap {
    let len = (rng.next_u64() % 7) as usize;
    let values = (0..len).map(|_| 1 + (rng.next_u64() % 10) as u32).collect();
    EvalMap::new(values, 1 + (rng.next_u64() % 10) as u32).expect("positive entries")
}

/// `x ∧ Σ_n ⋁_i a^n_{i,φ(i)+n} <= ⋁_i c_{i,φ(i)}` on random families,
/// positive elements and maps.
fn fremlin_samples(cfg: &VerifyConfig) -> Case {
    let mut rng = cfg.rng("fremlin");
    let mut violations = 0;
    for _ in 0..cfg.fremlin_samples {
        let space = if rng.next_u64() & 1 == 0 { LatticeSpace::scalar() } else { LatticeSpace::vector(2).expect("dim 2") };
        let len = 1 + (rng.next_u64() % 6) as usize;
        let family: Vec<Regulator> = (0..len).map(|_| random_regulator(&mut rng, space)).collect();
        let coords: Vec<f64> = (0..space.dim()).map(|_| 5.0 * uniform(&mut rng)).collect();
        let x = LatticeElement::new(space, &coords).expect("dimension matches");
        let phi = random_map(&mut rng);
        let c = fremlin_combine(&family, &x).expect("valid family");
        let lhs = fremlin_lhs(&family, &x, &phi).expect("valid family");
        if !lhs.le(&c.eval(&phi)).expect("same space") {
            violations += 1;
        }
    }
    Case::new(
        "fremlin inequality",
        violations == 0,
        json!({ "samples": cfg.fremlin_samples, "violations": violations }),
    )
}

/// Depth at which the σ-distributivity proxy is compared with `‖U‖`.
pub const SIGMA_DEPTH: u32 = 60;
pub const SIGMA_RATIO: f64 = 1e-15;

fn sigma_cases() -> Vec<Case> {
    catalog::regulators()
        .into_iter()
        .map(|(name, r)| {
            let rep = sigma_distributivity_check(&r, SIGMA_DEPTH);
            let norm = r.row_sum().sup_norm();
            let value = rep.infimum_proxy.sup_norm();
            let pass = rep.decreasing && value <= SIGMA_RATIO * norm;
            Case::new(
                format!("sigma distributivity {name}"),
                pass,
                json!({ "decreasing": rep.decreasing, "value": value, "norm": norm }),
            )
        })
        .collect()
}

/// `|x| = x ∨ −x`, `x = x⁺ − (−x)⁺` and `x ∧ y + x ∨ y = x + y` on random
/// vectors.
fn lattice_laws(cfg: &VerifyConfig) -> Case {
    let mut rng = cfg.rng("lattice");
    let mut violations = 0;
    let samples = 1000;
    for _ in 0..samples {
        let dim = 1 + (rng.next_u64() % 4) as usize;
        let mut draw = || -> Vec<f64> { (0..dim).map(|_| (rng.next_u64() % 2001) as f64 / 100.0 - 10.0).collect() };
        let x = LatticeElement::from_coords(&draw()).expect("nonempty");
        let y = LatticeElement::from_coords(&draw()).expect("nonempty");
        let ok = x.abs() == x.join(&x.neg()).expect("same space")
            && x.positive_part().sub(&x.neg().positive_part()).expect("same space") == x
            && x.meet(&y).and_then(|m| m.add(&x.join(&y)?)).expect("same space")
                == x.add(&y).expect("same space");
        if !ok {
            violations += 1;
        }
    }
    Case::new("lattice laws", violations == 0, json!({ "samples": samples, "violations": violations }))
}

pub fn riesz(cfg: &VerifyConfig) -> SuiteReport {
    let mut cases = vec![lattice_laws(cfg), combination_domination(), fremlin_samples(cfg)];
    cases.extend(sigma_cases());
    SuiteReport::new("riesz", cases)
}

/// Runs one suite by name.
pub fn run_suite(name: &str, cfg: &VerifyConfig) -> Option<SuiteReport> {
    Some(match name {
        "linearity" => linearity(cfg),
        "additivity" => additivity(cfg),
        "saks-henstock" => saks_henstock(cfg),
        "uct" => uct(cfg),
        "mct" => mct(cfg),
        "riesz" => riesz(cfg),
        _ => return None,
    })
}

/// `name` or every suite for `"all"`.
pub fn run(name: &str, cfg: &VerifyConfig) -> Option<Vec<SuiteReport>> {
    if name == "all" {
        return Some(SUITES.iter().map(|s| run_suite(s, cfg).expect("known suite")).collect());
    }
    run_suite(name, cfg).map(|r| vec![r])
}
