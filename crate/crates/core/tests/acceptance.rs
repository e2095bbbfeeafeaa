//! Acceptance run: one PASS/FAIL line per criterion, then a second run of
//! every criterion whose reports must match the first byte for byte.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::RngExt;
use serde_json::{json, Value};

use hkdelta::catalog::{self, hybrid_interval, unit_interval};
use hkdelta::convergence::{mct_experiment, uct_experiment};
use hkdelta::expr::ExprIntegrand;
use hkdelta::gauge::{DeltaGauge, Radii};
use hkdelta::integrator::{hk_integrate, oracle_integrate, EngineConfig, FnIntegrand, IntegralResult, OracleConfig};
use hkdelta::partition::{cousin_partition, fineness_report, Coverage};
use hkdelta::riesz::LatticeElement;
use hkdelta::timescale::{TimeScale, TsInterval};
use hkdelta::verify::{self, SuiteReport, VerifyConfig};

const SEED: u64 = 0;

type Check = fn() -> (bool, Value);

struct Criterion {
    id: u32,
    name: &'static str,
    cap: Option<Duration>,
    check: Check,
}

fn engine() -> EngineConfig {
    EngineConfig::with_seed(SEED)
}

fn scalar(x: f64) -> LatticeElement {
    LatticeElement::scalar(x)
}

fn expr(text: &str) -> ExprIntegrand {
    ExprIntegrand::parse(text).expect("valid expression").smooth(true)
}

fn run(f: &ExprIntegrand, interval: &TsInterval, tol: f64) -> IntegralResult {
    hk_integrate(f, interval, &scalar(tol), &engine()).expect("engine runs")
}

fn value(r: &IntegralResult) -> f64 {
    r.value.coords()[0]
}

fn suite(name: &str) -> SuiteReport {
    verify::run_suite(name, &VerifyConfig::with_seed(SEED)).expect("known suite")
}

fn suite_check(name: &str, expected_cases: usize) -> (bool, SuiteReport) {
    let r = suite(name);
    (r.pass && r.cases.len() == expected_cases, r)
}

fn constant_exactness() -> (bool, Value) {
    let mut rng = common::rng(SEED ^ 1);
    let one = FnIntegrand::scalar(|_| 1.0).smooth();
    let mut pass = true;
    let mut rows = Vec::new();
    for _ in 0..50 {
        let i = common::random_interval(&mut rng);
        let r = hk_integrate(&one, &i, &scalar(1e-12), &engine()).expect("engine runs");
        let err = (value(&r) - (i.b() - i.a())).abs();
        pass &= r.converged && r.level == 0 && r.spread.is_zero() && err <= 1e-12;
        rows.push(json!([i.a(), i.b(), value(&r), r.level]));
    }
    (pass, json!({ "cases": rows }))
}

fn continuum_oracle() -> (bool, Value) {
    let r = run(&expr("t"), &unit_interval(), 1e-6);
    let err = (value(&r) - 0.5).abs();
    (r.converged && err <= 1e-6 && r.levels_used <= 25, json!({ "result": r.to_json(), "error": err }))
}

fn forced_sum() -> (bool, Value) {
    let grid = TimeScale::uniform(0.0, 5.0, 1.0).and_then(|t| t.whole()).expect("valid grid");
    let r = run(&expr("t^2"), &grid, 1e-12);
    let err = (value(&r) - 30.0).abs();
    (r.converged && r.level == 0 && err <= 1e-12, json!({ "result": r.to_json(), "error": err }))
}

fn hybrid_oracle() -> (bool, Value) {
    let f = expr("t");
    let interval = hybrid_interval();
    let r = run(&f, &interval, 2e-6);
    let oracle = oracle_integrate(&f, &interval, &OracleConfig::default()).expect("oracle runs").coords()[0];
    let err = (value(&r) - 4.25).abs();
    let pass = r.converged && err <= 1e-6 && (oracle - 4.25).abs() <= 1e-12;
    (pass, json!({ "result": r.to_json(), "oracle": oracle, "error": err }))
}

fn linearity() -> (bool, Value) {
    let (pass, r) = suite_check("linearity", 20);
    (pass, json!(r))
}

fn additivity() -> (bool, Value) {
    let (mut pass, r) = suite_check("additivity", 20);
    let detail = |key: &str| r.cases.iter().map(|c| c.detail[key].as_u64().unwrap_or(0)).sum::<u64>();
    let (samples, split) = (detail("stitch_samples"), detail("split_at_c"));
    let left_scattered = r.cases.iter().filter(|c| c.detail["left_scattered"] == true).count();
    pass &= samples == 200 && split == 200 && left_scattered > 0;
    (pass, json!({ "stitch_samples": samples, "split_at_c": split, "left_scattered": left_scattered, "suite": r }))
}

fn saks_henstock() -> (bool, Value) {
    let (pass, r) = suite_check("saks-henstock", 100);
    (pass, json!(r))
}

fn cousin_partitions() -> (bool, Value) {
    let mut rng = common::rng(SEED ^ 8);
    let (mut full_fine, mut items, mut sigma_uses) = (0, 0, 0);
    for _ in 0..1000 {
        let interval = common::random_interval(&mut rng);
        let n = interval.scale().components().len();
        let mut radius = || 10f64.powf(rng.random_range(-3.0..0.3));
        let radii: Vec<Radii> = (0..n).map(|_| Radii::new(radius(), radius())).collect();
        let mut g = DeltaGauge::per_component(interval.clone(), radii).expect("positive radii");
        if rng.random_bool(0.3) {
            g = g.with_boundary(Some(0.0), Some(0.0)).expect("piecewise gauge");
        }
        let p = cousin_partition(&g).expect("cousin partition");
        let cert = fineness_report(&p, &g).expect("points in scale");
        if cert.fine && p.classify(&interval) == Ok(Coverage::Full) {
            full_fine += 1;
        }
        items += p.len();
        sigma_uses += cert.sigma_clause_uses;
    }
    (full_fine == 1000, json!({ "full_and_fine": full_fine, "items": items, "sigma_clause_uses": sigma_uses }))
}

fn riesz() -> (bool, Value) {
    let r = suite("riesz");
    (r.pass && !r.cases.is_empty(), json!(r))
}

fn uct() -> (bool, Value) {
    let cs = catalog::sequence_named("linear-shrink").expect("catalog sequence");
    let cfg = verify::uniform_config(&VerifyConfig::with_seed(SEED), cs.seq.space());
    let r = uct_experiment(&cs.seq, &hybrid_interval(), &cs.wcrs, &cs.uniform, &cfg).expect("uct runs");
    let mut pass = r.pass && r.rows.len() == 11;
    for row in &r.rows {
        let (i, s) = (row.integral.coords()[0], row.spread.coords()[0]);
        pass &= (i - 4.25).abs() <= 4.25 / row.n as f64 + 2.0 * s;
    }
    let last = r.rows.last().expect("rows");
    let final_gap = (last.integral.coords()[0] - 4.25 * (1.0 - 1.0 / last.n as f64)).abs();
    pass &= last.n == 1024 && final_gap <= 1e-4;
    (pass, json!({ "final_gap": final_gap, "report": r }))
}

fn mct() -> (bool, Value) {
    let vcfg = VerifyConfig { sequence_tol: 2e-6, ..VerifyConfig::with_seed(SEED) };
    let cfg = verify::mct_config(&vcfg, 0.0, 1.0);
    let r = mct_experiment(&catalog::linear_shrink(), &unit_interval(), &cfg).expect("mct runs");
    let mut pass = r.pass && r.crude_samples > 0 && r.crude_violations == 0;
    for w in r.rows.windows(2) {
        let slack = 2.0 * w[0].spread.coords()[0].max(w[1].spread.coords()[0]);
        pass &= w[1].integral.coords()[0] >= w[0].integral.coords()[0] - slack;
    }
    let mut worst: f64 = 0.0;
    for row in &r.rows {
        worst = worst.max((row.integral.coords()[0] - 0.5 * (1.0 - 1.0 / row.n as f64)).abs());
    }
    let limit_gap = (r.limit.coords()[0] - 0.5).abs();
    pass &= limit_gap <= 1e-6 && worst <= 1e-6;
    (pass, json!({ "limit_gap": limit_gap, "worst_row_gap": worst, "report": r }))
}

fn showcase() -> (bool, Value) {
    let p = catalog::problem_named("hk-showcase").expect("catalog problem");
    let cfg = EngineConfig { level_budget: 1 << 24, ..engine() };
    let r = hk_integrate(&p.integrand, &p.interval, &scalar(1e-2), &cfg).expect("engine runs");
    let gap = (value(&r) - 1f64.sin()).abs();
    // A converged report must be right; a non-converged one is an honest answer.
    let pass = !r.converged || gap <= 1e-2;
    (pass, json!({ "result": r.to_json(), "gap": gap }))
}

fn criteria() -> Vec<Criterion> {
    let secs = |s| Some(Duration::from_secs(s));
    vec![
        Criterion { id: 1, name: "constant integrand exactness", cap: secs(2), check: constant_exactness },
        Criterion { id: 2, name: "continuum oracle", cap: secs(1), check: continuum_oracle },
        Criterion { id: 3, name: "forced-sum oracle", cap: None, check: forced_sum },
        Criterion { id: 4, name: "hybrid oracle", cap: secs(2), check: hybrid_oracle },
        Criterion { id: 5, name: "linearity", cap: None, check: linearity },
        Criterion { id: 6, name: "additivity", cap: None, check: additivity },
        Criterion { id: 7, name: "saks-henstock", cap: None, check: saks_henstock },
        Criterion { id: 8, name: "cousin partitioner", cap: secs(5), check: cousin_partitions },
        Criterion { id: 9, name: "riesz and regulators", cap: None, check: riesz },
        Criterion { id: 10, name: "uniform convergence", cap: None, check: uct },
        Criterion { id: 11, name: "monotone convergence", cap: None, check: mct },
        Criterion { id: 12, name: "showcase integrand", cap: secs(60), check: showcase },
    ]
}

fn main() -> ExitCode {
    let criteria = criteria();
    let mut all_pass = true;
    let mut first = Vec::new();
    for c in &criteria {
        let t0 = Instant::now();
        let (ok, report) = (c.check)();
        let elapsed = t0.elapsed();
        let in_time = c.cap.is_none_or(|cap| elapsed <= cap);
        let pass = ok && in_time;
        all_pass &= pass;
        let cap = c.cap.map(|d| format!(" (cap {}s)", d.as_secs())).unwrap_or_default();
        let note = if ok && !in_time { " over time cap" } else { "" };
        println!("{} {:>2} {:<30} {:>8.2}s{cap}{note}", verdict(pass), c.id, c.name, elapsed.as_secs_f64());
        if !ok {
            println!("   report: {report}");
        }
        first.push(serde_json::to_string(&report).expect("serializable"));
    }

    let t0 = Instant::now();
    let mismatched: Vec<u32> = criteria
        .iter()
        .zip(&first)
        .filter(|(c, bytes)| serde_json::to_string(&(c.check)().1).expect("serializable") != **bytes)
        .map(|(c, _)| c.id)
        .collect();
    let pass = mismatched.is_empty();
    all_pass &= pass;
    println!("{} 13 {:<30} {:>8.2}s", verdict(pass), "determinism", t0.elapsed().as_secs_f64());
    if !pass {
        println!("   reports differ for criteria {mismatched:?}");
    }

    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
