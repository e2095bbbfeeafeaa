//! Built-in problems, function sequences and regulators with known values.

use std::f64::consts::E;
use std::sync::Arc;

use crate::convergence::FunctionSequence;
use crate::expr::ExprIntegrand;
use crate::integrator::{FnIntegrand, SharedIntegrand};
use crate::riesz::{LatticeElement, LatticeSpace, Regulator};
use crate::timescale::{Component, TimeScale, TsInterval};

/// `[0, 1] ∪ {1.5} ∪ [2, 3]`.
pub fn hybrid_scale() -> TimeScale {
    TimeScale::new([
        Component::Interval { lo: 0.0, hi: 1.0 },
        Component::Point(1.5),
        Component::Interval { lo: 2.0, hi: 3.0 },
    ])
    .expect("valid scale")
}

pub fn unit_interval() -> TsInterval {
    TimeScale::interval(0.0, 1.0).and_then(|t| t.whole()).expect("valid interval")
}

pub fn hybrid_interval() -> TsInterval {
    hybrid_scale().whole().expect("valid interval")
}

/// A named integrand on a fixed interval with its exact integral.
#[derive(Clone)]
pub struct Problem {
    pub name: &'static str,
    /// Name of the interval, shared by problems on the same domain.
    pub domain: &'static str,
    pub interval: TsInterval,
    pub expr: &'static str,
    pub integrand: SharedIntegrand,
    pub exact: LatticeElement,
    /// How `exact` was obtained.
    pub source: &'static str,
    /// Only HK integrable: the engine is not expected to converge quickly.
    pub slow: bool,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem").field("name", &self.name).field("expr", &self.expr).finish()
    }
}

fn problem(
    name: &'static str,
    domain: &'static str,
    interval: TsInterval,
    expr: &'static str,
    exact: &[f64],
    source: &'static str,
) -> Problem {
    let integrand = ExprIntegrand::parse(expr).expect("catalog expressions parse").smooth(true);
    Problem {
        name,
        domain,
        interval,
        expr,
        integrand: Arc::new(integrand),
        exact: LatticeElement::from_coords(exact).expect("nonempty"),
        source,
        slow: false,
    }
}

/// `2t·sin(t⁻²) − (2/t)·cos(t⁻²)` with value 0 at 0: the derivative of
/// `t²·sin(t⁻²)`, which is not Lebesgue integrable on `[0, 1]`.
pub const SHOWCASE_EXPR: &str = "piecewise(t = 0, 0, 2 * t * sin(t ^ -2) - 2 / t * cos(t ^ -2))";

pub fn problems() -> Vec<Problem> {
    let unit = unit_interval;
    let hybrid = hybrid_interval;
    let grid = TimeScale::uniform(0.0, 5.0, 1.0).and_then(|t| t.whole()).expect("valid grid");
    let qscale = TimeScale::qscale(0.5, 1.0, 6).and_then(|t| t.whole()).expect("valid q-scale");
    let cantor = TimeScale::cantor(0.0, 1.0, 2).and_then(|t| t.whole()).expect("valid cantor stage");
    let cos_hybrid = 1f64.sin() + 0.5 * 1f64.cos() + 0.5 * 1.5f64.cos() + 3f64.sin() - 2f64.sin();
    let mut out = vec![
        problem("identity-unit", "unit", unit(), "t", &[0.5], "closed form"),
        problem("square-unit", "unit", unit(), "t^2", &[1.0 / 3.0], "closed form"),
        problem("exp-unit", "unit", unit(), "exp(t)", &[E - 1.0], "closed form"),
        problem("sqrt-unit", "unit", unit(), "sqrt(t)", &[2.0 / 3.0], "closed form"),
        problem("step-unit", "unit", unit(), "piecewise(t < 0.3, 0, 1)", &[0.7], "closed form"),
        problem("identity-hybrid", "hybrid", hybrid(), "t", &[4.25], "segments plus jumps"),
        problem("cos-hybrid", "hybrid", hybrid(), "cos(t)", &[cos_hybrid], "segments plus jumps"),
        problem("one-hybrid", "hybrid", hybrid(), "1", &[3.0], "length"),
        problem("vector-hybrid", "hybrid", hybrid(), "[t, 1, -(t^2)]", &[4.25, 3.0, -199.0 / 24.0], "segments plus jumps"),
        problem("square-grid", "grid", grid, "t^2", &[30.0], "forced sum"),
        problem("identity-qscale", "qscale", qscale, "t", &[4095.0 / 12288.0], "forced sum"),
        problem("abs-cantor", "cantor", cantor, "abs(t - 0.5)", &[5.0 / 18.0], "segments plus jumps"),
    ];
    let mut showcase = problem("hk-showcase", "unit", unit(), SHOWCASE_EXPR, &[1f64.sin()], "antiderivative");
    showcase.integrand = Arc::new(ExprIntegrand::parse(SHOWCASE_EXPR).expect("parses"));
    showcase.slow = true;
    out.push(showcase);
    out
}

pub fn problem_named(name: &str) -> Option<Problem> {
    problems().into_iter().find(|p| p.name == name)
}

/// A function sequence with the regulators and domain it is exercised on.
#[derive(Clone, Debug)]
pub struct CatalogSequence {
    pub seq: FunctionSequence,
    pub interval: TsInterval,
    /// Regulator for pointwise convergence.
    pub wcrs: Regulator,
    /// Regulator for uniform integrability.
    pub uniform: Regulator,
    /// `f_n <= f_{n+1}`, with bounds `l <= f_1` and `f <= L`.
    pub monotone: Option<(f64, f64)>,
    /// Expected to fail the uniform integrability check.
    pub counterexample: bool,
    /// `n ↦ ∫ f_n` in closed form.
    pub exact: fn(u32) -> f64,
}

fn shared(f: FnIntegrand) -> SharedIntegrand {
    Arc::new(f.smooth())
}

fn scalar_reg(u: f64) -> Regulator {
    Regulator::single(LatticeElement::scalar(u)).expect("positive")
}

/// `f_n(t) = t(1 − 1/n)` increasing to `t`.
pub fn linear_shrink() -> FunctionSequence {
    FunctionSequence::new("linear-shrink", shared(FnIntegrand::scalar(|t| t)), |n| {
        let k = 1.0 - 1.0 / n as f64;
        shared(FnIntegrand::scalar(move |t| t * k))
    })
}

/// `f_n(t) = t + 1/n` decreasing to `t`.
pub fn shifted_constant() -> FunctionSequence {
    FunctionSequence::new("shifted-constant", shared(FnIntegrand::scalar(|t| t)), |n| {
        let k = 1.0 / n as f64;
        shared(FnIntegrand::scalar(move |t| t + k))
    })
}

pub fn constant_sequence() -> FunctionSequence {
    FunctionSequence::new("constant", shared(FnIntegrand::scalar(|_| 1.0)), |_| {
        shared(FnIntegrand::scalar(|_| 1.0))
    })
}

/// Tent of height `2n` on `[0, 1/n]` with unit area, tending to `0`
/// pointwise while every integral stays `1`.
pub fn mass_concentration() -> FunctionSequence {
    FunctionSequence::new("mass-concentration-counterexample", shared(FnIntegrand::scalar(|_| 0.0)), |n| {
        let n = n as f64;
        shared(FnIntegrand::scalar(move |t| 2.0 * n * (1.0 - (2.0 * n * t - 1.0).abs()).max(0.0)))
    })
}

pub fn sequences() -> Vec<CatalogSequence> {
    vec![
        CatalogSequence {
            seq: linear_shrink(),
            interval: hybrid_interval(),
            wcrs: scalar_reg(4.0),
            uniform: scalar_reg(4.0),
            monotone: Some((0.0, 3.0)),
            counterexample: false,
            exact: |n| 4.25 * (1.0 - 1.0 / n as f64),
        },
        CatalogSequence {
            seq: shifted_constant(),
            interval: hybrid_interval(),
            wcrs: scalar_reg(2.0),
            uniform: scalar_reg(4.0),
            monotone: None,
            counterexample: false,
            exact: |n| 4.25 + 3.0 / n as f64,
        },
        CatalogSequence {
            seq: constant_sequence(),
            interval: unit_interval(),
            wcrs: scalar_reg(1.0),
            uniform: scalar_reg(1.0),
            monotone: Some((1.0, 1.0)),
            counterexample: false,
            exact: |_| 1.0,
        },
        CatalogSequence {
            seq: mass_concentration(),
            interval: unit_interval(),
            wcrs: scalar_reg(1.0),
            uniform: scalar_reg(1.0),
            monotone: None,
            counterexample: true,
            exact: |_| 1.0,
        },
    ]
}

pub fn sequence_named(name: &str) -> Option<CatalogSequence> {
    sequences().into_iter().find(|s| s.seq.name == name)
}

/// Regulators exercised by the lattice checks; all share base ½ except
/// `quarter`.
pub fn regulators() -> Vec<(&'static str, Regulator)> {
    let s = LatticeElement::scalar;
    let v = |c: &[f64]| LatticeElement::from_coords(c).expect("nonempty");
    let scalar = LatticeSpace::scalar();
    let pair = LatticeSpace::vector(2).expect("dimension 2");
    vec![
        ("unit", scalar_reg(1.0)),
        ("geometric-rows", Regulator::new(scalar, 0.5, (1..=4).map(|i| s(0.5f64.powi(i))).collect()).expect("valid")),
        ("sparse", Regulator::new(scalar, 0.5, vec![s(3.0), s(0.0), s(1e-3)]).expect("valid")),
        ("shifted", Regulator::with_shift(scalar, 0.5, 3, vec![s(1.0), s(1.0)]).expect("valid")),
        ("large", Regulator::new(scalar, 0.5, vec![s(1e6), s(2.5e5)]).expect("valid")),
        ("quarter", Regulator::new(scalar, 0.25, vec![s(2.0)]).expect("valid")),
        ("vector-pair", Regulator::new(pair, 0.5, vec![v(&[1.0, 0.0]), v(&[0.0, 2.0]), v(&[0.5, 0.5])]).expect("valid")),
        ("vector-single", Regulator::single(v(&[4.0, 1e-3])).expect("valid")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{oracle_integrate, OracleConfig};

    #[test]
    fn exact_values_match_the_oracle() {
        for p in problems().into_iter().filter(|p| !p.slow) {
            let o = oracle_integrate(&p.integrand, &p.interval, &OracleConfig::default()).unwrap();
            for (a, b) in o.coords().iter().zip(p.exact.coords()) {
                assert!((a - b).abs() <= 1e-9, "{}: oracle {a}, exact {b}", p.name);
            }
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<&str> = problems().iter().map(|p| p.name).collect();
        names.extend(regulators().iter().map(|r| r.0));
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
        assert!(sequence_named("mass-concentration-counterexample").is_some());
    }

    #[test]
    fn tent_has_unit_area() {
        let seq = mass_concentration();
        for n in [1, 7, 64] {
            let f = seq.term(n).unwrap();
            let v = oracle_integrate(&f, &unit_interval(), &OracleConfig::default()).unwrap();
            assert!((v.coords()[0] - 1.0).abs() < 1e-9);
        }
    }
}
