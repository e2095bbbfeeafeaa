//! Riemann sums, the gauge-refinement engine, a quadrature oracle and the
//! theorem checks built on them.

mod checks;
mod engine;
mod exact;
mod integrand;
mod oracle;
mod sum;

use thiserror::Error;

use crate::gauge::GaugeError;
use crate::partition::PartitionError;
use crate::riesz::RieszError;
use crate::timescale::TimeScaleError;

pub use checks::{
    check_linearity, saks_henstock_residual, split_integrate, LinearityReport, SplitReport, StitchCheck, STITCH_SAMPLES,
};
pub use engine::{hk_integrate, level_gauge, level_partitions, EngineConfig, IntegralResult};
pub use integrand::{Coordinate, FnIntegrand, Integrand, IntegrandError, LinearCombination, SharedIntegrand};
pub use oracle::{oracle_integrate, OracleConfig};
pub use exact::SuperAccumulator;
pub use sum::{riemann_sum, ExactSum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("invalid interval: {0}")]
    Interval(#[from] TimeScaleError),
    #[error(transparent)]
    Integrand(#[from] IntegrandError),
    #[error("integrity failure: integrand returned different values at t = {0}")]
    Impure(f64),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Lattice(#[from] RieszError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("integrand is not declared piecewise smooth; the oracle does not apply")]
    NotOracleEligible,
    #[error("engine did not converge on [{lo}, {hi}] (spread {spread})")]
    NotConverged { lo: f64, hi: f64, spread: f64 },
    #[error("quadrature did not reach the requested tolerance on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },
}
