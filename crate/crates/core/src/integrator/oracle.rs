// Kronrod nodes and weights are kept at their published precision.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::integrand::Integrand;
use super::sum::ExactSum;
use super::IntegrateError;
use crate::riesz::LatticeElement;
use crate::timescale::{Piece, TsInterval};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Absolute error target per continuum segment.
    pub tol: f64,
    pub max_intervals: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { tol: 1e-10, max_intervals: 100_000 }
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    value: Vec<f64>,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then(other.lo.total_cmp(&self.lo))
    }
}

fn kronrod<F: Integrand + ?Sized>(f: &F, lo: f64, hi: f64, buf: &mut [f64]) -> Result<Panel, IntegrateError> {
    let dim = buf.len();
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut add = |x: f64, wk: f64, wg: f64, buf: &mut [f64]| -> Result<(), IntegrateError> {
        f.eval_into(x, buf)?;
        if buf.iter().any(|v| !v.is_finite()) {
            return Err(super::IntegrandError::NonFinite(x).into());
        }
        for d in 0..dim {
            k[d] += wk * buf[d];
            g[d] += wg * buf[d];
        }
        Ok(())
    };
    add(c, WGK[7], WG[3], buf)?;
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        add(c - h * XGK[j], WGK[j], wg, buf)?;
        add(c + h * XGK[j], WGK[j], wg, buf)?;
    }
    let value: Vec<f64> = k.iter().map(|v| v * h).collect();
    let err = k.iter().zip(&g).fold(0.0f64, |m, (a, b)| m.max(((a - b) * h).abs()));
    Ok(Panel { lo, hi, value, err })
}

/// Globally adaptive Gauss–Kronrod (7/15) integral over `[lo, hi]`.
fn quadrature<F: Integrand + ?Sized>(
    f: &F,
    lo: f64,
    hi: f64,
    cfg: &OracleConfig,
    out: &mut ExactSum,
) -> Result<(), IntegrateError> {
    let mut buf = vec![0.0; f.space().dim()];
    let mut heap = BinaryHeap::new();
    let first = kronrod(f, lo, hi, &mut buf)?;
    let mut total_err = first.err;
    heap.push(first);
    while total_err > cfg.tol {
        if heap.len() >= cfg.max_intervals {
            return Err(IntegrateError::Quadrature { lo, hi });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(worst.lo < mid && mid < worst.hi) {
            return Err(IntegrateError::Quadrature { lo, hi });
        }
        let left = kronrod(f, worst.lo, mid, &mut buf)?;
        let right = kronrod(f, mid, worst.hi, &mut buf)?;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        if total_err <= cfg.tol {
            // Recompute to shed accumulated rounding in the running total.
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for p in panels {
        out.add_value(&p.value);
    }
    Ok(())
}

/// Reference value of `∫_a^b f Δt` for piecewise smooth integrands.
///
/// Each right-scattered `t ∈ [a, b)_T` contributes `f(t)·μ(t)` and each
/// continuum segment contributes an adaptive quadrature integral.
pub fn oracle_integrate<F: Integrand + ?Sized>(
    f: &F,
    interval: &TsInterval,
    cfg: &OracleConfig,
) -> Result<LatticeElement, IntegrateError> {
    if !f.oracle_eligible() {
        return Err(IntegrateError::NotOracleEligible);
    }
    let scale = interval.scale();
    let b = interval.b();
    let dim = f.space().dim();
    let mut acc = ExactSum::new(dim);
    let mut buf = vec![0.0; dim];
    let mut jump = |t: f64, acc: &mut ExactSum| -> Result<(), IntegrateError> {
        if t < b {
            let next = scale.sigma(t)?;
            f.eval_into(t, &mut buf)?;
            acc.add_weighted(&buf, t, next);
        }
        Ok(())
    };
    for piece in interval.points_in() {
        match piece {
            Piece::Point(p) => jump(p, &mut acc)?,
            Piece::Segment { lo, hi } => {
                quadrature(f, lo, hi, cfg, &mut acc)?;
                jump(hi, &mut acc)?;
            }
        }
    }
    Ok(LatticeElement::new(f.space(), &acc.values())?)
}
