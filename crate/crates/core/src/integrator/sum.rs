use super::exact::SuperAccumulator;
use super::integrand::{Integrand, IntegrandError};
use super::IntegrateError;
use crate::partition::{TaggedInterval, TaggedPartition};
use crate::riesz::LatticeElement;
use crate::timescale::TsInterval;

#[inline]
fn two_diff(hi: f64, lo: f64) -> (f64, f64) {
    let s = hi - lo;
    let bb = s - hi;
    let err = (hi - (s - bb)) + (-lo - bb);
    (s, err)
}

/// Componentwise accumulator for `Σ f(ξ)·(t_i − t_{i−1})`.
///
/// Lengths are split into error-free parts and products enter the
/// superaccumulator exactly, so the result is the correctly rounded value of
/// the mathematical sum of the evaluated terms.
pub struct ExactSum {
    parts: Vec<SuperAccumulator>,
}

impl ExactSum {
    pub fn new(dim: usize) -> Self {
        ExactSum { parts: (0..dim).map(|_| SuperAccumulator::new()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.parts.len()
    }

    /// Adds `values · (right − left)`.
    #[inline]
    pub fn add_weighted(&mut self, values: &[f64], left: f64, right: f64) {
        let (d, d_err) = two_diff(right, left);
        for (acc, &v) in self.parts.iter_mut().zip(values) {
            acc.add_product(v, d);
            if d_err != 0.0 {
                acc.add_product(v, d_err);
            }
        }
    }

    pub fn add_value(&mut self, values: &[f64]) {
        for (acc, &v) in self.parts.iter_mut().zip(values) {
            acc.add(v);
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.parts.iter().map(|p| p.sum()).collect()
    }
}

/// Streams items into an [`ExactSum`], evaluating the integrand at each tag.
/// The first evaluation error is kept and later items are ignored.
pub(crate) struct SumSink<'f, F: ?Sized> {
    f: &'f F,
    acc: ExactSum,
    buf: Vec<f64>,
    pub(crate) error: Option<IntegrandError>,
}

impl<'f, F: Integrand + ?Sized> SumSink<'f, F> {
    pub(crate) fn new(f: &'f F) -> Self {
        let dim = f.space().dim();
        SumSink { f, acc: ExactSum::new(dim), buf: vec![0.0; dim], error: None }
    }

    #[inline]
    pub(crate) fn push(&mut self, item: TaggedInterval) {
        if self.error.is_some() {
            return;
        }
        if let Err(e) = self.f.eval_into(item.tag, &mut self.buf) {
            self.error = Some(e);
            return;
        }
        let (d, d_err) = two_diff(item.right, item.left);
        for (acc, &v) in self.acc.parts.iter_mut().zip(&self.buf) {
            if !v.is_finite() {
                self.error = Some(IntegrandError::NonFinite(item.tag));
                return;
            }
            acc.add_product(v, d);
            if d_err != 0.0 {
                acc.add_product(v, d_err);
            }
        }
    }

    pub(crate) fn finish(self) -> Result<Vec<f64>, IntegrandError> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.acc.values()),
        }
    }
}

/// `S(f, P) = Σ f(ξ_i)(t_i − t_{i−1})` over a full or partial partition.
pub fn riemann_sum<F: Integrand + ?Sized>(
    f: &F,
    p: &TaggedPartition,
    interval: &TsInterval,
) -> Result<LatticeElement, IntegrateError> {
    p.classify(interval)?;
    let mut sink = SumSink::new(f);
    for item in &p.items {
        sink.push(*item);
    }
    let coords = sink.finish()?;
    Ok(LatticeElement::new(f.space(), &coords)?)
}
