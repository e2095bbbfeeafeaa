use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::riesz::{LatticeElement, LatticeSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrandError {
    #[error("{message} at t = {t}")]
    Domain { t: f64, message: String },
    #[error("integrand is not finite at t = {0}")]
    NonFinite(f64),
}

/// A pure function `f : [a, b]_T → X`.
///
/// `eval_into` writes `f(t)` into a buffer of length `space().dim()`; the
/// engine calls it in hot loops, so implementations should not allocate.
pub trait Integrand: Send + Sync {
    fn space(&self) -> LatticeSpace;

    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrandError>;

    fn eval(&self, t: f64) -> Result<LatticeElement, IntegrandError> {
        let mut out = LatticeElement::zero(self.space());
        let mut buf = vec![0.0; out.dim()];
        self.eval_into(t, &mut buf)?;
        out = LatticeElement::new(out.space(), &buf).expect("dimension matches space");
        Ok(out)
    }

    /// Declared piecewise smooth on continuum segments, which makes it
    /// eligible for the quadrature oracle.
    fn oracle_eligible(&self) -> bool {
        false
    }
}

impl<T: Integrand + ?Sized> Integrand for Arc<T> {
    fn space(&self) -> LatticeSpace {
        (**self).space()
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrandError> {
        (**self).eval_into(t, out)
    }

    fn oracle_eligible(&self) -> bool {
        (**self).oracle_eligible()
    }
}

impl<T: Integrand + ?Sized> Integrand for &T {
    fn space(&self) -> LatticeSpace {
        (**self).space()
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrandError> {
        (**self).eval_into(t, out)
    }

    fn oracle_eligible(&self) -> bool {
        (**self).oracle_eligible()
    }
}

pub type SharedIntegrand = Arc<dyn Integrand>;

type EvalFn = dyn Fn(f64, &mut [f64]) -> Result<(), IntegrandError> + Send + Sync;

/// Integrand backed by a closure.
#[derive(Clone)]
pub struct FnIntegrand {
    space: LatticeSpace,
    f: Arc<EvalFn>,
    smooth: bool,
}

impl fmt::Debug for FnIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnIntegrand").field("space", &self.space).field("smooth", &self.smooth).finish()
    }
}

impl FnIntegrand {
    pub fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        FnIntegrand {
            space: LatticeSpace::scalar(),
            f: Arc::new(move |t, out: &mut [f64]| {
                out[0] = f(t);
                Ok(())
            }),
            smooth: false,
        }
    }

    pub fn vector(dim: usize, f: impl Fn(f64, &mut [f64]) + Send + Sync + 'static) -> Self {
        let space = LatticeSpace::for_dim(dim).expect("dimension >= 1");
        FnIntegrand {
            space,
            f: Arc::new(move |t, out: &mut [f64]| {
                f(t, out);
                Ok(())
            }),
            smooth: false,
        }
    }

    pub fn fallible(
        space: LatticeSpace,
        f: impl Fn(f64, &mut [f64]) -> Result<(), IntegrandError> + Send + Sync + 'static,
    ) -> Self {
        FnIntegrand { space, f: Arc::new(f), smooth: false }
    }

    /// Constant integrand `f ≡ c`.
    pub fn constant(c: LatticeElement) -> Self {
        let space = c.space();
        FnIntegrand::fallible(space, move |_, out| {
            out.copy_from_slice(c.coords());
            Ok(())
        })
        .smooth()
    }

    /// Marks the integrand as piecewise smooth on continuum segments.
    pub fn smooth(mut self) -> Self {
        self.smooth = true;
        self
    }
}

impl Integrand for FnIntegrand {
    fn space(&self) -> LatticeSpace {
        self.space
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrandError> {
        (self.f)(t, out)
    }

    fn oracle_eligible(&self) -> bool {
        self.smooth
    }
}

/// `Σ_k α_k f_k` over integrands sharing one space.
#[derive(Clone)]
pub struct LinearCombination {
    space: LatticeSpace,
    terms: Vec<(f64, SharedIntegrand)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, SharedIntegrand)>) -> Option<Self> {
        let space = terms.first()?.1.space();
        terms.iter().all(|(_, f)| f.space() == space).then_some(LinearCombination { space, terms })
    }
}

impl Integrand for LinearCombination {
    fn space(&self) -> LatticeSpace {
        self.space
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrandError> {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = [0.0; 8];
        let mut heap;
        let scratch: &mut [f64] = if out.len() <= buf.len() {
            &mut buf[..out.len()]
        } else {
            heap = vec![0.0; out.len()];
            &mut heap
        };
        for (alpha, f) in &self.terms {
            f.eval_into(t, scratch)?;
            for (o, v) in out.iter_mut().zip(scratch.iter()) {
                *o += alpha * v;
            }
        }
        Ok(())
    }

    fn oracle_eligible(&self) -> bool {
        self.terms.iter().all(|(_, f)| f.oracle_eligible())
    }
}

/// Scalar projection onto one coordinate of a vector integrand.
#[derive(Clone)]
pub struct Coordinate {
    inner: SharedIntegrand,
    index: usize,
}

impl Coordinate {
    pub fn new(inner: SharedIntegrand, index: usize) -> Option<Self> {
        (index < inner.space().dim()).then_some(Coordinate { inner, index })
    }
}

impl Integrand for Coordinate {
    fn space(&self) -> LatticeSpace {
        LatticeSpace::scalar()
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrandError> {
        let mut buf = vec![0.0; self.inner.space().dim()];
        self.inner.eval_into(t, &mut buf)?;
        out[0] = buf[self.index];
        Ok(())
    }

    fn oracle_eligible(&self) -> bool {
        self.inner.oracle_eligible()
    }
}
