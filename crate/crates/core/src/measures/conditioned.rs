use crate::error::{arg, Error, Result};
use crate::measures::{check_add, check_delete, check_size, ChainEvaluator, Measure};
use crate::subset::{ElementId, LogWeight, Move, SubsetState};

/// `π'(S) ∝ π(S)` on `|S| = k`, zero elsewhere.
#[derive(Clone, Debug)]
pub struct CardinalityConditioned<M> {
    base: M,
    k: usize,
}

impl<M: Measure> CardinalityConditioned<M> {
    pub fn new(base: M, k: usize) -> Result<Self> {
        if k > base.ground_size() {
            return arg(format!("cardinality {k} exceeds ground set size {}", base.ground_size()));
        }
        Ok(CardinalityConditioned { base, k })
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl<M: Measure> Measure for CardinalityConditioned<M> {
    fn ground_size(&self) -> usize {
        self.base.ground_size()
    }

    fn log_weight(&self, s: &SubsetState) -> Result<LogWeight> {
        check_size(self.ground_size(), s)?;
        if s.cardinality() != self.k {
            return Ok(LogWeight::ZERO);
        }
        self.base.log_weight(s)
    }

    fn add_ratio(&self, s: &SubsetState, t: ElementId) -> Result<f64> {
        check_add(self.ground_size(), s, t)?;
        if self.log_weight(s)?.is_zero() {
            return Err(Error::Domain("ratio taken from a zero-weight state".into()));
        }
        Ok(0.0)
    }

    fn delete_ratio(&self, set: &SubsetState, s: ElementId) -> Result<f64> {
        check_delete(self.ground_size(), set, s)?;
        if self.log_weight(set)?.is_zero() {
            return Err(Error::Domain("ratio taken from a zero-weight state".into()));
        }
        Ok(0.0)
    }

    fn swap_ratio(&self, set: &SubsetState, s: ElementId, t: ElementId) -> Result<f64> {
        check_size(self.ground_size(), set)?;
        if set.cardinality() != self.k {
            check_delete(self.ground_size(), set, s)?;
            check_add(self.ground_size(), set, t)?;
            return Err(Error::Domain("ratio taken from a zero-weight state".into()));
        }
        self.base.swap_ratio(set, s, t)
    }

    fn evaluator(&self, state: SubsetState) -> Result<Box<dyn ChainEvaluator + '_>> {
        check_size(self.ground_size(), &state)?;
        let k = self.k;
        let inner = self.base.evaluator(state)?;
        Ok(Box::new(ConditionedEvaluator { inner, k }))
    }
}

/// Wraps the base measure's evaluator so conditioned chains keep any fast
/// path the base provides (e.g. Schur-complement ratios for k-DPPs).
struct ConditionedEvaluator<'a> {
    inner: Box<dyn ChainEvaluator + 'a>,
    k: usize,
}

impl ChainEvaluator for ConditionedEvaluator<'_> {
    fn state(&self) -> &SubsetState {
        self.inner.state()
    }

    fn log_weight(&self) -> LogWeight {
        if self.inner.state().cardinality() == self.k {
            self.inner.log_weight()
        } else {
            LogWeight::ZERO
        }
    }

    fn add_ratio(&mut self, _t: ElementId) -> f64 {
        0.0
    }

    fn delete_ratio(&mut self, _s: ElementId) -> f64 {
        0.0
    }

    fn swap_ratio(&mut self, s: ElementId, t: ElementId) -> f64 {
        if self.log_weight().is_zero() {
            return 0.0;
        }
        self.inner.swap_ratio(s, t)
    }

    fn apply(&mut self, mv: &Move) -> Result<()> {
        self.inner.apply(mv)
    }
}
