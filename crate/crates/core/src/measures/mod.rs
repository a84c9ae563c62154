//! Unnormalized measures on `2^V` and the per-chain evaluators the samplers
//! drive.
//!
//! Every measure exposes its weight in log domain together with the three
//! ratio queries the chains need. The default ratio implementations make two
//! weight calls; measures with cheaper specializations override them, and
//! may also hand out a stateful [`ChainEvaluator`] that keeps acceleration
//! structures for a single chain.

mod conditioned;
mod homogenization;
mod product;
mod table;

pub use conditioned::CardinalityConditioned;
pub use homogenization::{symmetric_homogenization, SymmetricHomogenization};
pub use product::ProductMeasure;
pub use table::TableMeasure;

use crate::error::{arg, Error, Result};
use crate::subset::{ElementId, LogWeight, Move, SubsetState};

/// An unnormalized measure `π: 2^V → R≥0`.
pub trait Measure: Send + Sync {
    /// Size `N` of the ground set.
    fn ground_size(&self) -> usize;

    /// `log π(S)`; `-∞` iff `π(S) = 0`.
    fn log_weight(&self, s: &SubsetState) -> Result<LogWeight>;

    /// `π(S ∪ {t}) / π(S)` for `t ∉ S`.
    fn add_ratio(&self, s: &SubsetState, t: ElementId) -> Result<f64> {
        check_add(self.ground_size(), s, t)?;
        self.move_ratio(s, &Move::Add(t))
    }

    /// `π(S \ {s}) / π(S)` for `s ∈ S`.
    fn delete_ratio(&self, set: &SubsetState, s: ElementId) -> Result<f64> {
        check_delete(self.ground_size(), set, s)?;
        self.move_ratio(set, &Move::Delete(s))
    }

    /// `π(S ∪ {t} \ {s}) / π(S)` for `s ∈ S`, `t ∉ S`.
    fn swap_ratio(&self, set: &SubsetState, s: ElementId, t: ElementId) -> Result<f64> {
        check_delete(self.ground_size(), set, s)?;
        check_add(self.ground_size(), set, t)?;
        self.move_ratio(set, &Move::Swap { out: s, into: t })
    }

    /// A fresh evaluator positioned at `state`, owned by one chain.
    fn evaluator(&self, state: SubsetState) -> Result<Box<dyn ChainEvaluator + '_>> {
        Ok(Box::new(OracleEvaluator::new(self, state)?))
    }
}

impl<M: Measure + ?Sized> Measure for &M {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn log_weight(&self, s: &SubsetState) -> Result<LogWeight> {
        (**self).log_weight(s)
    }
    fn add_ratio(&self, s: &SubsetState, t: ElementId) -> Result<f64> {
        (**self).add_ratio(s, t)
    }
    fn delete_ratio(&self, set: &SubsetState, s: ElementId) -> Result<f64> {
        (**self).delete_ratio(set, s)
    }
    fn swap_ratio(&self, set: &SubsetState, s: ElementId, t: ElementId) -> Result<f64> {
        (**self).swap_ratio(set, s, t)
    }
    fn evaluator(&self, state: SubsetState) -> Result<Box<dyn ChainEvaluator + '_>> {
        (**self).evaluator(state)
    }
}

/// Generic two-evaluation ratio; shared by the default trait methods.
trait MoveRatio {
    fn move_ratio(&self, set: &SubsetState, mv: &Move) -> Result<f64>;
}

impl<M: Measure + ?Sized> MoveRatio for M {
    fn move_ratio(&self, set: &SubsetState, mv: &Move) -> Result<f64> {
        let base = self.log_weight(set)?;
        if base.is_zero() {
            return Err(Error::Domain("ratio taken from a zero-weight state".into()));
        }
        let next = set.with_move(mv)?;
        self.log_weight(&next)?.ratio_over(base)
    }
}

pub(crate) fn check_size(n: usize, s: &SubsetState) -> Result<()> {
    if s.ground_size() != n {
        return arg(format!("state has ground set size {}, measure has {n}", s.ground_size()));
    }
    Ok(())
}

pub(crate) fn check_add(n: usize, s: &SubsetState, t: ElementId) -> Result<()> {
    check_size(n, s)?;
    if t >= n {
        return arg(format!("element {t} out of range"));
    }
    if s.contains(t) {
        return arg(format!("element {t} is already in S"));
    }
    Ok(())
}

pub(crate) fn check_delete(n: usize, set: &SubsetState, s: ElementId) -> Result<()> {
    check_size(n, set)?;
    if s >= n {
        return arg(format!("element {s} out of range"));
    }
    if !set.contains(s) {
        return arg(format!("element {s} is not in S"));
    }
    Ok(())
}

/// Mutable per-chain view of a measure positioned at the current state.
///
/// Ratio queries are infallible: any argument the stepper would never issue
/// or any ratio out of a zero-weight state reads as `0`, which the chains
/// treat as a rejected move.
pub trait ChainEvaluator: Send {
    fn state(&self) -> &SubsetState;
    fn log_weight(&self) -> LogWeight;
    fn add_ratio(&mut self, t: ElementId) -> f64;
    fn delete_ratio(&mut self, s: ElementId) -> f64;
    fn swap_ratio(&mut self, s: ElementId, t: ElementId) -> f64;
    /// Commits an accepted move.
    fn apply(&mut self, mv: &Move) -> Result<()>;
}

/// Evaluator backed directly by a measure's ratio methods.
pub struct OracleEvaluator<'a, M: ?Sized> {
    measure: &'a M,
    state: SubsetState,
    log_weight: LogWeight,
}

impl<'a, M: Measure + ?Sized> OracleEvaluator<'a, M> {
    pub fn new(measure: &'a M, state: SubsetState) -> Result<Self> {
        let log_weight = measure.log_weight(&state)?;
        Ok(OracleEvaluator { measure, state, log_weight })
    }
}

impl<M: Measure + ?Sized> ChainEvaluator for OracleEvaluator<'_, M> {
    fn state(&self) -> &SubsetState {
        &self.state
    }

    fn log_weight(&self) -> LogWeight {
        self.log_weight
    }

    fn add_ratio(&mut self, t: ElementId) -> f64 {
        self.measure.add_ratio(&self.state, t).unwrap_or(0.0)
    }

    fn delete_ratio(&mut self, s: ElementId) -> f64 {
        self.measure.delete_ratio(&self.state, s).unwrap_or(0.0)
    }

    fn swap_ratio(&mut self, s: ElementId, t: ElementId) -> f64 {
        self.measure.swap_ratio(&self.state, s, t).unwrap_or(0.0)
    }

    fn apply(&mut self, mv: &Move) -> Result<()> {
        self.state.apply(mv)?;
        self.log_weight = self.measure.log_weight(&self.state)?;
        Ok(())
    }
}

/// `ln C(n, k)` through the log-gamma function.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n, "ln_binomial requires k <= n");
    use statrs::function::gamma::ln_gamma;
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_binomial_small_values() {
        assert_eq!(ln_binomial(5, 0), 0.0);
        assert!((ln_binomial(4, 2) - 6f64.ln()).abs() < 1e-13);
        assert!((ln_binomial(10, 5) - 252f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ratio_of_zero_weight_state_is_domain_error() {
        let table = TableMeasure::new(1, vec![0.0, 1.0]).unwrap();
        let empty = SubsetState::empty(1);
        assert!(matches!(table.add_ratio(&empty, 0), Err(Error::Domain(_))));
        let one = SubsetState::full(1);
        assert_eq!(table.delete_ratio(&one, 0).unwrap(), 0.0);
    }

    #[test]
    fn oracle_evaluator_tracks_weight() {
        let q = ProductMeasure::new(vec![0.3, 0.8]).unwrap();
        let mut ev = q.evaluator(SubsetState::empty(2)).unwrap();
        assert!((ev.log_weight().value() - (0.7f64 * 0.2).ln()).abs() < 1e-14);
        assert!((ev.add_ratio(1) - 4.0).abs() < 1e-12);
        assert_eq!(ev.delete_ratio(1), 0.0, "invalid queries read as zero");
        ev.apply(&Move::Add(1)).unwrap();
        assert!((ev.log_weight().value() - 0.56f64.ln()).abs() < 1e-14);
    }
}
