//! The three lazy Markov chains on `2^V`.
//!
//! * [`ChainKind::AddDelete`]: Metropolis add/delete moves.
//! * [`ChainKind::Exchange`]: swap moves for homogeneous measures.
//! * [`ChainKind::Projection`]: the mixture of add, exchange and delete
//!   moves obtained by projecting the exchange chain of the symmetric
//!   homogenization back onto `V`.
//!
//! Each stepper draws its randomness in a fixed order, so a chain is a
//! deterministic function of its seed.

mod bounds;
mod runner;

pub use bounds::{exchange_bound, theorem_bound};
pub use runner::{resolve_init, run_chain, run_chains, Chain, ChainSpec, InitStrategy, Record, Transcript};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measures::ChainEvaluator;
use crate::subset::Move;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    AddDelete,
    Exchange,
    Projection,
}

impl ChainKind {
    pub const ALL: [ChainKind; 3] = [ChainKind::AddDelete, ChainKind::Exchange, ChainKind::Projection];

    pub fn name(self) -> &'static str {
        match self {
            ChainKind::AddDelete => "add-delete",
            ChainKind::Exchange => "exchange",
            ChainKind::Projection => "projection",
        }
    }
}

/// Correction factor applied to delete moves of the projection chain.
///
/// Projecting the homogenized exchange chain gives a delete acceptance of
/// `min{1, π(S\{s})/π(S) · (N-|S|+1)/|S|}` ([`DeleteFactor::Balanced`]),
/// which makes the chain reversible with respect to `π`. The reciprocal
/// `|S|/(N-|S|+1)` ([`DeleteFactor::Inverted`]) is kept only to demonstrate
/// that it breaks stationarity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeleteFactor {
    #[default]
    Balanced,
    Inverted,
}

impl DeleteFactor {
    /// Multiplier on `π(S\{s})/π(S)` for a state of cardinality `k ≥ 1`.
    pub fn factor(self, n: usize, k: usize) -> f64 {
        let (n, k) = (n as f64, k as f64);
        match self {
            DeleteFactor::Balanced => (n - k + 1.0) / k,
            DeleteFactor::Inverted => k / (n - k + 1.0),
        }
    }
}

/// Multiplier on `π(S∪{t})/π(S)` for add moves of the projection chain.
pub fn projection_add_factor(n: usize, k: usize) -> f64 {
    (k as f64 + 1.0) / (n - k) as f64
}

/// What one step proposed and whether it was taken.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveOutcome {
    pub proposal: Move,
    pub accepted: bool,
    pub acceptance_prob: f64,
}

impl MoveOutcome {
    pub const HOLD: MoveOutcome = MoveOutcome { proposal: Move::Hold, accepted: true, acceptance_prob: 1.0 };
}

/// Upper ends of the add, exchange and delete intervals for `q ~ U[0,1)`;
/// the remainder `[delete_end, 1)` holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionBranches {
    pub add_end: f64,
    pub exchange_end: f64,
    pub delete_end: f64,
}

impl ProjectionBranches {
    pub fn new(n: usize, k: usize) -> Self {
        let (nf, kf) = (n as f64, k as f64);
        let n2 = 2.0 * nf * nf;
        ProjectionBranches {
            add_end: (nf - kf).powi(2) / n2,
            exchange_end: (nf - kf) / (2.0 * nf),
            delete_end: (kf * kf + nf * (nf - kf)) / n2,
        }
    }
}

fn accept<R: Rng + ?Sized>(
    ev: &mut dyn ChainEvaluator,
    rng: &mut R,
    proposal: Move,
    ratio: f64,
) -> Result<MoveOutcome> {
    let acceptance_prob = if ratio.is_nan() { 0.0 } else { ratio.min(1.0) };
    let accepted = rng.random::<f64>() < acceptance_prob;
    if accepted {
        ev.apply(&proposal)?;
    }
    Ok(MoveOutcome { proposal, accepted, acceptance_prob })
}

/// One lazy add/delete step: hold with probability ½, otherwise propose a
/// uniform `t ∈ V` and toggle it with probability `min{1, ratio}`.
pub fn step_add_delete<R: Rng + ?Sized>(ev: &mut dyn ChainEvaluator, rng: &mut R) -> Result<MoveOutcome> {
    let n = ev.state().ground_size();
    if rng.random::<f64>() < 0.5 || n == 0 {
        return Ok(MoveOutcome::HOLD);
    }
    let t = rng.random_range(0..n);
    if ev.state().contains(t) {
        let r = ev.delete_ratio(t);
        accept(ev, rng, Move::Delete(t), r)
    } else {
        let r = ev.add_ratio(t);
        accept(ev, rng, Move::Add(t), r)
    }
}

/// One lazy exchange step: hold with probability ½, otherwise swap a uniform
/// `s ∈ S` with a uniform `t ∉ S` with probability `min{1, ratio}`. States
/// with `|S| ∈ {0, N}` always hold.
pub fn step_exchange<R: Rng + ?Sized>(ev: &mut dyn ChainEvaluator, rng: &mut R) -> Result<MoveOutcome> {
    let n = ev.state().ground_size();
    let k = ev.state().cardinality();
    if rng.random::<f64>() < 0.5 || k == 0 || k == n {
        return Ok(MoveOutcome::HOLD);
    }
    let s = ev.state().nth_member(rng.random_range(0..k));
    let t = ev.state().nth_non_member(rng.random_range(0..n - k));
    let r = ev.swap_ratio(s, t);
    accept(ev, rng, Move::Swap { out: s, into: t }, r)
}

/// One projection-chain step. Draws `q`, then `t ∈ V\S`, then `s ∈ S`, each
/// only if the selected branch needs it.
pub fn step_projection<R: Rng + ?Sized>(
    ev: &mut dyn ChainEvaluator,
    rng: &mut R,
    delete_factor: DeleteFactor,
) -> Result<MoveOutcome> {
    let n = ev.state().ground_size();
    let k = ev.state().cardinality();
    let q = rng.random::<f64>();
    if n == 0 {
        return Ok(MoveOutcome::HOLD);
    }
    let branches = ProjectionBranches::new(n, k);
    if q < branches.add_end {
        let t = ev.state().nth_non_member(rng.random_range(0..n - k));
        let r = ev.add_ratio(t) * projection_add_factor(n, k);
        accept(ev, rng, Move::Add(t), r)
    } else if q < branches.exchange_end {
        let t = ev.state().nth_non_member(rng.random_range(0..n - k));
        let s = ev.state().nth_member(rng.random_range(0..k));
        let r = ev.swap_ratio(s, t);
        accept(ev, rng, Move::Swap { out: s, into: t }, r)
    } else if q < branches.delete_end {
        let s = ev.state().nth_member(rng.random_range(0..k));
        let r = ev.delete_ratio(s) * delete_factor.factor(n, k);
        accept(ev, rng, Move::Delete(s), r)
    } else {
        Ok(MoveOutcome::HOLD)
    }
}

/// Dispatches one step of the given chain.
pub fn step<R: Rng + ?Sized>(
    kind: ChainKind,
    delete_factor: DeleteFactor,
    ev: &mut dyn ChainEvaluator,
    rng: &mut R,
) -> Result<MoveOutcome> {
    match kind {
        ChainKind::AddDelete => step_add_delete(ev, rng),
        ChainKind::Exchange => step_exchange(ev, rng),
        ChainKind::Projection => step_projection(ev, rng, delete_factor),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp::LEnsemble;
    use crate::measures::{CardinalityConditioned, Measure, TableMeasure};
    use crate::rng::stream;
    use crate::subset::SubsetState;

    #[test]
    fn projection_intervals_at_four() {
        let b = ProjectionBranches::new(4, 1);
        assert_eq!(b.add_end, 9.0 / 32.0);
        assert_eq!(b.exchange_end, 12.0 / 32.0);
        assert_eq!(b.delete_end, 13.0 / 32.0);
    }

    #[test]
    fn degenerate_branches_have_zero_width() {
        let empty = ProjectionBranches::new(5, 0);
        assert_eq!(empty.add_end, empty.exchange_end);
        assert_eq!(empty.exchange_end, empty.delete_end);
        let full = ProjectionBranches::new(5, 5);
        assert_eq!(full.add_end, 0.0);
        assert_eq!(full.exchange_end, 0.0);
    }

    #[test]
    fn delete_factors() {
        assert_eq!(DeleteFactor::Balanced.factor(2, 1), 2.0);
        assert_eq!(DeleteFactor::Inverted.factor(2, 1), 0.5);
        assert_eq!(projection_add_factor(1, 0), 1.0);
    }

    #[test]
    fn diag_dpp_add_is_always_accepted() {
        let l = LEnsemble::from_diagonal(&[2.0, 3.0]).unwrap();
        let mut rng = stream(1, 0);
        for _ in 0..200 {
            let mut ev = l.evaluator(SubsetState::empty(2)).unwrap();
            let out = step_add_delete(ev.as_mut(), &mut rng).unwrap();
            if let Move::Add(_) = out.proposal {
                assert_eq!(out.acceptance_prob, 1.0);
                assert!(out.accepted);
            }
        }
    }

    #[test]
    fn zero_weight_targets_are_rejected() {
        // π({0}) = 0, so neither chain may enter it
        let table = TableMeasure::from_weights(vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        let mut rng = stream(2, 0);
        let mut ev = table.evaluator(SubsetState::empty(2)).unwrap();
        for _ in 0..2000 {
            let before = ev.state().clone();
            let out = step_add_delete(ev.as_mut(), &mut rng).unwrap();
            if before.with_move(&out.proposal).unwrap().members() == [0] {
                assert_eq!(out.acceptance_prob, 0.0);
            }
            assert!(ev.log_weight().is_positive());
            let before = ev.state().clone();
            let out = step_projection(ev.as_mut(), &mut rng, DeleteFactor::Balanced).unwrap();
            if before.with_move(&out.proposal).unwrap().members() == [0] {
                assert_eq!(out.acceptance_prob, 0.0);
            }
            assert!(ev.log_weight().is_positive());
        }
    }

    #[test]
    fn exchange_preserves_cardinality() {
        let base = TableMeasure::from_weights((0..64).map(|m| 1.0 + m as f64).collect()).unwrap();
        let m = CardinalityConditioned::new(base, 3).unwrap();
        let mut ev = m.evaluator(SubsetState::from_members(6, &[0, 2, 4]).unwrap()).unwrap();
        let mut rng = stream(3, 0);
        for _ in 0..5000 {
            step_exchange(ev.as_mut(), &mut rng).unwrap();
            assert_eq!(ev.state().cardinality(), 3);
        }
    }

    #[test]
    fn exchange_holds_at_extreme_cardinalities() {
        let t = TableMeasure::uniform(3).unwrap();
        let mut rng = stream(4, 0);
        for s in [SubsetState::empty(3), SubsetState::full(3)] {
            let mut ev = t.evaluator(s.clone()).unwrap();
            for _ in 0..100 {
                assert_eq!(step_exchange(ev.as_mut(), &mut rng).unwrap(), MoveOutcome::HOLD);
            }
            assert_eq!(ev.state(), &s);
        }
    }
}
