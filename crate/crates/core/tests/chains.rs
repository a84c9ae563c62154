mod common;

use common::*;
use sr_mcmc::chains::{run_chain, step, ChainKind, ChainSpec, DeleteFactor, ProjectionBranches};
use sr_mcmc::diagnostics::empirical_marginals;
use sr_mcmc::exact::transition_matrix;
use sr_mcmc::measures::Measure;
use sr_mcmc::rng::stream;
use sr_mcmc::{Move, SubsetState};

/// One step from `from`, repeated; the empirical law of the next state must
/// match the exact transition row within 4σ in every cell.
fn check_row(m: &dyn Measure, kind: ChainKind, from: u64, trials: usize, seed: u64) {
    let n = m.ground_size();
    let p = transition_matrix(m, kind, DeleteFactor::Balanced).unwrap();
    let row = p.index_of(from).unwrap();
    let mut counts = vec![0usize; p.states().len()];
    let mut rng = stream(seed, 0);
    let start = SubsetState::from_mask(n, from);
    for _ in 0..trials {
        let mut ev = m.evaluator(start.clone()).unwrap();
        step(kind, DeleteFactor::Balanced, ev.as_mut(), &mut rng).unwrap();
        counts[p.index_of(ev.state().to_mask()).unwrap()] += 1;
    }
    for (col, &c) in counts.iter().enumerate() {
        let want = p.matrix()[(row, col)];
        let got = c as f64 / trials as f64;
        let sigma = (want * (1.0 - want) / trials as f64).sqrt();
        assert!(
            (got - want).abs() <= 4.0 * sigma + 1e-12,
            "{kind:?} from {from:#b} to {:#b}: {got} vs {want}",
            p.states()[col]
        );
    }
}

#[test]
fn stepper_laws_match_exact_rows() {
    let fixtures_n4 = fixtures(4);
    for (i, f) in fixtures_n4.iter().enumerate() {
        let n = f.measure.ground_size();
        for kind in ChainKind::ALL {
            let p = transition_matrix(&*f.measure, kind, DeleteFactor::Balanced).unwrap();
            for (j, &from) in p.states().iter().enumerate().step_by(3) {
                check_row(&*f.measure, kind, from, 20_000, (i * 100 + j) as u64 + 7 * n as u64);
            }
        }
    }
}

#[test]
fn projection_branch_frequencies() {
    // uniform measure: every proposal is accepted with probability
    // min(1, factor) and the branch choice alone fixes the move type
    let n = 6;
    let m = sr_mcmc::measures::TableMeasure::uniform(n).unwrap();
    let s = SubsetState::from_members(n, &[0, 1]).unwrap();
    let b = ProjectionBranches::new(n, 2);
    let trials = 100_000;
    let mut rng = stream(FIXTURE_SEED, 11);
    let (mut adds, mut swaps, mut dels) = (0usize, 0usize, 0usize);
    for _ in 0..trials {
        let mut ev = m.evaluator(s.clone()).unwrap();
        let out = step(ChainKind::Projection, DeleteFactor::Balanced, ev.as_mut(), &mut rng).unwrap();
        match out.proposal {
            Move::Add(_) => adds += 1,
            Move::Swap { .. } => swaps += 1,
            Move::Delete(_) => dels += 1,
            Move::Hold => {}
        }
    }
    let expect = [b.add_end, b.exchange_end - b.add_end, b.delete_end - b.exchange_end];
    for (count, p) in [adds, swaps, dels].into_iter().zip(expect) {
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((count as f64 / trials as f64 - p).abs() <= 4.0 * sigma);
    }
    assert!((expect[0] - 16.0 / 72.0).abs() < 1e-15);
    assert!((expect[1] - 8.0 / 72.0).abs() < 1e-15);
    assert!((expect[2] - 4.0 / 72.0).abs() < 1e-15);
}

#[test]
fn projection_marginals_on_diagonal_dpp() {
    let l = sr_mcmc::LEnsemble::from_diagonal(&[2.0, 3.0]).unwrap();
    let specs: Vec<_> =
        (0..4).map(|c| ChainSpec::new(ChainKind::Projection, 400_000, 3).with_stream(c).with_thin(40)).collect();
    let ts = sr_mcmc::run_chains(&l, &specs).unwrap();
    let est = empirical_marginals(&ts).unwrap();
    for (i, want) in [2.0 / 3.0, 0.75].into_iter().enumerate() {
        assert!((est.marginals[i] - want).abs() <= 3.0 * est.naive_std_errors[i], "{i}: {:?}", est);
    }
}

#[test]
fn add_delete_marginals_on_product() {
    let q = product(5);
    let t = run_chain(&q, &ChainSpec::new(ChainKind::AddDelete, 500_000, 9).with_thin(25)).unwrap();
    let est = empirical_marginals(&[t]).unwrap();
    for (i, &want) in [0.3, 0.8, 0.45, 0.65, 0.2].iter().enumerate() {
        assert!((est.marginals[i] - want).abs() <= 3.0 * est.naive_std_errors[i]);
    }
}

#[test]
fn exchange_marginals_sum_to_k() {
    let m = conditioned_uniform(7);
    let spec =
        ChainSpec::new(ChainKind::Exchange, 5_000, 1).with_init(sr_mcmc::InitStrategy::ExplicitSet(vec![0, 2, 4, 6]));
    let t = run_chain(&m, &spec).unwrap();
    let est = empirical_marginals(&[t]).unwrap();
    assert!((est.marginals.iter().sum::<f64>() - 4.0).abs() < 1e-12);
}
