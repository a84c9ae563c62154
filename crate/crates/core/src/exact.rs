//! Brute-force oracles for small ground sets.
//!
//! Everything here enumerates `2^N` states and works with dense matrices, so
//! it is only meant for `N` up to about ten. The transition matrices are
//! built from the enumerated log-weights, independently of the chain
//! evaluators, and therefore serve as a check on the samplers.

use nalgebra::DMatrix;

use crate::chains::{projection_add_factor, ChainKind, DeleteFactor, ProjectionBranches};
use crate::error::{arg, Error, Result};
use crate::measures::{Measure, SymmetricHomogenization};
use crate::subset::{LogWeight, SubsetState};

/// Largest ground set [`enumerate_distribution`] accepts.
pub const MAX_ENUMERATION: usize = 20;
/// Largest ground set for add/delete and projection matrices.
pub const MAX_CHAIN_MATRIX: usize = 10;
/// Largest ground set for exchange matrices (homogenizations of `N ≤ 6`).
pub const MAX_EXCHANGE_MATRIX: usize = 12;
/// Largest base ground set for the lumped exchange construction.
pub const MAX_LUMPING: usize = 6;
/// Largest ground set for the log-submodularity sweep.
pub const MAX_SUBMODULARITY: usize = 12;
/// Entrywise tolerance for lumpability.
pub const LUMPING_TOL: f64 = 1e-12;
/// Pass threshold for stationarity and detailed-balance residuals.
pub const STATIONARITY_TOL: f64 = 1e-10;
/// Steps allowed before the first TV crossing.
pub const MAX_MIXING_STEPS: usize = 10_000_000;

/// A normalized distribution over all subsets, indexed by bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    n: usize,
    probabilities: Vec<f64>,
    log_normalizer: f64,
}

impl ExactDistribution {
    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, mask: u64) -> f64 {
        self.probabilities[mask as usize]
    }

    /// `log Z` with `Z = Σ_S π(S)` for the unnormalized input weights.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// `Pr(S ⊆ T)` for the given elements.
    pub fn inclusion_probability(&self, members: &[usize]) -> f64 {
        let want = members.iter().fold(0u64, |acc, &i| acc | 1 << i);
        self.probabilities.iter().enumerate().filter(|(mask, _)| *mask as u64 & want == want).map(|(_, p)| p).sum()
    }
}

fn log_weight_table<M: Measure + ?Sized>(measure: &M) -> Result<Vec<LogWeight>> {
    let n = measure.ground_size();
    (0..1u64 << n).map(|mask| measure.log_weight(&SubsetState::from_mask(n, mask))).collect()
}

/// Normalizes the weights of every subset.
pub fn enumerate_distribution<M: Measure + ?Sized>(measure: &M) -> Result<ExactDistribution> {
    let n = measure.ground_size();
    if n > MAX_ENUMERATION {
        return Err(Error::Size(format!("enumeration supports N <= {MAX_ENUMERATION}, got {n}")));
    }
    let table = log_weight_table(measure)?;
    let max = table.iter().map(|w| w.value()).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Domain("every subset has weight zero".into()));
    }
    let mut probabilities: Vec<f64> = table.iter().map(|w| (w.value() - max).exp()).collect();
    let total: f64 = probabilities.iter().sum();
    probabilities.iter_mut().for_each(|p| *p /= total);
    Ok(ExactDistribution { n, probabilities, log_normalizer: max + total.ln() })
}

/// `P(i ∈ T)` for every element.
pub fn exact_marginals(dist: &ExactDistribution) -> Vec<f64> {
    let mut marginals = vec![0.0; dist.n];
    for (mask, &p) in dist.probabilities.iter().enumerate() {
        for (i, m) in marginals.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *m += p;
            }
        }
    }
    marginals
}

/// Sums a distribution on `2N` elements over the shadow coordinates
/// `[N, 2N)`, giving a distribution on the first `N`.
pub fn marginalize_shadow(dist: &ExactDistribution) -> Result<Vec<f64>> {
    if !dist.n.is_multiple_of(2) {
        return arg("shadow marginalization needs an even ground set");
    }
    let n = dist.n / 2;
    let low = (1u64 << n) - 1;
    let mut out = vec![0.0; 1 << n];
    for (mask, &p) in dist.probabilities.iter().enumerate() {
        out[(mask as u64 & low) as usize] += p;
    }
    Ok(out)
}

/// A row-stochastic matrix over an explicit list of states (bitmasks).
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    states: Vec<u64>,
    matrix: DMatrix<f64>,
}

impl TransitionMatrix {
    fn new(n: usize, states: Vec<u64>) -> Self {
        let m = states.len();
        TransitionMatrix { n, states, matrix: DMatrix::zeros(m, m) }
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    /// State bitmasks in row order (ascending).
    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }

    /// One-step probability between two states; 0 for states not listed.
    pub fn probability(&self, from: u64, to: u64) -> f64 {
        match (self.index_of(from), self.index_of(to)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => 0.0,
        }
    }

    /// Largest `|Σ_j P_ij - 1|`.
    pub fn max_row_defect(&self) -> f64 {
        self.matrix.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.matrix.min()
    }

    /// `π` restricted to this matrix's states, in row order.
    pub fn restrict(&self, dist: &ExactDistribution) -> Result<Vec<f64>> {
        if dist.n != self.n {
            return arg(format!("distribution has N = {}, matrix has N = {}", dist.n, self.n));
        }
        Ok(self.states.iter().map(|&m| dist.probability(m)).collect())
    }

    /// Largest entrywise difference; both matrices must list the same states.
    pub fn max_abs_difference(&self, other: &TransitionMatrix) -> Result<f64> {
        if self.states != other.states {
            return Err(Error::Consistency(format!(
                "state lists differ ({} vs {} states)",
                self.states.len(),
                other.states.len()
            )));
        }
        Ok((&self.matrix - &other.matrix).amax())
    }

    fn sparse_rows(&self) -> Vec<Vec<(usize, f64)>> {
        self.matrix
            .row_iter()
            .map(|r| r.iter().enumerate().filter(|(_, &p)| p != 0.0).map(|(j, &p)| (j, p)).collect())
            .collect()
    }
}

fn positive_states(table: &[LogWeight]) -> Vec<u64> {
    table.iter().enumerate().filter(|(_, w)| w.is_positive()).map(|(m, _)| m as u64).collect()
}

/// Exact one-step law of a chain, expanded over every proposal. States of
/// weight zero are left out; moves into them carry acceptance 0 and their
/// mass stays on the diagonal.
pub fn transition_matrix<M: Measure + ?Sized>(
    measure: &M,
    kind: ChainKind,
    delete_factor: DeleteFactor,
) -> Result<TransitionMatrix> {
    let n = measure.ground_size();
    let limit = match kind {
        ChainKind::Exchange => MAX_EXCHANGE_MATRIX,
        _ => MAX_CHAIN_MATRIX,
    };
    if n > limit {
        return Err(Error::Size(format!("{} transition matrix supports N <= {limit}, got {n}", kind.name())));
    }
    let table = log_weight_table(measure)?;
    let states = positive_states(&table);
    if states.is_empty() {
        return Err(Error::Domain("every subset has weight zero".into()));
    }
    let mut p = TransitionMatrix::new(n, states);
    let nf = n as f64;

    for row in 0..p.states.len() {
        let from = p.states[row];
        let lw = table[from as usize];
        let ratio = |to: u64| table[to as usize].ratio_over(lw).expect("row state is positive");
        let k = from.count_ones() as usize;
        let inside: Vec<usize> = (0..n).filter(|&i| from >> i & 1 == 1).collect();
        let outside: Vec<usize> = (0..n).filter(|&i| from >> i & 1 == 0).collect();
        let mut moves: Vec<(u64, f64)> = Vec::new();

        match kind {
            ChainKind::AddDelete => {
                for i in 0..n {
                    let to = from ^ 1 << i;
                    moves.push((to, ratio(to).min(1.0) / (2.0 * nf)));
                }
            }
            ChainKind::Exchange => {
                if 0 < k && k < n {
                    let pair = 1.0 / (2.0 * k as f64 * (n - k) as f64);
                    for &s in &inside {
                        for &t in &outside {
                            let to = from ^ 1 << s ^ 1 << t;
                            moves.push((to, ratio(to).min(1.0) * pair));
                        }
                    }
                }
            }
            ChainKind::Projection => {
                let b = ProjectionBranches::new(n, k);
                let add_mass = b.add_end;
                let exchange_mass = b.exchange_end - b.add_end;
                let delete_mass = b.delete_end - b.exchange_end;
                for &t in &outside {
                    let to = from | 1 << t;
                    let acc = (ratio(to) * projection_add_factor(n, k)).min(1.0);
                    moves.push((to, add_mass / (n - k) as f64 * acc));
                }
                for &s in &inside {
                    for &t in &outside {
                        let to = from ^ 1 << s ^ 1 << t;
                        let acc = ratio(to).min(1.0);
                        moves.push((to, exchange_mass / (k * (n - k)) as f64 * acc));
                    }
                }
                for &s in &inside {
                    let to = from & !(1 << s);
                    let acc = (ratio(to) * delete_factor.factor(n, k)).min(1.0);
                    moves.push((to, delete_mass / k as f64 * acc));
                }
            }
        }

        let mut leave = 0.0;
        for (to, prob) in moves {
            if prob > 0.0 {
                let col = p.index_of(to).expect("accepted targets have positive weight");
                p.matrix[(row, col)] += prob;
                leave += prob;
            }
        }
        p.matrix[(row, row)] += 1.0 - leave;
    }
    Ok(p)
}

/// `max_S |(πP)(S) - π(S)|`.
pub fn stationarity_check(p: &TransitionMatrix, dist: &ExactDistribution) -> Result<f64> {
    let pi = p.restrict(dist)?;
    let m = pi.len();
    let mut worst = 0.0f64;
    for j in 0..m {
        let flow: f64 = (0..m).map(|i| pi[i] * p.matrix[(i, j)]).sum();
        worst = worst.max((flow - pi[j]).abs());
    }
    // mass of π outside the listed states is lost by construction
    let outside = 1.0 - pi.iter().sum::<f64>();
    Ok(worst.max(outside.abs()))
}

/// `max_{S,S'} |π(S) P(S,S') - π(S') P(S',S)|`.
pub fn detailed_balance_check(p: &TransitionMatrix, dist: &ExactDistribution) -> Result<f64> {
    let pi = p.restrict(dist)?;
    let m = pi.len();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in i + 1..m {
            let gap = pi[i] * p.matrix[(i, j)] - pi[j] * p.matrix[(j, i)];
            worst = worst.max(gap.abs());
        }
    }
    Ok(worst)
}

/// Builds the exchange chain of the symmetric homogenization `π_sh` on
/// `2N` elements, checks that it is lumpable with respect to `R ↦ R ∩ V`,
/// and returns the lumped chain on `2^V`.
pub fn lumped_exchange_matrix<M: Measure + ?Sized>(base: &M) -> Result<TransitionMatrix> {
    let n = base.ground_size();
    if n > MAX_LUMPING {
        return Err(Error::Size(format!("lumped exchange matrix supports N <= {MAX_LUMPING}, got {n}")));
    }
    let sh = SymmetricHomogenization::new(base)?;
    let full = transition_matrix(&sh, ChainKind::Exchange, DeleteFactor::default())?;
    let low = (1u64 << n) - 1;

    let mut lumped_states: Vec<u64> = full.states.iter().map(|r| r & low).collect();
    lumped_states.sort_unstable();
    lumped_states.dedup();
    let mut lumped = TransitionMatrix::new(n, lumped_states);

    let mut seen = vec![false; lumped.states.len()];
    for (row, &r) in full.states.iter().enumerate() {
        let class = lumped.index_of(r & low).expect("class listed");
        let mut projected = vec![0.0; lumped.states.len()];
        for (col, &r2) in full.states.iter().enumerate() {
            let prob = full.matrix[(row, col)];
            if prob != 0.0 {
                projected[lumped.index_of(r2 & low).expect("class listed")] += prob;
            }
        }
        if !seen[class] {
            seen[class] = true;
            for (j, v) in projected.into_iter().enumerate() {
                lumped.matrix[(class, j)] = v;
            }
            continue;
        }
        for (j, v) in projected.into_iter().enumerate() {
            let gap = (lumped.matrix[(class, j)] - v).abs();
            if gap > LUMPING_TOL {
                return Err(Error::Consistency(format!(
                    "not lumpable: states with projection {:#b} disagree by {gap:e} on transitions to {:#b}",
                    r & low,
                    lumped.states[j]
                )));
            }
        }
    }
    Ok(lumped)
}

/// `½ Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Exact mixing time from `s0` for each threshold in `eps`: the smallest
/// `t` with `TV(δ_{s0} P^{t'}, π) ≤ ε` for every `t'` from `t` up to ten
/// times the first crossing.
pub fn tv_mixing_times(p: &TransitionMatrix, dist: &ExactDistribution, s0: u64, eps: &[f64]) -> Result<Vec<usize>> {
    if let Some(&bad) = eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return arg(format!("eps must lie in (0, 1), got {bad}"));
    }
    let pi = p.restrict(dist)?;
    let start =
        p.index_of(s0).ok_or_else(|| Error::Argument(format!("initial state {s0:#b} is not a state of the chain")))?;
    let rows = p.sparse_rows();
    let mut mu = vec![0.0; pi.len()];
    mu[start] = 1.0;
    let mut next = vec![0.0; pi.len()];

    let mut first: Vec<Option<usize>> = vec![None; eps.len()];
    let mut last_violation: Vec<Option<usize>> = vec![None; eps.len()];
    let mut horizon = usize::MAX;
    let mut t = 0usize;
    loop {
        let tv = total_variation(&mu, &pi);
        for (e, &threshold) in eps.iter().enumerate() {
            if tv > threshold {
                last_violation[e] = Some(t);
            } else if first[e].is_none() {
                first[e] = Some(t);
            }
        }
        if horizon == usize::MAX && first.iter().all(Option::is_some) {
            horizon = 10 * first.iter().flatten().max().copied().unwrap_or(0);
        }
        if t >= horizon {
            break;
        }
        if horizon == usize::MAX && t >= MAX_MIXING_STEPS {
            return Err(Error::NonConvergence(format!(
                "total variation still above threshold after {MAX_MIXING_STEPS} steps"
            )));
        }
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in rows.iter().enumerate() {
            let m = mu[i];
            if m != 0.0 {
                for &(j, prob) in row {
                    next[j] += m * prob;
                }
            }
        }
        std::mem::swap(&mut mu, &mut next);
        t += 1;
    }
    Ok(last_violation.into_iter().map(|v| v.map_or(0, |t| t + 1)).collect())
}

/// [`tv_mixing_times`] for a single threshold.
pub fn tv_mixing_time(p: &TransitionMatrix, dist: &ExactDistribution, s0: u64, eps: f64) -> Result<usize> {
    Ok(tv_mixing_times(p, dist, s0, &[eps])?[0])
}

/// Outcome of an exhaustive log-submodularity sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SubmodularityReport {
    pub holds: bool,
    /// Smallest `log π(S) + log π(T) - log π(S∪T) - log π(S∩T)` over pairs
    /// of positive-weight sets (`+∞` when no pair constrains anything).
    pub worst_slack: f64,
    /// A pair attaining the worst slack.
    pub witness: Option<(u64, u64)>,
}

/// Slack below `-SUBMODULARITY_TOL` counts as a violation.
pub const SUBMODULARITY_TOL: f64 = 1e-9;

pub fn check_log_submodular<M: Measure + ?Sized>(measure: &M) -> Result<SubmodularityReport> {
    let n = measure.ground_size();
    if n > MAX_SUBMODULARITY {
        return Err(Error::Size(format!("log-submodularity sweep supports N <= {MAX_SUBMODULARITY}, got {n}")));
    }
    let table = log_weight_table(measure)?;
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for s in 0..table.len() {
        let ls = table[s];
        if ls.is_zero() {
            continue;
        }
        for t in s..table.len() {
            let lt = table[t];
            if lt.is_zero() {
                continue;
            }
            let (union, meet) = (table[s | t], table[s & t]);
            // a zero on the right-hand side satisfies the inequality trivially
            if union.is_zero() || meet.is_zero() {
                continue;
            }
            let slack = ls.value() + lt.value() - union.value() - meet.value();
            if slack < worst {
                worst = slack;
                witness = Some((s as u64, t as u64));
            }
        }
    }
    Ok(SubmodularityReport { holds: worst >= -SUBMODULARITY_TOL, worst_slack: worst, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp::LEnsemble;
    use crate::measures::{CardinalityConditioned, ProductMeasure, TableMeasure};

    #[test]
    fn distributions() {
        let d = enumerate_distribution(&ProductMeasure::new(vec![0.5, 0.5]).unwrap()).unwrap();
        assert!(d.probabilities().iter().all(|p| (p - 0.25).abs() < 1e-15));
        let l = LEnsemble::from_diagonal(&[2.0, 3.0]).unwrap();
        let d = enumerate_distribution(&l).unwrap();
        for (got, want) in d.probabilities().iter().zip([1.0, 2.0, 3.0, 6.0]) {
            assert!((got - want / 12.0).abs() < 1e-14);
        }
        assert!((d.log_normalizer() - 12f64.ln()).abs() < 1e-14);
        let m = exact_marginals(&d);
        assert!((m[0] - 2.0 / 3.0).abs() < 1e-14 && (m[1] - 0.75).abs() < 1e-14);
        let c = CardinalityConditioned::new(TableMeasure::uniform(2).unwrap(), 1).unwrap();
        let d = enumerate_distribution(&c).unwrap();
        assert_eq!(d.probabilities(), &[0.0, 0.5, 0.5, 0.0]);
        let m = exact_marginals(&d);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn enumeration_limits() {
        let big = ProductMeasure::new(vec![0.5; 21]).unwrap();
        assert!(matches!(enumerate_distribution(&big), Err(Error::Size(_))));
    }

    #[test]
    fn uniform_add_delete_matrix() {
        let t = TableMeasure::uniform(3).unwrap();
        let p = transition_matrix(&t, ChainKind::AddDelete, DeleteFactor::default()).unwrap();
        for &a in p.states() {
            for &b in p.states() {
                let want = match (a ^ b).count_ones() {
                    0 => 0.5,
                    1 => 1.0 / 6.0,
                    _ => 0.0,
                };
                assert!((p.probability(a, b) - want).abs() < 1e-15);
            }
        }
        assert!(p.max_row_defect() < 1e-12);
    }

    #[test]
    fn single_element_projection() {
        let t = TableMeasure::uniform(1).unwrap();
        let p = transition_matrix(&t, ChainKind::Projection, DeleteFactor::default()).unwrap();
        assert!((p.probability(0, 1) - 0.5).abs() < 1e-15);
        assert!((p.probability(1, 0) - 0.5).abs() < 1e-15);
        let d = enumerate_distribution(&t).unwrap();
        assert_eq!(tv_mixing_time(&p, &d, 0, 0.05).unwrap(), 1);
    }

    #[test]
    fn total_variation_extremes() {
        assert_eq!(total_variation(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
    }

    #[test]
    fn symmetric_chain_balances_uniform() {
        let t = TableMeasure::uniform(3).unwrap();
        let d = enumerate_distribution(&t).unwrap();
        for kind in ChainKind::ALL {
            let p = transition_matrix(&t, kind, DeleteFactor::default()).unwrap();
            assert!(stationarity_check(&p, &d).unwrap() < 1e-15);
            assert!(detailed_balance_check(&p, &d).unwrap() < 1e-15);
        }
    }

    #[test]
    fn erratum_on_diagonal_dpp() {
        let l = LEnsemble::from_diagonal(&[2.0, 3.0]).unwrap();
        let d = enumerate_distribution(&l).unwrap();
        let good = transition_matrix(&l, ChainKind::Projection, DeleteFactor::Balanced).unwrap();
        assert!(stationarity_check(&good, &d).unwrap() <= 1e-12);
        assert!(detailed_balance_check(&good, &d).unwrap() <= 1e-12);
        let bad = transition_matrix(&l, ChainKind::Projection, DeleteFactor::Inverted).unwrap();
        assert!(stationarity_check(&bad, &d).unwrap() > 1e-3);
    }

    #[test]
    fn lumped_two_state_chain() {
        let base = TableMeasure::from_weights(vec![0.3, 0.7]).unwrap();
        let lumped = lumped_exchange_matrix(&base).unwrap();
        assert!((lumped.probability(1, 0) - 3.0 / 14.0).abs() < 1e-15);
        let direct = transition_matrix(&base, ChainKind::Projection, DeleteFactor::Balanced).unwrap();
        assert!(lumped.max_abs_difference(&direct).unwrap() < 1e-15);
    }

    #[test]
    fn lumping_size_limit() {
        let big = ProductMeasure::new(vec![0.5; 7]).unwrap();
        assert!(matches!(lumped_exchange_matrix(&big), Err(Error::Size(_))));
    }

    #[test]
    fn submodularity() {
        let q = ProductMeasure::new(vec![0.2, 0.5, 0.7, 0.9]).unwrap();
        let r = check_log_submodular(&q).unwrap();
        assert!(r.holds && r.worst_slack.abs() < 1e-12);
        let sup = TableMeasure::from_weights(vec![1.0, 0.1, 0.1, 1.0]).unwrap();
        let r = check_log_submodular(&sup).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some((1, 2)));
        assert!((r.worst_slack - 2.0 * 0.1f64.ln()).abs() < 1e-14);
    }
}
