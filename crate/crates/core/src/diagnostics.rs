//! Convergence diagnostics over completed chains: the potential scale
//! reduction factor, summary-statistic extraction, pooled marginal
//! estimates and the multi-chain comparison protocol.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::{Chain, ChainKind, ChainSpec, DeleteFactor, InitStrategy, Transcript};
use crate::error::{arg, Result};
use crate::measures::Measure;
use crate::subset::SubsetState;

/// Below this, a variance counts as zero.
const VARIANCE_FLOOR: f64 = 1e-300;

/// Default number of chains run side by side.
pub const DEFAULT_CHAINS: usize = 10;
/// Default PSRF convergence threshold.
pub const DEFAULT_THRESHOLD: f64 = 1.05;

/// Scalar statistic tracked along a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// `|S|`
    Cardinality,
    /// `log π(S)` (unnormalized)
    LogWeight,
    /// `1[i ∈ S]`
    Indicator(usize),
}

impl Statistic {
    pub fn label(&self) -> String {
        match self {
            Statistic::Cardinality => "cardinality".into(),
            Statistic::LogWeight => "log-weight".into(),
            Statistic::Indicator(i) => format!("indicator-{i}"),
        }
    }

    fn of_members(&self, members: &[usize], log_weight: f64) -> f64 {
        match *self {
            Statistic::Cardinality => members.len() as f64,
            Statistic::LogWeight => log_weight,
            Statistic::Indicator(i) => members.contains(&i) as u8 as f64,
        }
    }

    fn of_state(&self, state: &SubsetState, log_weight: f64) -> f64 {
        match *self {
            Statistic::Cardinality => state.cardinality() as f64,
            Statistic::LogWeight => log_weight,
            Statistic::Indicator(i) => state.contains(i) as u8 as f64,
        }
    }
}

/// Aligned per-chain series of one statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct SummarySeries {
    pub statistic: Statistic,
    /// Iteration index of each retained value (shared by all chains).
    pub steps: Vec<usize>,
    pub chains: Vec<Vec<f64>>,
}

impl SummarySeries {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// PSRF over the first `n` retained values of every chain.
    pub fn psrf_prefix(&self, n: usize) -> Result<f64> {
        let prefixes: Vec<&[f64]> = self.chains.iter().map(|c| &c[..n]).collect();
        psrf(&prefixes)
    }

    /// `(retained count, R̂)` at every multiple of `stride` (at least 2).
    pub fn psrf_curve(&self, stride: usize) -> Result<Vec<(usize, f64)>> {
        evaluation_points(self.len(), stride).map(|n| Ok((n, self.psrf_prefix(n)?))).collect()
    }

    /// Smallest evaluated prefix length whose PSRF is at most `threshold`.
    pub fn iterations_to_threshold(&self, threshold: f64, stride: usize) -> Result<Option<usize>> {
        if !(threshold > 1.0) {
            return arg(format!("PSRF threshold must exceed 1, got {threshold}"));
        }
        for n in evaluation_points(self.len(), stride) {
            if self.psrf_prefix(n)? <= threshold {
                return Ok(Some(n));
            }
        }
        Ok(None)
    }
}

fn evaluation_points(len: usize, stride: usize) -> impl Iterator<Item = usize> {
    let stride = stride.max(1);
    (1..=len / stride).map(move |j| j * stride).filter(|&n| n >= 2)
}

/// Default evaluation stride for a series of `n` retained values.
pub fn default_stride(n: usize) -> usize {
    (n / 200).max(1)
}

fn sorted_sum(mut values: Vec<f64>) -> f64 {
    // fixed summation order keeps the result independent of chain order
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Gelman-Rubin potential scale reduction factor for `m ≥ 2` chains of
/// `n ≥ 2` values each:
///
/// `B = n/(m-1) Σ_j (x̄_j - x̄)²`, `W = mean_j s_j²`,
/// `V̂ = (n-1)/n W + B/n`, `R̂ = sqrt(V̂ / W)`.
///
/// Returns `+∞` when the chains are individually constant but disagree, and
/// `1` when every value is identical.
pub fn psrf<C: AsRef<[f64]>>(chains: &[C]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return arg(format!("PSRF needs at least 2 chains, got {m}"));
    }
    let n = chains[0].as_ref().len();
    if n < 2 {
        return arg(format!("PSRF needs at least 2 values per chain, got {n}"));
    }
    if let Some(c) = chains.iter().find(|c| c.as_ref().len() != n) {
        return arg(format!("chains have unequal lengths ({} vs {n})", c.as_ref().len()));
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.as_ref().iter().sum::<f64>() / nf).collect();
    let variances: Vec<f64> = chains
        .iter()
        .zip(&means)
        .map(|(c, mean)| c.as_ref().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0))
        .collect();
    let grand = sorted_sum(means.clone()) / m as f64;
    let between = nf / (m as f64 - 1.0) * sorted_sum(means.iter().map(|x| (x - grand).powi(2)).collect());
    let within = sorted_sum(variances) / m as f64;

    if within < VARIANCE_FLOOR {
        return Ok(if between < VARIANCE_FLOOR { 1.0 } else { f64::INFINITY });
    }
    let pooled = (nf - 1.0) / nf * within + between / nf;
    Ok((pooled / within).sqrt())
}

/// Aligns one statistic across transcripts of equal retained length.
pub fn extract_summary(transcripts: &[Transcript], statistic: Statistic) -> Result<SummarySeries> {
    if transcripts.len() < 2 {
        return arg(format!("need at least 2 transcripts, got {}", transcripts.len()));
    }
    let len = transcripts[0].records.len();
    if let Some(t) = transcripts.iter().find(|t| t.records.len() != len) {
        return arg(format!("transcripts have unequal lengths ({} vs {len})", t.records.len()));
    }
    let steps = transcripts[0].records.iter().map(|r| r.step).collect();
    let chains = transcripts
        .iter()
        .map(|t| t.records.iter().map(|r| statistic.of_members(&r.members, r.log_weight.value())).collect())
        .collect();
    Ok(SummarySeries { statistic, steps, chains })
}

/// Smallest retained count `n` (checked at multiples of `stride`) with
/// PSRF over the first `n` values at most `threshold`.
pub fn iterations_to_threshold(
    transcripts: &[Transcript],
    statistic: Statistic,
    threshold: f64,
    stride: usize,
) -> Result<Option<usize>> {
    extract_summary(transcripts, statistic)?.iterations_to_threshold(threshold, stride)
}

/// Pooled inclusion frequencies.
///
/// The standard errors are the i.i.d. binomial ones, `sqrt(p(1-p)/n)`; they
/// ignore autocorrelation along the chains and so understate the true error.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalEstimate {
    pub marginals: Vec<f64>,
    pub naive_std_errors: Vec<f64>,
    pub samples: usize,
}

pub fn empirical_marginals(transcripts: &[Transcript]) -> Result<MarginalEstimate> {
    let Some(first) = transcripts.first() else {
        return arg("need at least one transcript");
    };
    let n = first.ground_size;
    if transcripts.iter().any(|t| t.ground_size != n) {
        return arg("transcripts cover different ground sets");
    }
    let mut counts = vec![0usize; n];
    let mut samples = 0usize;
    for r in transcripts.iter().flat_map(|t| &t.records) {
        samples += 1;
        for &i in &r.members {
            counts[i] += 1;
        }
    }
    if samples == 0 {
        return arg("transcripts hold no records");
    }
    let marginals: Vec<f64> = counts.iter().map(|&c| c as f64 / samples as f64).collect();
    let naive_std_errors = marginals.iter().map(|p| (p * (1.0 - p) / samples as f64).sqrt()).collect();
    Ok(MarginalEstimate { marginals, naive_std_errors, samples })
}

/// Settings of a multi-chain convergence comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonSetup {
    pub kinds: Vec<ChainKind>,
    pub chains: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub init: InitStrategy,
    pub statistics: Vec<Statistic>,
    pub threshold: f64,
    /// Evaluation stride in retained values; `None` uses [`default_stride`].
    pub stride: Option<usize>,
}

impl ComparisonSetup {
    pub fn new(kinds: Vec<ChainKind>, steps: usize, seed: u64) -> Self {
        ComparisonSetup {
            kinds,
            chains: DEFAULT_CHAINS,
            steps,
            burn_in: 0,
            thin: 1,
            seed,
            init: InitStrategy::default(),
            statistics: vec![Statistic::Cardinality, Statistic::LogWeight],
            threshold: DEFAULT_THRESHOLD,
            stride: None,
        }
    }
}

/// Result for one (chain kind, statistic) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub kind: ChainKind,
    pub statistic: Statistic,
    /// Chain iteration at which the PSRF first met the threshold.
    pub iterations_to_threshold: Option<usize>,
    /// `(iteration, R̂)` pairs.
    pub curve: Vec<(usize, f64)>,
}

/// Runs `chains` independent chains of every kind (chain `i` of each kind on
/// stream `i` of the same seed) and reports when each statistic's PSRF
/// first drops to the threshold. Only the tracked statistics are stored.
pub fn compare_chains<M: Measure + ?Sized>(measure: &M, setup: &ComparisonSetup) -> Result<Vec<ComparisonRow>> {
    if setup.chains < 2 {
        return arg(format!("PSRF comparison needs at least 2 chains, got {}", setup.chains));
    }
    if setup.thin == 0 {
        return arg("thin must be at least 1");
    }
    let jobs: Vec<(ChainKind, usize)> =
        setup.kinds.iter().flat_map(|&k| (0..setup.chains).map(move |c| (k, c))).collect();
    let traces: Vec<(Vec<usize>, Vec<Vec<f64>>)> = jobs
        .par_iter()
        .map(|&(kind, c)| {
            let spec = ChainSpec {
                burn_in: setup.burn_in,
                thin: setup.thin,
                init: setup.init.clone(),
                delete_factor: DeleteFactor::default(),
                ..ChainSpec::new(kind, setup.steps, setup.seed).with_stream(c as u64)
            };
            trace_statistics(measure, &spec, &setup.statistics)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (ki, &kind) in setup.kinds.iter().enumerate() {
        let group = &traces[ki * setup.chains..(ki + 1) * setup.chains];
        let steps = group[0].0.clone();
        for (si, &statistic) in setup.statistics.iter().enumerate() {
            let series = SummarySeries {
                statistic,
                steps: steps.clone(),
                chains: group.iter().map(|(_, v)| v[si].clone()).collect(),
            };
            let stride = setup.stride.unwrap_or_else(|| default_stride(series.len()));
            let to_step = |n: usize| series.steps[n - 1];
            let hit = series.iterations_to_threshold(setup.threshold, stride)?;
            let curve = series.psrf_curve(stride)?.into_iter().map(|(n, r)| (to_step(n), r)).collect();
            rows.push(ComparisonRow { kind, statistic, iterations_to_threshold: hit.map(to_step), curve });
        }
    }
    Ok(rows)
}

/// Runs one chain and keeps only the requested statistics.
fn trace_statistics<M: Measure + ?Sized>(
    measure: &M,
    spec: &ChainSpec,
    statistics: &[Statistic],
) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let mut chain = Chain::new(measure, spec)?;
    for _ in 0..spec.burn_in {
        chain.step()?;
    }
    let kept = spec.steps / spec.thin;
    let mut steps = Vec::with_capacity(kept);
    let mut values = vec![Vec::with_capacity(kept); statistics.len()];
    for i in 1..=spec.steps {
        chain.step()?;
        if i % spec.thin == 0 {
            steps.push(chain.iteration());
            let lw = chain.log_weight().value();
            for (v, s) in values.iter_mut().zip(statistics) {
                v.push(s.of_state(chain.state(), lw));
            }
        }
    }
    Ok((steps, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::MoveOutcome;
    use crate::chains::{run_chain, Record};
    use crate::subset::{LogWeight, Move};

    #[test]
    fn identical_chains() {
        let r = psrf(&[vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        assert!((r - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sentinels() {
        assert_eq!(psrf(&[vec![0.0; 4], vec![1.0; 4]]).unwrap(), f64::INFINITY);
        assert_eq!(psrf(&[vec![2.0; 4], vec![2.0; 4]]).unwrap(), 1.0);
    }

    #[test]
    fn shape_errors() {
        assert!(psrf(&[vec![1.0, 2.0]]).is_err());
        assert!(psrf(&[vec![1.0], vec![2.0]]).is_err());
        assert!(psrf(&[vec![1.0, 2.0], vec![2.0, 3.0, 4.0]]).is_err());
    }

    #[test]
    fn permutation_invariance_is_exact() {
        let a = vec![0.3, 1.7, 2.2, 0.9, 1.1];
        let b = vec![1.3, 0.2, 2.9, 1.9, 0.4];
        let c = vec![2.3, 2.7, 0.1, 1.0, 3.1];
        let r1 = psrf(&[&a, &b, &c]).unwrap();
        let r2 = psrf(&[&c, &a, &b]).unwrap();
        assert_eq!(r1, r2);
    }

    fn transcript(states: &[&[usize]], n: usize) -> Transcript {
        Transcript {
            kind: ChainKind::Exchange,
            ground_size: n,
            initial: states[0].to_vec(),
            initial_log_weight: LogWeight::ONE,
            records: states
                .iter()
                .enumerate()
                .map(|(i, s)| Record {
                    step: i + 1,
                    members: s.to_vec(),
                    log_weight: LogWeight::ONE,
                    outcome: MoveOutcome { proposal: Move::Hold, accepted: true, acceptance_prob: 1.0 },
                })
                .collect(),
        }
    }

    #[test]
    fn extraction() {
        let t1 = transcript(&[&[0, 1], &[1, 2], &[0, 2]], 3);
        let t2 = transcript(&[&[0, 2], &[0, 1], &[1, 2]], 3);
        let s = extract_summary(&[t1.clone(), t2.clone()], Statistic::Cardinality).unwrap();
        assert!(s.chains.iter().flatten().all(|&v| v == 2.0));
        let s = extract_summary(&[t1.clone(), t2.clone()], Statistic::Indicator(0)).unwrap();
        assert_eq!(s.chains[0], vec![1.0, 0.0, 1.0]);
        let short = transcript(&[&[0, 1]], 3);
        assert!(extract_summary(&[t1.clone(), short], Statistic::Cardinality).is_err());
        assert!(extract_summary(&[t1], Statistic::Cardinality).is_err());
    }

    #[test]
    fn constant_transcript_marginals() {
        let t = transcript(&[&[0, 2], &[0, 2], &[0, 2]], 4);
        let m = empirical_marginals(&[t]).unwrap();
        assert_eq!(m.marginals, vec![1.0, 0.0, 1.0, 0.0]);
        assert!(m.naive_std_errors.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn stuck_chains_never_converge() {
        let a = transcript(&[&[0], &[0], &[0], &[0]], 2);
        let b = transcript(&[&[1, 0], &[1, 0], &[1, 0], &[1, 0]], 2);
        let hit = iterations_to_threshold(&[a.clone(), b.clone()], Statistic::Cardinality, 1.05, 1).unwrap();
        assert_eq!(hit, None);
        let hit = iterations_to_threshold(&[a, b], Statistic::Cardinality, f64::INFINITY, 1).unwrap();
        assert_eq!(hit, Some(2));
    }

    #[test]
    fn threshold_precondition() {
        let a = transcript(&[&[0], &[1]], 2);
        assert!(iterations_to_threshold(&[a.clone(), a], Statistic::Cardinality, 1.0, 1).is_err());
    }

    #[test]
    fn log_weight_values_on_diagonal_dpp() {
        let l = crate::dpp::LEnsemble::from_diagonal(&[2.0, 3.0]).unwrap();
        let ts: Vec<_> = (0..2)
            .map(|c| run_chain(&l, &ChainSpec::new(ChainKind::Projection, 300, 1).with_stream(c)).unwrap())
            .collect();
        let s = extract_summary(&ts, Statistic::LogWeight).unwrap();
        let allowed = [0.0, 2f64.ln(), 3f64.ln(), 6f64.ln()];
        for v in s.chains.iter().flatten() {
            assert!(allowed.iter().any(|a| (a - v).abs() < 1e-12), "{v}");
        }
    }
}
