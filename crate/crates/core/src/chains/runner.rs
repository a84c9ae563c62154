use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{step, ChainKind, DeleteFactor, MoveOutcome};
use crate::error::{arg, Error, Result};
use crate::measures::{ChainEvaluator, Measure};
use crate::rng::{stream, ChainRng};
use crate::subset::{ElementId, LogWeight, SubsetState};

/// How a chain picks its first state.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// A given set, which must have positive weight.
    ExplicitSet(Vec<ElementId>),
    /// Random sets (uniform cardinality, then a uniform set of that size)
    /// until one has positive weight; at most `max(N², 1)` attempts.
    RandomPositive,
    /// The singleton of largest weight, lowest index on ties. Falls back to
    /// `RandomPositive` when every singleton has weight zero.
    #[default]
    HeaviestSingleton,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    pub kind: ChainKind,
    /// Recorded steps after burn-in.
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Stream index within the seed's family; chain `i` of a run uses `i`.
    pub stream: u64,
    pub init: InitStrategy,
    pub delete_factor: DeleteFactor,
}

impl ChainSpec {
    pub fn new(kind: ChainKind, steps: usize, seed: u64) -> Self {
        ChainSpec {
            kind,
            steps,
            burn_in: 0,
            thin: 1,
            seed,
            stream: 0,
            init: InitStrategy::default(),
            delete_factor: DeleteFactor::default(),
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_init(mut self, init: InitStrategy) -> Self {
        self.init = init;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_delete_factor(mut self, delete_factor: DeleteFactor) -> Self {
        self.delete_factor = delete_factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return arg("thin must be at least 1");
        }
        Ok(())
    }
}

/// One retained step.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    /// 1-based iteration index, burn-in included.
    pub step: usize,
    /// Members of the state after the step, increasing.
    pub members: Vec<ElementId>,
    pub log_weight: LogWeight,
    pub outcome: MoveOutcome,
}

impl Record {
    pub fn state(&self, n: usize) -> Result<SubsetState> {
        SubsetState::from_members(n, &self.members)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub kind: ChainKind,
    pub ground_size: usize,
    /// State after burn-in, before the first recorded step.
    pub initial: Vec<ElementId>,
    pub initial_log_weight: LogWeight,
    pub records: Vec<Record>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Picks the initial state for a chain.
pub fn resolve_init<M: Measure + ?Sized, R: Rng + ?Sized>(
    measure: &M,
    init: &InitStrategy,
    rng: &mut R,
) -> Result<SubsetState> {
    let n = measure.ground_size();
    match init {
        InitStrategy::ExplicitSet(members) => {
            let s = SubsetState::from_members(n, members)?;
            if measure.log_weight(&s)?.is_zero() {
                return Err(Error::Init(format!("initial set {members:?} has weight zero")));
            }
            Ok(s)
        }
        InitStrategy::HeaviestSingleton => {
            let mut best: Option<(ElementId, LogWeight)> = None;
            for i in 0..n {
                let lw = measure.log_weight(&SubsetState::from_members(n, &[i])?)?;
                if lw.is_positive() && best.is_none_or(|(_, b)| lw > b) {
                    best = Some((i, lw));
                }
            }
            match best {
                Some((i, _)) => SubsetState::from_members(n, &[i]),
                None => resolve_init(measure, &InitStrategy::RandomPositive, rng),
            }
        }
        InitStrategy::RandomPositive => {
            let attempts = (n * n).max(1);
            let mut pool: Vec<ElementId> = (0..n).collect();
            for _ in 0..attempts {
                let size = rng.random_range(0..=n);
                // partial Fisher-Yates
                for j in 0..size {
                    let r = rng.random_range(j..n);
                    pool.swap(j, r);
                }
                let s = SubsetState::from_members(n, &pool[..size])?;
                if measure.log_weight(&s)?.is_positive() {
                    return Ok(s);
                }
            }
            Err(Error::Init(format!("no positive-weight set found in {attempts} random attempts")))
        }
    }
}

/// A running chain: evaluator, generator and iteration counter.
pub struct Chain<'a> {
    kind: ChainKind,
    delete_factor: DeleteFactor,
    evaluator: Box<dyn ChainEvaluator + 'a>,
    rng: ChainRng,
    iteration: usize,
}

impl<'a> Chain<'a> {
    /// Seeds the stream, resolves the initial state and builds the evaluator.
    pub fn new<M: Measure + ?Sized>(measure: &'a M, spec: &ChainSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = stream(spec.seed, spec.stream);
        let init = resolve_init(measure, &spec.init, &mut rng)?;
        let evaluator = measure.evaluator(init)?;
        if evaluator.log_weight().is_zero() {
            return Err(Error::Init("initial state is numerically singular".into()));
        }
        Ok(Chain { kind: spec.kind, delete_factor: spec.delete_factor, evaluator, rng, iteration: 0 })
    }

    pub fn step(&mut self) -> Result<MoveOutcome> {
        self.iteration += 1;
        step(self.kind, self.delete_factor, self.evaluator.as_mut(), &mut self.rng)
    }

    pub fn state(&self) -> &SubsetState {
        self.evaluator.state()
    }

    pub fn log_weight(&self) -> LogWeight {
        self.evaluator.log_weight()
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    fn record(&self, outcome: MoveOutcome) -> Record {
        Record { step: self.iteration, members: self.state().members(), log_weight: self.log_weight(), outcome }
    }
}

/// Runs `burn_in` unrecorded steps, then `steps` steps keeping every
/// `thin`-th state. Deterministic in `(seed, stream)`.
pub fn run_chain<M: Measure + ?Sized>(measure: &M, spec: &ChainSpec) -> Result<Transcript> {
    let mut chain = Chain::new(measure, spec)?;
    for _ in 0..spec.burn_in {
        chain.step()?;
    }
    let initial = chain.state().members();
    let initial_log_weight = chain.log_weight();
    let mut records = Vec::with_capacity(spec.steps / spec.thin);
    for i in 1..=spec.steps {
        let outcome = chain.step()?;
        if i % spec.thin == 0 {
            records.push(chain.record(outcome));
        }
    }
    Ok(Transcript { kind: spec.kind, ground_size: measure.ground_size(), initial, initial_log_weight, records })
}

/// Runs independent chains in parallel; results come back in input order.
pub fn run_chains<M: Measure + ?Sized>(measure: &M, specs: &[ChainSpec]) -> Result<Vec<Transcript>> {
    specs.par_iter().map(|spec| run_chain(measure, spec)).collect()
}
