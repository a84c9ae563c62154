use crate::error::{arg, Result};
use crate::measures::{check_size, Measure};
use crate::subset::{LogWeight, SubsetState};

/// Largest ground set a table may cover (2^24 entries).
pub const MAX_TABLE_ELEMENTS: usize = 24;

/// Explicit weights for every subset, indexed by bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct TableMeasure {
    n: usize,
    log_weights: Vec<LogWeight>,
}

impl TableMeasure {
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n > MAX_TABLE_ELEMENTS {
            return arg(format!("table measures support at most {MAX_TABLE_ELEMENTS} elements, got {n}"));
        }
        if weights.len() != 1 << n {
            return arg(format!("expected 2^{n} = {} weights, got {}", 1usize << n, weights.len()));
        }
        let log_weights = weights
            .iter()
            .enumerate()
            .map(|(mask, &w)| {
                LogWeight::from_weight(w)
                    .map_err(|_| crate::error::Error::Argument(format!("weight of mask {mask} is {w}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if log_weights.iter().all(|w| w.is_zero()) {
            return arg("table has no positive weight");
        }
        Ok(TableMeasure { n, log_weights })
    }

    /// Infers `N` from the number of weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let len = weights.len();
        if !len.is_power_of_two() {
            return arg(format!("table length {len} is not a power of two"));
        }
        Self::new(len.trailing_zeros() as usize, weights)
    }

    /// The uniform table (all weights one).
    pub fn uniform(n: usize) -> Result<Self> {
        if n > MAX_TABLE_ELEMENTS {
            return arg(format!("table measures support at most {MAX_TABLE_ELEMENTS} elements, got {n}"));
        }
        Self::new(n, vec![1.0; 1 << n])
    }
}

impl Measure for TableMeasure {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn log_weight(&self, s: &SubsetState) -> Result<LogWeight> {
        check_size(self.n, s)?;
        Ok(self.log_weights[s.to_mask() as usize])
    }
}
