use crate::error::{arg, Error, Result};
use crate::measures::{check_add, check_delete, check_size, Measure};
use crate::subset::{ElementId, LogWeight, SubsetState};

/// Independent inclusions: `π(S) = Π_{i∈S} q_i Π_{j∉S} (1 - q_j)`.
///
/// Self-normalized, so its weights over `2^V` sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductMeasure {
    q: Vec<f64>,
}

impl ProductMeasure {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if let Some((i, p)) = q.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return arg(format!("inclusion probability q[{i}] = {p} outside [0, 1]"));
        }
        Ok(ProductMeasure { q })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.q
    }

    fn require_positive(&self, s: &SubsetState) -> Result<()> {
        if self.log_weight(s)?.is_zero() {
            return Err(Error::Domain("ratio taken from a zero-weight state".into()));
        }
        Ok(())
    }

    /// `(1 - q_i) / q_i`-style odds with the conventions `x/0 = ∞`, `0/0` unused.
    fn odds(num: f64, den: f64) -> f64 {
        if num == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

impl Measure for ProductMeasure {
    fn ground_size(&self) -> usize {
        self.q.len()
    }

    fn log_weight(&self, s: &SubsetState) -> Result<LogWeight> {
        check_size(self.q.len(), s)?;
        let lw = self
            .q
            .iter()
            .zip(s.membership())
            .map(|(&q, &inside)| if inside { q.ln() } else { (1.0 - q).ln() })
            .sum::<f64>();
        LogWeight::new(lw)
    }

    fn add_ratio(&self, s: &SubsetState, t: ElementId) -> Result<f64> {
        check_add(self.q.len(), s, t)?;
        self.require_positive(s)?;
        Ok(Self::odds(self.q[t], 1.0 - self.q[t]))
    }

    fn delete_ratio(&self, set: &SubsetState, s: ElementId) -> Result<f64> {
        check_delete(self.q.len(), set, s)?;
        self.require_positive(set)?;
        Ok(Self::odds(1.0 - self.q[s], self.q[s]))
    }

    fn swap_ratio(&self, set: &SubsetState, s: ElementId, t: ElementId) -> Result<f64> {
        check_delete(self.q.len(), set, s)?;
        check_add(self.q.len(), set, t)?;
        self.require_positive(set)?;
        Ok(Self::odds(1.0 - self.q[s], self.q[s]) * Self::odds(self.q[t], 1.0 - self.q[t]))
    }
}
