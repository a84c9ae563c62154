use crate::error::{arg, Result};
use crate::measures::{check_size, ln_binomial, Measure};
use crate::subset::{LogWeight, SubsetState};

/// The symmetric homogenization of a measure `π` on `N` elements: an
/// `N`-homogeneous measure on `2N` elements where `[0, N)` is the original
/// ground set and `[N, 2N)` its shadow copy,
///
/// `π_sh(R) = π(R ∩ [N]) / C(N, |R ∩ [N]|)` if `|R| = N`, else `0`.
///
/// Summing `π_sh` over the shadow coordinates recovers `π`.
#[derive(Clone, Debug)]
pub struct SymmetricHomogenization<M> {
    base: M,
    n: usize,
}

impl<M: Measure> SymmetricHomogenization<M> {
    pub fn new(base: M) -> Result<Self> {
        let n = base.ground_size();
        if n == 0 {
            return arg("symmetric homogenization needs a nonempty ground set");
        }
        Ok(SymmetricHomogenization { base, n })
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    /// `R ∩ V` as a state on the original ground set.
    pub fn project(&self, r: &SubsetState) -> SubsetState {
        let mut s = SubsetState::empty(self.n);
        for i in (0..self.n).filter(|&i| r.contains(i)) {
            s.insert(i).expect("fresh element");
        }
        s
    }
}

/// Builds `π_sh` for `base`.
pub fn symmetric_homogenization<M: Measure>(base: M) -> Result<SymmetricHomogenization<M>> {
    SymmetricHomogenization::new(base)
}

impl<M: Measure> Measure for SymmetricHomogenization<M> {
    fn ground_size(&self) -> usize {
        2 * self.n
    }

    fn log_weight(&self, r: &SubsetState) -> Result<LogWeight> {
        check_size(2 * self.n, r)?;
        if r.cardinality() != self.n {
            return Ok(LogWeight::ZERO);
        }
        let s = self.project(r);
        let lw = self.base.log_weight(&s)?;
        if lw.is_zero() {
            return Ok(lw);
        }
        LogWeight::new(lw.value() - ln_binomial(self.n, s.cardinality()))
    }
}
