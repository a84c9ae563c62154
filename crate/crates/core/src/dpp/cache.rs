//! Incrementally maintained Cholesky factor of `L_S` for one chain.
//!
//! Ratios are Schur complements:
//! `det(L_{S∪t}) / det(L_S) = L_tt - L_tS L_S^{-1} L_St` (one forward solve),
//! `det(L_{S\s}) / det(L_S) = (L_S^{-1})_ss` (one forward solve against a
//! unit vector). Accepted adds append a row; deletes drop the row and column
//! and repair the trailing block with a rank-one update.

use nalgebra::DMatrix;

use super::{LEnsemble, PIVOT_FLOOR};
use crate::error::Result;
use crate::measures::ChainEvaluator;
use crate::subset::{ElementId, LogWeight, Move, SubsetState};

/// Accepted moves between two from-scratch refactorizations.
pub const REBUILD_INTERVAL: usize = 512;

/// A factor pivot below this triggers an immediate refactorization.
const MIN_PIVOT: f64 = 1e-12;

const INACTIVE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct CholeskyCache<'a> {
    ensemble: &'a LEnsemble,
    /// Elements of `S` in factor order.
    active: Vec<ElementId>,
    /// `slot[i]` is the factor row of element `i`, or `INACTIVE`.
    slot: Vec<usize>,
    /// Lower-triangular factor, row-major with stride `N`.
    factor: Vec<f64>,
    log_det: f64,
    singular: bool,
    accepted_since_rebuild: usize,
    rebuild_interval: usize,
    rebuilds: usize,
    work: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> CholeskyCache<'a> {
    /// Factorizes `L_S` from scratch for the given members (in that order).
    pub fn new(ensemble: &'a LEnsemble, members: &[ElementId]) -> Self {
        let n = ensemble.size();
        let mut slot = vec![INACTIVE; n];
        for (j, &i) in members.iter().enumerate() {
            slot[i] = j;
        }
        let mut cache = CholeskyCache {
            ensemble,
            active: members.to_vec(),
            slot,
            factor: vec![0.0; n * n],
            log_det: 0.0,
            singular: false,
            accepted_since_rebuild: 0,
            rebuild_interval: REBUILD_INTERVAL,
            rebuilds: 0,
            work: vec![0.0; n],
            scratch: vec![0.0; n * n],
        };
        cache.refactor();
        cache.rebuilds = 0;
        cache
    }

    #[inline]
    fn stride(&self) -> usize {
        self.ensemble.size()
    }

    pub fn active(&self) -> &[ElementId] {
        &self.active
    }

    /// Accepted moves between scheduled refactorizations; `usize::MAX`
    /// leaves only the small-pivot trigger.
    pub fn set_rebuild_interval(&mut self, every: usize) {
        self.rebuild_interval = every.max(1);
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Number of refactorizations performed since construction.
    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    /// Running `log det(L_S)`; `-∞` once the cache is flagged singular.
    pub fn log_weight(&self) -> LogWeight {
        if self.singular {
            LogWeight::ZERO
        } else {
            LogWeight::new(self.log_det).unwrap_or(LogWeight::ZERO)
        }
    }

    /// `det(L_{S∪t}) / det(L_S)`, or 0 for a non-positive pivot.
    pub fn add_ratio(&mut self, t: ElementId) -> f64 {
        if self.singular || self.slot[t] != INACTIVE {
            return 0.0;
        }
        let k = self.active.len();
        let stride = self.stride();
        let active = &self.active;
        schur_pivot(self.ensemble, &self.factor, stride, k, |i| active[i], t, &mut self.work)
    }

    /// `det(L_{S\s}) / det(L_S)`.
    pub fn delete_ratio(&mut self, s: ElementId) -> f64 {
        let p = self.slot[s];
        if self.singular || p == INACTIVE {
            return 0.0;
        }
        let k = self.active.len();
        let stride = self.stride();
        let f = &self.factor;
        let x = &mut self.work;
        // F x = e_p; x vanishes above p
        x[p] = 1.0 / f[p * stride + p];
        let mut norm2 = x[p] * x[p];
        for i in p + 1..k {
            let row = &f[i * stride..i * stride + i];
            let acc: f64 = row[p..i].iter().zip(&x[p..i]).map(|(a, b)| a * b).sum();
            x[i] = -acc / f[i * stride + i];
            norm2 += x[i] * x[i];
        }
        norm2
    }

    /// `det(L_{S∪t\s}) / det(L_S)`, computed by deleting `s` on a scratch copy
    /// of the factor and then bordering it with `t`.
    pub fn swap_ratio(&mut self, s: ElementId, t: ElementId) -> f64 {
        let p = self.slot[s];
        if self.singular || p == INACTIVE || self.slot[t] != INACTIVE {
            return 0.0;
        }
        let k = self.active.len();
        let stride = self.stride();
        for i in 0..k {
            let r = i * stride;
            self.scratch[r..=r + i].copy_from_slice(&self.factor[r..=r + i]);
        }
        delete_row(&mut self.scratch, stride, k, p, &mut self.work);
        let reduced_log_det = log_det_of(&self.scratch, stride, k - 1);
        let delete = (reduced_log_det - self.log_det).exp();
        // active order with p removed
        let active = &self.active;
        let elem = |i: usize| if i < p { active[i] } else { active[i + 1] };
        let add = schur_pivot(self.ensemble, &self.scratch, stride, k - 1, elem, t, &mut self.work);
        delete * add
    }

    /// Commits an accepted move; refactorizes after the rebuild interval
    /// ([`REBUILD_INTERVAL`] unless changed) or when a pivot falls below
    /// `1e-12`.
    pub fn apply(&mut self, mv: &Move) {
        match *mv {
            Move::Hold => return,
            Move::Add(t) => self.push(t),
            Move::Delete(s) => self.pop(s),
            Move::Swap { out, into } => {
                self.pop(out);
                self.push(into);
            }
        }
        self.accepted_since_rebuild += 1;
        if self.singular {
            return;
        }
        let k = self.active.len();
        let stride = self.stride();
        let min_pivot = (0..k).map(|j| self.factor[j * stride + j]).fold(f64::INFINITY, f64::min);
        if self.accepted_since_rebuild >= self.rebuild_interval || !(min_pivot >= MIN_PIVOT) {
            self.refactor();
        } else {
            self.log_det = log_det_of(&self.factor, stride, k);
        }
    }

    fn push(&mut self, t: ElementId) {
        let k = self.active.len();
        let stride = self.stride();
        self.active.push(t);
        self.slot[t] = k;
        if self.singular {
            return;
        }
        let active = &self.active;
        let d = schur_pivot(self.ensemble, &self.factor, stride, k, |i| active[i], t, &mut self.work);
        let row = k * stride;
        self.factor[row..row + k].copy_from_slice(&self.work[..k]);
        if d > 0.0 {
            self.factor[row + k] = d.sqrt();
        } else {
            // non-positive pivot: let the refactorization decide
            self.factor[row + k] = 0.0;
        }
    }

    fn pop(&mut self, s: ElementId) {
        let p = self.slot[s];
        debug_assert!(p != INACTIVE);
        let k = self.active.len();
        let stride = self.stride();
        if !self.singular {
            delete_row(&mut self.factor, stride, k, p, &mut self.work);
        }
        self.active.remove(p);
        self.slot[s] = INACTIVE;
        for (j, &i) in self.active.iter().enumerate().skip(p) {
            self.slot[i] = j;
        }
    }

    /// From-scratch factorization of `L_S` in the current active order.
    pub fn refactor(&mut self) {
        self.rebuilds += 1;
        self.accepted_since_rebuild = 0;
        let k = self.active.len();
        let stride = self.stride();
        for i in 0..k {
            for j in 0..=i {
                self.factor[i * stride + j] = self.ensemble.entry(self.active[i], self.active[j]);
            }
        }
        match cholesky_flat(&mut self.factor, stride, k) {
            Some(ld) => {
                self.log_det = ld;
                self.singular = false;
            }
            None => {
                self.log_det = f64::NEG_INFINITY;
                self.singular = true;
            }
        }
    }

    /// `F Fᵀ` in active order.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let k = self.active.len();
        let stride = self.stride();
        let f = DMatrix::from_fn(k, k, |i, j| if j <= i { self.factor[i * stride + j] } else { 0.0 });
        &f * f.transpose()
    }

    /// `log det(L_S)` recomputed from scratch, independently of the factor.
    pub fn fresh_log_det(&self) -> LogWeight {
        let mut sub = super::principal_submatrix(self.ensemble.matrix(), &self.active);
        match super::cholesky_lower_in_place(&mut sub) {
            Some(ld) => LogWeight::new(ld).unwrap_or(LogWeight::ZERO),
            None => LogWeight::ZERO,
        }
    }
}

/// Schur complement `L_tt - ‖F^{-1} L_{S,t}‖²`, clamped to 0 when not
/// safely positive. Leaves `F^{-1} L_{S,t}` in `work[..k]`.
fn schur_pivot(
    ensemble: &LEnsemble,
    factor: &[f64],
    stride: usize,
    k: usize,
    active: impl Fn(usize) -> ElementId,
    t: ElementId,
    work: &mut [f64],
) -> f64 {
    let mut norm2 = 0.0;
    for i in 0..k {
        let row = &factor[i * stride..i * stride + i];
        let acc: f64 = row.iter().zip(&work[..i]).map(|(a, b)| a * b).sum();
        let y = (ensemble.entry(active(i), t) - acc) / factor[i * stride + i];
        work[i] = y;
        norm2 += y * y;
    }
    let diag = ensemble.entry(t, t);
    let d = diag - norm2;
    if d > PIVOT_FLOOR * diag && d > 0.0 {
        d
    } else {
        0.0
    }
}

/// Removes row and column `p` from a `k × k` factor and restores the
/// trailing block with a rank-one Cholesky update.
fn delete_row(buf: &mut [f64], stride: usize, k: usize, p: usize, v: &mut [f64]) {
    let m = k - 1 - p;
    for ii in 0..m {
        v[ii] = buf[(p + 1 + ii) * stride + p];
    }
    for i in p + 1..k {
        let (src, dst) = (i * stride, (i - 1) * stride);
        buf.copy_within(src..src + p, dst);
        buf.copy_within(src + p + 1..=src + i, dst + p);
    }
    for jj in 0..m {
        let j = p + jj;
        let ljj = buf[j * stride + j];
        let vj = v[jj];
        let r = ljj.hypot(vj);
        let c = r / ljj;
        let s = vj / ljj;
        buf[j * stride + j] = r;
        for (ii, vi) in v.iter_mut().enumerate().take(m).skip(jj + 1) {
            let idx = (p + ii) * stride + j;
            buf[idx] = (buf[idx] + s * *vi) / c;
            *vi = c * *vi - s * buf[idx];
        }
    }
}

fn log_det_of(buf: &[f64], stride: usize, k: usize) -> f64 {
    (0..k).map(|j| 2.0 * buf[j * stride + j].ln()).sum()
}

/// Lower Cholesky on the leading `k × k` block of a flat buffer (lower
/// triangle filled on entry).
fn cholesky_flat(buf: &mut [f64], stride: usize, k: usize) -> Option<f64> {
    let mut log_det = 0.0;
    for j in 0..k {
        let rj = j * stride;
        let diag = buf[rj + j];
        let d = diag - buf[rj..rj + j].iter().map(|x| x * x).sum::<f64>();
        if !(d > PIVOT_FLOOR * diag) || !(d > 0.0) {
            return None;
        }
        let pivot = d.sqrt();
        buf[rj + j] = pivot;
        log_det += 2.0 * pivot.ln();
        for i in j + 1..k {
            let ri = i * stride;
            let acc: f64 = (0..j).map(|m| buf[ri + m] * buf[rj + m]).sum();
            buf[ri + j] = (buf[ri + j] - acc) / pivot;
        }
    }
    Some(log_det)
}

/// Chain evaluator for L-ensembles backed by a [`CholeskyCache`].
pub struct DppEvaluator<'a> {
    cache: CholeskyCache<'a>,
    state: SubsetState,
}

impl<'a> DppEvaluator<'a> {
    pub fn new(ensemble: &'a LEnsemble, state: SubsetState) -> Result<Self> {
        crate::measures::check_size(ensemble.size(), &state)?;
        let cache = CholeskyCache::new(ensemble, &state.members());
        Ok(DppEvaluator { cache, state })
    }

    pub fn cache(&self) -> &CholeskyCache<'a> {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut CholeskyCache<'a> {
        &mut self.cache
    }
}

impl ChainEvaluator for DppEvaluator<'_> {
    fn state(&self) -> &SubsetState {
        &self.state
    }

    fn log_weight(&self) -> LogWeight {
        self.cache.log_weight()
    }

    fn add_ratio(&mut self, t: ElementId) -> f64 {
        self.cache.add_ratio(t)
    }

    fn delete_ratio(&mut self, s: ElementId) -> f64 {
        self.cache.delete_ratio(s)
    }

    fn swap_ratio(&mut self, s: ElementId, t: ElementId) -> f64 {
        self.cache.swap_ratio(s, t)
    }

    fn apply(&mut self, mv: &Move) -> Result<()> {
        self.state.apply(mv)?;
        self.cache.apply(mv);
        Ok(())
    }
}
