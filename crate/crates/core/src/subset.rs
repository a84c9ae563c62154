//! Subsets of a finite ground set, log-domain weights and elementary moves.

use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{arg, Error, Result};

/// Index of an element of the ground set `V = {0, .., N-1}`.
pub type ElementId = usize;

/// A subset `S ⊆ V` with O(1) membership tests and O(1) uniform draws from
/// both `S` and `V \ S`.
///
/// Alongside the membership vector the state keeps a permutation of the
/// ground set whose first `cardinality` entries are exactly the members.
/// Equality and hashing look at membership only.
#[derive(Clone)]
pub struct SubsetState {
    membership: Vec<bool>,
    cardinality: usize,
    order: Vec<u32>,
    position: Vec<u32>,
}

impl SubsetState {
    pub fn empty(n: usize) -> Self {
        SubsetState {
            membership: vec![false; n],
            cardinality: 0,
            order: (0..n as u32).collect(),
            position: (0..n as u32).collect(),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert_unchecked(i);
        }
        s
    }

    /// Builds a state from a list of member indices. Duplicates are rejected.
    pub fn from_members(n: usize, members: &[ElementId]) -> Result<Self> {
        let mut s = Self::empty(n);
        for &i in members {
            if i >= n {
                return arg(format!("element {i} out of range for ground set of size {n}"));
            }
            if s.contains(i) {
                return arg(format!("element {i} listed twice"));
            }
            s.insert_unchecked(i);
        }
        Ok(s)
    }

    /// Builds a state from a bitmask; bit `i` set means element `i ∈ S`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        assert!(n <= 64, "bitmask states support at most 64 elements");
        debug_assert!(n == 64 || mask >> n == 0, "mask has bits beyond the ground set");
        let mut s = Self::empty(n);
        for i in 0..n {
            if mask >> i & 1 == 1 {
                s.insert_unchecked(i);
            }
        }
        s
    }

    pub fn to_mask(&self) -> u64 {
        assert!(self.ground_size() <= 64, "bitmask states support at most 64 elements");
        self.membership.iter().enumerate().filter(|(_, &m)| m).fold(0u64, |acc, (i, _)| acc | 1 << i)
    }

    #[inline]
    pub fn ground_size(&self) -> usize {
        self.membership.len()
    }

    #[inline]
    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cardinality == 0
    }

    #[inline]
    pub fn contains(&self, i: ElementId) -> bool {
        self.membership[i]
    }

    pub fn membership(&self) -> &[bool] {
        &self.membership
    }

    /// Members in increasing order.
    pub fn members(&self) -> Vec<ElementId> {
        self.membership.iter().enumerate().filter_map(|(i, &m)| m.then_some(i)).collect()
    }

    /// The `j`-th member in internal (history dependent) order, `j < |S|`.
    #[inline]
    pub fn nth_member(&self, j: usize) -> ElementId {
        debug_assert!(j < self.cardinality);
        self.order[j] as usize
    }

    /// The `j`-th non-member in internal order, `j < N - |S|`.
    #[inline]
    pub fn nth_non_member(&self, j: usize) -> ElementId {
        debug_assert!(j < self.ground_size() - self.cardinality);
        self.order[self.cardinality + j] as usize
    }

    pub fn insert(&mut self, i: ElementId) -> Result<()> {
        self.check_element(i)?;
        if self.contains(i) {
            return arg(format!("element {i} already in the set"));
        }
        self.insert_unchecked(i);
        Ok(())
    }

    pub fn remove(&mut self, i: ElementId) -> Result<()> {
        self.check_element(i)?;
        if !self.contains(i) {
            return arg(format!("element {i} not in the set"));
        }
        self.remove_unchecked(i);
        Ok(())
    }

    /// Applies a move; validates membership first so a failed call leaves
    /// the state untouched.
    pub fn apply(&mut self, mv: &Move) -> Result<()> {
        match *mv {
            Move::Hold => Ok(()),
            Move::Add(t) => self.insert(t),
            Move::Delete(s) => self.remove(s),
            Move::Swap { out, into } => {
                self.check_element(out)?;
                self.check_element(into)?;
                if !self.contains(out) || self.contains(into) {
                    return arg(format!("swap requires {out} ∈ S and {into} ∉ S"));
                }
                self.remove_unchecked(out);
                self.insert_unchecked(into);
                Ok(())
            }
        }
    }

    /// Copy of the state with `mv` applied.
    pub fn with_move(&self, mv: &Move) -> Result<Self> {
        let mut next = self.clone();
        next.apply(mv)?;
        Ok(next)
    }

    fn check_element(&self, i: ElementId) -> Result<()> {
        if i >= self.ground_size() {
            return arg(format!("element {i} out of range for ground set of size {}", self.ground_size()));
        }
        Ok(())
    }

    fn insert_unchecked(&mut self, i: ElementId) {
        // move i to slot `cardinality`, the first non-member slot
        let slot = self.cardinality;
        self.swap_slots(self.position[i] as usize, slot);
        self.membership[i] = true;
        self.cardinality += 1;
    }

    fn remove_unchecked(&mut self, i: ElementId) {
        let slot = self.cardinality - 1;
        self.swap_slots(self.position[i] as usize, slot);
        self.membership[i] = false;
        self.cardinality -= 1;
    }

    fn swap_slots(&mut self, a: usize, b: usize) {
        let (ea, eb) = (self.order[a], self.order[b]);
        self.order.swap(a, b);
        self.position[ea as usize] = b as u32;
        self.position[eb as usize] = a as u32;
    }
}

impl PartialEq for SubsetState {
    fn eq(&self, other: &Self) -> bool {
        self.membership == other.membership
    }
}

impl Eq for SubsetState {}

impl Hash for SubsetState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.membership.hash(state);
    }
}

impl fmt::Debug for SubsetState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubsetState(N={}, {:?})", self.ground_size(), self.members())
    }
}

/// Natural logarithm of an unnormalized weight. `-∞` encodes weight zero;
/// NaN and `+∞` are never stored.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value == f64::INFINITY {
            return Err(Error::Domain(format!("invalid log-weight {value}")));
        }
        Ok(LogWeight(value))
    }

    pub fn from_weight(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::Domain(format!("invalid weight {weight}")));
        }
        Ok(LogWeight(weight.ln()))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        !self.is_zero()
    }

    pub fn weight(self) -> f64 {
        self.0.exp()
    }

    /// `exp(self - base)`, i.e. `π(self) / π(base)`. The base must be positive.
    pub fn ratio_over(self, base: LogWeight) -> Result<f64> {
        if base.is_zero() {
            return Err(Error::Domain("ratio taken from a zero-weight state".into()));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        Ok((self.0 - base.0).exp())
    }
}

impl fmt::Display for LogWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An elementary transition between subsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    Hold,
    Add(ElementId),
    Delete(ElementId),
    /// Remove `out ∈ S` and insert `into ∉ S`.
    Swap {
        out: ElementId,
        into: ElementId,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_round_trip_and_order_invariants() {
        let s = SubsetState::from_mask(6, 0b101101);
        assert_eq!(s.members(), vec![0, 2, 3, 5]);
        assert_eq!(s.cardinality(), 4);
        assert_eq!(s.to_mask(), 0b101101);
        let mut drawn: Vec<_> = (0..4).map(|j| s.nth_member(j)).collect();
        drawn.sort();
        assert_eq!(drawn, s.members());
        let mut rest: Vec<_> = (0..2).map(|j| s.nth_non_member(j)).collect();
        rest.sort();
        assert_eq!(rest, vec![1, 4]);
    }

    #[test]
    fn moves_validate_membership() {
        let mut s = SubsetState::from_members(4, &[1]).unwrap();
        assert!(s.apply(&Move::Add(1)).is_err());
        assert!(s.apply(&Move::Delete(0)).is_err());
        assert!(s.apply(&Move::Swap { out: 0, into: 2 }).is_err());
        assert!(s.apply(&Move::Add(9)).is_err());
        s.apply(&Move::Swap { out: 1, into: 3 }).unwrap();
        assert_eq!(s.members(), vec![3]);
        assert_eq!(s, SubsetState::from_members(4, &[3]).unwrap());
    }

    #[test]
    fn duplicate_members_rejected() {
        assert!(SubsetState::from_members(3, &[0, 0]).is_err());
        assert!(SubsetState::from_members(3, &[3]).is_err());
    }

    #[test]
    fn log_weight_rejects_nan() {
        assert!(LogWeight::new(f64::NAN).is_err());
        assert!(LogWeight::new(f64::INFINITY).is_err());
        assert!(LogWeight::from_weight(-1.0).is_err());
        assert!(LogWeight::from_weight(0.0).unwrap().is_zero());
        assert_eq!(LogWeight::ZERO.ratio_over(LogWeight::ONE).unwrap(), 0.0);
        assert!(LogWeight::ONE.ratio_over(LogWeight::ZERO).is_err());
    }

    proptest::proptest! {
        #[test]
        fn cardinality_tracks_membership(ops in proptest::collection::vec((0usize..3, 0usize..10, 0usize..10), 0..60)) {
            let mut s = SubsetState::empty(10);
            for (kind, a, b) in ops {
                let mv = match kind {
                    0 => Move::Add(a),
                    1 => Move::Delete(a),
                    _ => Move::Swap { out: a, into: b },
                };
                let before = s.clone();
                if s.apply(&mv).is_err() {
                    proptest::prop_assert_eq!(&s, &before);
                }
                let count = s.membership().iter().filter(|&&m| m).count();
                proptest::prop_assert_eq!(count, s.cardinality());
                for j in 0..s.cardinality() {
                    proptest::prop_assert!(s.contains(s.nth_member(j)));
                }
                for j in 0..10 - s.cardinality() {
                    proptest::prop_assert!(!s.contains(s.nth_non_member(j)));
                }
            }
        }
    }
}
