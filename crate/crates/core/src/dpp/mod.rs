//! Determinantal point processes.
//!
//! Chains work with the L-ensemble form `π(S) = det(L_S)` (unnormalized,
//! `π(∅) = 1`). Marginal kernels `K` with spectrum in `[0, 1]` convert to
//! `L = K (I - K)^{-1}` as long as no eigenvalue sits at one; the reverse map
//! `K = L (I + L)^{-1}` supplies the analytic inclusion probabilities
//! `Pr(S ⊆ T) = det(K_S)`.

mod cache;
mod kernels;
mod spectral;

pub use cache::{CholeskyCache, DppEvaluator, REBUILD_INTERVAL};
pub use kernels::{random_psd_kernel, rbf_kernel, spectrum_step_kernel, RBF_JITTER};
pub use spectral::{spectral_sample, SpectralSampler};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{arg, Error, Result};
use crate::measures::{check_size, ChainEvaluator, Measure};
use crate::subset::{LogWeight, SubsetState};

/// Symmetry tolerance applied to kernels on construction.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Spectrum slack for both kernel validators.
pub const SPECTRUM_TOL: f64 = 1e-8;

/// A Cholesky pivot `d` is treated as zero when `d <= PIVOT_FLOOR * L_jj`.
pub(crate) const PIVOT_FLOOR: f64 = 1e-14;

/// A validated marginal kernel: symmetric with eigenvalues in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalKernel {
    k: DMatrix<f64>,
}

impl MarginalKernel {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn size(&self) -> usize {
        self.k.nrows()
    }

    /// `det(K_S) = Pr(S ⊆ T)`.
    pub fn inclusion_probability(&self, members: &[usize]) -> f64 {
        let sub = principal_submatrix(&self.k, members);
        if members.is_empty() {
            return 1.0;
        }
        sub.determinant()
    }
}

/// Checks symmetry and `spec(K) ⊂ [-1e-8, 1 + 1e-8]`.
pub fn validate_marginal_kernel(k: DMatrix<f64>) -> Result<MarginalKernel> {
    let k = check_symmetric(k, "marginal kernel")?;
    let eig = eigenvalues(&k)?;
    if let Some(&bad) = eig.iter().find(|&&e| !(-SPECTRUM_TOL..=1.0 + SPECTRUM_TOL).contains(&e)) {
        return Err(Error::Validation(format!("marginal kernel eigenvalue {bad} outside [0, 1]")));
    }
    Ok(MarginalKernel { k })
}

/// A symmetric positive semidefinite L-ensemble kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct LEnsemble {
    l: DMatrix<f64>,
}

impl LEnsemble {
    /// Validates symmetry and `λ_min ≥ -1e-8`, then symmetrizes exactly.
    pub fn new(l: DMatrix<f64>) -> Result<Self> {
        let l = check_symmetric(l, "L-ensemble kernel")?;
        let eig = eigenvalues(&l)?;
        if let Some(&bad) = eig.iter().find(|&&e| e < -SPECTRUM_TOL) {
            return Err(Error::Validation(format!("L-ensemble kernel has negative eigenvalue {bad}")));
        }
        Ok(LEnsemble { l })
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn size(&self) -> usize {
        self.l.nrows()
    }

    #[inline]
    pub(crate) fn entry(&self, i: usize, j: usize) -> f64 {
        self.l[(i, j)]
    }

    /// `log det(L + I)`, the log partition function of the DPP.
    pub fn log_normalizer(&self) -> Result<f64> {
        let n = self.size();
        let shifted = &self.l + DMatrix::identity(n, n);
        let chol = shifted.cholesky().ok_or_else(|| Error::Numeric("Cholesky of L + I failed".into()))?;
        Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }
}

/// `L = K (I - K)^{-1}`, via the eigendecomposition of `K`.
pub fn marginal_to_l(k: &MarginalKernel) -> Result<LEnsemble> {
    let eig = SymmetricEigen::try_new(k.k.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("eigendecomposition of K failed".into()))?;
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&e| e >= 1.0 - SPECTRUM_TOL) {
        return Err(Error::Domain(format!(
            "marginal kernel eigenvalue {bad} is at 1: elementary direction; not representable as L-ensemble"
        )));
    }
    let mapped = eig.eigenvalues.map(|e| {
        let e = e.max(0.0);
        e / (1.0 - e)
    });
    let l = &eig.eigenvectors * DMatrix::from_diagonal(&mapped) * eig.eigenvectors.transpose();
    Ok(LEnsemble { l: symmetrize(l) })
}

/// `K = L (I + L)^{-1} = I - (I + L)^{-1}`.
pub fn l_to_marginal(l: &LEnsemble) -> Result<MarginalKernel> {
    let n = l.size();
    let identity = DMatrix::<f64>::identity(n, n);
    let inv = (&l.l + &identity).cholesky().ok_or_else(|| Error::Numeric("Cholesky of L + I failed".into()))?.inverse();
    Ok(MarginalKernel { k: symmetrize(identity - inv) })
}

/// `log det(L_S)`; `0` for `S = ∅`, `-∞` when `L_S` is numerically singular.
pub fn dpp_log_weight(l: &LEnsemble, s: &SubsetState) -> Result<LogWeight> {
    check_size(l.size(), s)?;
    let members = s.members();
    let mut a = principal_submatrix(&l.l, &members);
    Ok(match cholesky_lower_in_place(&mut a) {
        Some(log_det) => LogWeight::new(log_det)?,
        None => LogWeight::ZERO,
    })
}

impl Measure for LEnsemble {
    fn ground_size(&self) -> usize {
        self.size()
    }

    fn log_weight(&self, s: &SubsetState) -> Result<LogWeight> {
        dpp_log_weight(self, s)
    }

    fn evaluator(&self, state: SubsetState) -> Result<Box<dyn ChainEvaluator + '_>> {
        Ok(Box::new(DppEvaluator::new(self, state)?))
    }
}

/// In-place lower Cholesky factorization; returns `log det` or `None` if a
/// pivot is not safely positive. The strict upper triangle is zeroed.
pub(crate) fn cholesky_lower_in_place(a: &mut DMatrix<f64>) -> Option<f64> {
    let n = a.nrows();
    let mut log_det = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)];
        for m in 0..j {
            d -= a[(j, m)] * a[(j, m)];
        }
        if !(d > PIVOT_FLOOR * a[(j, j)]) || !(d > 0.0) {
            return None;
        }
        let pivot = d.sqrt();
        a[(j, j)] = pivot;
        log_det += 2.0 * pivot.ln();
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for m in 0..j {
                v -= a[(i, m)] * a[(j, m)];
            }
            a[(i, j)] = v / pivot;
        }
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Some(log_det)
}

pub(crate) fn principal_submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn check_symmetric(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return arg(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols()));
    }
    if let Some(bad) = m.iter().find(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("{what} has non-finite entry {bad}")));
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > SYMMETRY_TOL * scale {
                return Err(Error::Validation(format!("{what} is not symmetric: |M[{i},{j}] - M[{j},{i}]| = {gap:e}")));
            }
        }
    }
    Ok(symmetrize(m))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigendecomposition failed".into()))?;
    Ok(eig.eigenvalues.iter().copied().collect())
}
