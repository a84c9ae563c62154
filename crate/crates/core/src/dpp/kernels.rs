//! Kernel synthesis: RBF similarity kernels and prescribed-spectrum kernels.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::LEnsemble;
use crate::error::{arg, Result};

/// Diagonal jitter added to synthesized similarity kernels.
pub const RBF_JITTER: f64 = 1e-10;

/// `L_ij = exp(-‖x_i - x_j‖² / (2 h²))` over the rows of `points`, plus
/// [`RBF_JITTER`] on the diagonal.
pub fn rbf_kernel(points: &DMatrix<f64>, bandwidth: f64) -> Result<LEnsemble> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return arg(format!("bandwidth must be positive, got {bandwidth}"));
    }
    let (m, d) = points.shape();
    if m == 0 || d == 0 {
        return arg(format!("points matrix must be nonempty, got {m}x{d}"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return arg("points contain a non-finite coordinate");
    }
    let scale = 2.0 * bandwidth * bandwidth;
    let l = DMatrix::from_fn(m, m, |i, j| {
        let dist2 = (0..d).map(|c| (points[(i, c)] - points[(j, c)]).powi(2)).sum::<f64>();
        let v = (-dist2 / scale).exp();
        if i == j {
            v + RBF_JITTER
        } else {
            v
        }
    });
    LEnsemble::new(l)
}

/// `L = Q diag(hi × k, lo × (n - k)) Qᵀ` for a Haar-random orthogonal `Q`.
pub fn spectrum_step_kernel<R: Rng + ?Sized>(n: usize, k: usize, hi: f64, lo: f64, rng: &mut R) -> Result<LEnsemble> {
    if n == 0 {
        return arg("kernel size must be positive");
    }
    if k > n {
        return arg(format!("step position {k} exceeds kernel size {n}"));
    }
    if !(hi > 0.0 && lo > 0.0) || !hi.is_finite() || !lo.is_finite() {
        return arg(format!("spectrum levels must be positive, got hi={hi}, lo={lo}"));
    }
    let q = random_orthogonal(n, rng);
    let spectrum = DVector::from_fn(n, |i, _| if i < k { hi } else { lo });
    let l = &q * DMatrix::from_diagonal(&spectrum) * q.transpose();
    LEnsemble::new(l)
}

/// `L = (scale / rank) A Aᵀ` with `A` an `n × rank` standard Gaussian matrix.
pub fn random_psd_kernel<R: Rng + ?Sized>(n: usize, rank: usize, scale: f64, rng: &mut R) -> Result<LEnsemble> {
    if n == 0 || rank == 0 {
        return arg("kernel size and rank must be positive");
    }
    if !(scale > 0.0) {
        return arg(format!("scale must be positive, got {scale}"));
    }
    let a = DMatrix::from_fn(n, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    LEnsemble::new(&a * a.transpose() * (scale / rank as f64))
}

fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // sign fix makes Q Haar distributed
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use nalgebra::SymmetricEigen;

    fn sorted_eigs(l: &LEnsemble) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(l.matrix().clone()).eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    #[test]
    fn rbf_single_point() {
        let l = rbf_kernel(&DMatrix::from_row_slice(1, 2, &[0.3, 0.4]), 0.5).unwrap();
        assert_eq!(l.matrix()[(0, 0)], 1.0 + RBF_JITTER);
    }

    #[test]
    fn rbf_entries_and_errors() {
        let pts = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let l = rbf_kernel(&pts, 0.5).unwrap();
        assert!((l.matrix()[(0, 1)] - (-2.0f64).exp()).abs() < 1e-15);
        assert!(rbf_kernel(&pts, 0.0).is_err());
        assert!(rbf_kernel(&DMatrix::zeros(0, 2), 1.0).is_err());
    }

    #[test]
    fn spectrum_step_eigenvalues() {
        let mut rng = stream(1, 0);
        let l = spectrum_step_kernel(20, 7, 500.0, 1.0 / 500.0, &mut rng).unwrap();
        let e = sorted_eigs(&l);
        for (i, v) in e.iter().enumerate() {
            let want = if i < 13 { 1.0 / 500.0 } else { 500.0 };
            assert!((v - want).abs() < 1e-6, "eigenvalue {i}: {v} vs {want}");
        }
        let l = spectrum_step_kernel(6, 0, 3.0, 0.25, &mut rng).unwrap();
        assert!(sorted_eigs(&l).iter().all(|v| (v - 0.25).abs() < 1e-6));
        assert!(spectrum_step_kernel(6, 7, 3.0, 0.25, &mut rng).is_err());
        assert!(spectrum_step_kernel(6, 2, -3.0, 0.25, &mut rng).is_err());
    }

    #[test]
    fn paper_scale_step_kernel_validates() {
        let mut rng = stream(2, 0);
        let l = spectrum_step_kernel(200, 100, 500.0, 1.0 / 500.0, &mut rng).unwrap();
        let e = sorted_eigs(&l);
        assert!((e[99] - 1.0 / 500.0).abs() < 1e-6);
        assert!((e[100] - 500.0).abs() < 1e-6);
    }
}
