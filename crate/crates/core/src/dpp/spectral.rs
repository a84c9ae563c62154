//! Exact i.i.d. DPP sampling from the eigendecomposition of `L`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use super::LEnsemble;
use crate::error::{Error, Result};
use crate::subset::SubsetState;

/// Spectral sampler with the eigendecomposition of `L` precomputed.
#[derive(Clone, Debug)]
pub struct SpectralSampler {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralSampler {
    pub fn new(l: &LEnsemble) -> Result<Self> {
        let n = l.size();
        if n == 0 {
            return Ok(SpectralSampler { eigenvalues: DVector::zeros(0), eigenvectors: DMatrix::zeros(0, 0) });
        }
        let eig = SymmetricEigen::try_new(l.matrix().clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("eigendecomposition of L failed".into()))?;
        Ok(SpectralSampler { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors })
    }

    pub fn size(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// One exact draw: keep eigenvector `i` with probability `λ_i / (1 + λ_i)`,
    /// then pick one element per kept vector with probability proportional to
    /// the squared row norms of the current basis, projecting the picked
    /// coordinate out after each pick.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SubsetState {
        let n = self.size();
        let mut basis: Vec<Vec<f64>> = self
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|&(_, &lambda)| {
                let lambda = lambda.max(0.0);
                rng.random::<f64>() < lambda / (1.0 + lambda)
            })
            .map(|(i, _)| self.eigenvectors.column(i).iter().copied().collect())
            .collect();

        let mut picked = SubsetState::empty(n);
        let mut weights = vec![0.0; n];
        while !basis.is_empty() {
            for (i, w) in weights.iter_mut().enumerate() {
                *w = if picked.contains(i) { 0.0 } else { basis.iter().map(|v| v[i] * v[i]).sum() };
            }
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut item = n;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    item = i;
                    if u < w {
                        break;
                    }
                    u -= w;
                }
            }
            if item == n {
                // the remaining basis is numerically zero
                break;
            }
            picked.insert(item).expect("picked coordinates are zeroed out");

            let pivot = (0..basis.len())
                .max_by(|&a, &b| basis[a][item].abs().total_cmp(&basis[b][item].abs()))
                .expect("basis is nonempty");
            let pv = basis.swap_remove(pivot);
            for v in basis.iter_mut() {
                let c = v[item] / pv[item];
                for (x, p) in v.iter_mut().zip(&pv) {
                    *x -= c * p;
                }
                v[item] = 0.0;
            }
            gram_schmidt(&mut basis);
        }
        picked
    }
}

/// One exact sample from the DPP with kernel `L`.
pub fn spectral_sample<R: Rng + ?Sized>(l: &LEnsemble, rng: &mut R) -> Result<SubsetState> {
    Ok(SpectralSampler::new(l)?.sample(rng))
}

fn gram_schmidt(basis: &mut [Vec<f64>]) {
    for j in 0..basis.len() {
        let (done, rest) = basis.split_at_mut(j);
        let v = &mut rest[0];
        for u in done.iter() {
            let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn zero_kernel_gives_empty_set() {
        let l = LEnsemble::new(DMatrix::zeros(4, 4)).unwrap();
        let s = SpectralSampler::new(&l).unwrap();
        let mut rng = stream(0, 0);
        for _ in 0..50 {
            assert!(s.sample(&mut rng).is_empty());
        }
    }

    #[test]
    fn diagonal_kernel_factorizes() {
        let l = LEnsemble::from_diagonal(&[2.0, 3.0]).unwrap();
        let s = SpectralSampler::new(&l).unwrap();
        let mut rng = stream(9, 0);
        let trials = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            counts[s.sample(&mut rng).to_mask() as usize] += 1;
        }
        // (1, 2, 3, 6) / 12
        for (mask, want) in [1.0, 2.0, 3.0, 6.0].iter().map(|w| w / 12.0).enumerate() {
            let p = counts[mask] as f64 / trials as f64;
            let sigma = (want * (1.0 - want) / trials as f64).sqrt();
            assert!((p - want).abs() < 4.0 * sigma, "mask {mask}: {p} vs {want}");
        }
    }
}
