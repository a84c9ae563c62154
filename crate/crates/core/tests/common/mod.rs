#![allow(dead_code)]

use nalgebra::DMatrix;
use sr_mcmc::dpp::{random_psd_kernel, LEnsemble};
use sr_mcmc::measures::{CardinalityConditioned, Measure, ProductMeasure, TableMeasure};
use sr_mcmc::rng::stream;

pub const FIXTURE_SEED: u64 = 20160601;

const PRODUCT_Q: [f64; 8] = [0.3, 0.8, 0.45, 0.65, 0.2, 0.9, 0.55, 0.35];

pub struct Fixture {
    pub name: String,
    pub measure: Box<dyn Measure>,
    pub is_dpp: bool,
}

impl Fixture {
    fn new(name: &str, n: usize, measure: impl Measure + 'static, is_dpp: bool) -> Self {
        Fixture { name: format!("{name}(N={n})"), measure: Box::new(measure), is_dpp }
    }
}

pub fn product(n: usize) -> ProductMeasure {
    ProductMeasure::new(PRODUCT_Q[..n].to_vec()).unwrap()
}

/// `diag(2, 3, ..., n + 1)`
pub fn diagonal_dpp(n: usize) -> LEnsemble {
    let d: Vec<f64> = (0..n).map(|i| i as f64 + 2.0).collect();
    LEnsemble::from_diagonal(&d).unwrap()
}

pub fn random_dpp(n: usize, rank: usize, index: u64) -> LEnsemble {
    let mut rng = stream(FIXTURE_SEED, 1000 * n as u64 + index);
    random_psd_kernel(n, rank, 1.0, &mut rng).unwrap()
}

pub fn conditioned_uniform(n: usize) -> CardinalityConditioned<TableMeasure> {
    CardinalityConditioned::new(TableMeasure::uniform(n).unwrap(), n.div_ceil(2)).unwrap()
}

/// `π(∅) = π({0,1}) = 1`, `π({0}) = π({1}) = 0.1`.
pub fn supermodular_table() -> TableMeasure {
    TableMeasure::from_weights(vec![1.0, 0.1, 0.1, 1.0]).unwrap()
}

/// The suite used by the exact checks: product, diagonal DPP, full-rank
/// and rank-2 random DPPs, and uniform conditioned on `⌈N/2⌉`.
pub fn fixtures(n: usize) -> Vec<Fixture> {
    let mut out = vec![
        Fixture::new("product", n, product(n), false),
        Fixture::new("diag-dpp", n, diagonal_dpp(n), true),
        Fixture::new("random-dpp", n, random_dpp(n, n, 0), true),
    ];
    if n > 2 {
        out.push(Fixture::new("rank2-dpp", n, random_dpp(n, 2, 1), true));
    }
    out.push(Fixture::new("k-uniform", n, conditioned_uniform(n), false));
    out
}

pub fn principal_det(l: &DMatrix<f64>, members: &[usize]) -> f64 {
    let k = members.len();
    DMatrix::from_fn(k, k, |i, j| l[(members[i], members[j])]).determinant()
}

pub fn mask_members(n: usize, mask: u64) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}
