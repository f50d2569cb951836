//! Seeded random matrices. Every generator takes an explicit RNG so runs
//! are reproducible from a single integer seed.

use ndarray::s;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{polar, C64, CMat};

pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian sample with unit variance.
pub fn complex_normal(rng: &mut Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_shape_simple_fn((rows, cols), || complex_normal(rng))
}

/// Unitary factor of a Gaussian matrix.
pub fn random_unitary(rng: &mut Rng, n: usize) -> CMat {
    let g = random_matrix(rng, n, n);
    polar(&g).expect("square input").unitary
}

/// Block upper-triangular matrix with the given block sizes whose diagonal
/// blocks have singular values in `[1/h, 1/h + 1]`, so each satisfies
/// `||D_k^{-1}|| <= h`. Blocks above the diagonal are Gaussian.
pub fn random_block_upper(rng: &mut Rng, sizes: &[usize], h: f64) -> CMat {
    let n: usize = sizes.iter().sum();
    let mut out = CMat::zeros((n, n));
    let mut start = 0;
    for &size in sizes {
        let end = start + size;
        let u = random_unitary(rng, size);
        let v = random_unitary(rng, size);
        let mut d = u;
        for mut col in d.columns_mut() {
            let sigma = 1.0 / h + rng.random::<f64>();
            col.mapv_inplace(|z| z * sigma);
        }
        out.slice_mut(s![start..end, start..end]).assign(&d.dot(&v));
        let right = random_matrix(rng, size, n - end);
        out.slice_mut(s![start..end, end..]).assign(&right);
        start = end;
    }
    out
}
