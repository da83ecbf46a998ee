//! Seeded generators for random test instances and Monte-Carlo streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, ComplexMatrix, ComplexVector, HermitianMatrix};

pub type SimRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of an independent stream for cell `(a, b)` under `master`.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    mix(mix(mix(master) ^ a) ^ b.rotate_left(32))
}

/// Circular complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| complex_gaussian(rng))
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    let x = random_matrix(rng, n, n);
    HermitianMatrix::new((&x + x.adjoint()) * c64(0.5, 0.0)).expect("hermitian by construction")
}

/// Full-rank (almost surely) PSD matrix `X Xᴴ / n`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    random_psd_rank(rng, n, n)
}

/// PSD matrix of rank `rank`: `X Xᴴ / rank` with `X` of size `n x rank`.
pub fn random_psd_rank<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> HermitianMatrix {
    let x = random_matrix(rng, n, rank);
    HermitianMatrix::new(&x * x.adjoint() / c64(rank as f64, 0.0))
        .expect("hermitian by construction")
}
