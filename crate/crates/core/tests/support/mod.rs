//! Random states and operators for the integration tests.
#![allow(dead_code)]

use fermion_tdhf::states::FockDensity;
use fermion_tdhf::{herm_propagator, CMatrix, ModeSpace, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

pub fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = gaussian(rng, n, n);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    herm_propagator(&hermitian(rng, n), 1.0, 1.0).unwrap()
}

/// `G G† / Tr(G G†)` with a rectangular `G` of random rank.
pub fn density_block(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let rank = rng.random_range(1..=n);
    let g = gaussian(rng, n, rank);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho * C64::new(1.0 / tr, 0.0)
}

/// Block-diagonal density with random sector weights and coherent blocks.
pub fn fock_density(ms: &ModeSpace, rng: &mut ChaCha8Rng) -> FockDensity {
    let weights: Vec<f64> = (0..=ms.d()).map(|_| rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let mut mat = CMatrix::zeros(ms.dim(), ms.dim());
    for (n, w) in weights.iter().enumerate() {
        place(&mut mat, ms, n, &(density_block(rng, ms.sector_dim(n)) * C64::new(w / total, 0.0)));
    }
    FockDensity::new(mat, *ms).unwrap()
}

/// Density supported in the `n`-particle sector.
pub fn sector_density(ms: &ModeSpace, n: usize, rng: &mut ChaCha8Rng) -> FockDensity {
    let mut mat = CMatrix::zeros(ms.dim(), ms.dim());
    place(&mut mat, ms, n, &density_block(rng, ms.sector_dim(n)));
    FockDensity::new(mat, *ms).unwrap()
}

fn place(mat: &mut CMatrix, ms: &ModeSpace, n: usize, block: &CMatrix) {
    let idx = ms.sector(n);
    for (a, &ra) in idx.iter().enumerate() {
        for (b, &rb) in idx.iter().enumerate() {
            mat[(ra, rb)] = block[(a, b)];
        }
    }
}

pub fn max_gap(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
