//! Seeded random operators. Every generator takes an explicit seed; there is
//! no shared RNG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::matrix::{ComplexMatrix, C64};
use crate::shape::{check_size, SubsystemShape};
use crate::states::DensityMatrix;

/// Independent RNG stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Matrix with independent standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, dim);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Positive operator `G G†`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, dim);
    let p = g.matmul(&g.adjoint());
    (&p + &p.adjoint()).scale_real(0.5)
}

/// Full-rank random state `G G† / Tr(G G†)` on `shape`.
pub fn random_density_matrix(shape: &SubsystemShape, seed: u64) -> Result<DensityMatrix> {
    let dim = shape.total_dim();
    check_size(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_psd(&mut rng, dim);
    let tr = p.trace().re;
    DensityMatrix::new(p.scale_real(1.0 / tr), shape.clone())
}
