//! Seeded random ensembles for property suites.
//!
//! All randomness goes through [`rng`]; the ChaCha stream keeps results
//! identical across platforms for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{QeeError, Result};
use crate::model::{DephasingModel, KrausChannel, QubitAmplitudes};
use crate::spectral::{c64, CMatrix, CVector, DensityMatrix, HermitianMatrix, UnitaryMatrix};
use num_complex::Complex64;

pub type QeeRng = ChaCha8Rng;

pub fn rng(seed: u64) -> QeeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian with `E|z|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    // Fill row-major so the stream order does not depend on storage layout.
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    CMatrix::from_row_slice(rows, cols, &data)
}

/// `(G + G^dagger) / 2`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    HermitianMatrix::from_unchecked(gaussian_matrix(rng, dim, dim))
}

/// `G G^dagger / tr(G G^dagger)` with `G` of shape `dim x rank`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(QeeError::InvalidParameter(format!(
            "rank must lie in 1..={dim}, got {rank}"
        )));
    }
    let g = gaussian_matrix(rng, dim, rank);
    let w = &g * g.adjoint();
    let tr = crate::spectral::trace(&w).re;
    Ok(DensityMatrix::from_unchecked(w / c64(tr, 0.0)))
}

pub fn random_pure_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    let v = CVector::from_iterator(dim, (0..dim).map(|_| complex_gaussian(rng)));
    let n = v.norm();
    v / c64(n, 0.0)
}

/// Haar-distributed unitary via QR of a Gaussian matrix with the phases of
/// `R`'s diagonal divided out.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> UnitaryMatrix {
    let qr = gaussian_matrix(rng, dim, dim).qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            col *= d / d.norm();
        }
    }
    UnitaryMatrix::from_unchecked(q)
}

/// Uniform on the unit sphere of `C^2`.
pub fn random_amplitudes<R: Rng + ?Sized>(rng: &mut R) -> QubitAmplitudes {
    let v = random_pure_vector(rng, 2);
    QubitAmplitudes::normalized(v[0], v[1]).expect("nonzero Gaussian vector")
}

/// A random model with Gaussian Hermitian generators and a rank-limited
/// `R(0)`, plus random qubit amplitudes. Deterministic in `seed`.
pub fn random_instance(env_dim: usize, rank: usize, seed: u64) -> Result<(DephasingModel, QubitAmplitudes)> {
    let mut rng = rng(seed);
    let v0 = random_hermitian(&mut rng, env_dim);
    let v1 = random_hermitian(&mut rng, env_dim);
    let r0 = random_density(&mut rng, env_dim, rank)?;
    let amps = random_amplitudes(&mut rng);
    Ok((DephasingModel::new(v0, v1, r0)?, amps))
}

/// Kraus operators taken as the `dim x dim` blocks of an isometry obtained
/// by orthonormalizing a stacked Gaussian matrix.
pub fn random_channel(dim: usize, n_kraus: usize, seed: u64) -> Result<KrausChannel> {
    if n_kraus == 0 || dim == 0 {
        return Err(QeeError::InvalidParameter(
            "a channel needs dim >= 1 and at least one Kraus operator".into(),
        ));
    }
    let mut rng = rng(seed);
    let stacked = gaussian_matrix(&mut rng, n_kraus * dim, dim);
    let qr = stacked.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            col *= d / d.norm();
        }
    }
    let operators = (0..n_kraus)
        .map(|m| q.view((m * dim, 0), (dim, dim)).into_owned())
        .collect();
    KrausChannel::new(operators)
}
