//! Two-stage hybrid null-steering beamformer.
//!
//! Stage 1 builds the constraint matrix `C = [a, a′, a″]` at the direct-path
//! angle and eigendecomposes `Q = C Cᴴ`. The eigenvectors with non-zero
//! eigenvalues (`R`) span the direct-path range space, the rest (`Ψ`) its
//! null space. Every snapshot is split as `u0 = Rᴴy`, `u1 = Ψᴴy`; the
//! derivative columns keep the null deep when the angle estimate is off.
//!
//! Stage 2 combines each branch with the principal eigenvector of its sample
//! covariance, giving `ν0 ≈ h0·s` and `ν1 ≈ h1·s·x̃`.

use num_complex::Complex64;

use crate::array::{directional_cosine, steering_vector, ArrayConfig};
use crate::numerics::{congruence, eigh, principal_eigenvector, sample_covariance};
use crate::{CMatrix, CVector, Error, Result};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    /// `N × (orders·paths)`; for each path the columns are `a⁽⁰⁾ … a⁽ᵐ⁾`.
    pub columns: CMatrix,
    pub n_paths: usize,
}

/// `[a, a′, a″]` at one angle.
pub fn constraint_matrix(aoa_deg: f64, config: &ArrayConfig) -> Result<ConstraintMatrix> {
    constraint_matrix_for(&[aoa_deg], 2, config)
}

/// Derivative blocks up to `max_order` for every angle in `angles_deg`,
/// concatenated column-wise.
pub fn constraint_matrix_for(
    angles_deg: &[f64],
    max_order: usize,
    config: &ArrayConfig,
) -> Result<ConstraintMatrix> {
    let n = config.n_antennas();
    let per_path = max_order + 1;
    let cols = per_path * angles_deg.len();
    if angles_deg.is_empty() {
        return Err(Error::Empty("constraint angles"));
    }
    if n <= cols {
        return Err(Error::InvalidArray(format!(
            "{n} antennas cannot null {cols} constraint columns"
        )));
    }
    let mut columns = CMatrix::zeros(n, cols);
    for (p, &angle) in angles_deg.iter().enumerate() {
        let omega = directional_cosine(angle, config)?;
        for order in 0..per_path {
            let a = steering_vector(omega, order, config)?;
            columns.set_column(p * per_path + order, &a.entries);
        }
    }
    Ok(ConstraintMatrix {
        columns,
        n_paths: angles_deg.len(),
    })
}

/// Orthonormal range/null split of the constraint space.
#[derive(Debug, Clone)]
pub struct EigenSplit {
    /// `R`, `N × r`.
    pub range_basis: CMatrix,
    /// `Ψ`, `N × (N − r)`.
    pub null_basis: CMatrix,
    pub rank: usize,
    /// Spectrum of `Q`, descending.
    pub eigenvalues: Vec<f64>,
}

impl EigenSplit {
    pub fn n_antennas(&self) -> usize {
        self.range_basis.nrows()
    }

    /// `‖Ψᴴ a‖² / ‖a‖²` in dB.
    pub fn leakage_db(&self, response: &CVector) -> f64 {
        let leaked = (self.null_basis.adjoint() * response).norm_squared();
        10.0 * (leaked / response.norm_squared()).log10()
    }
}

pub fn eigensplit(c: &ConstraintMatrix, rank_tol: f64) -> Result<EigenSplit> {
    let q = &c.columns * c.columns.adjoint();
    let eig = eigh(&q)?;
    let top = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(Error::NoSignalSubspace);
    }
    let rank = eig
        .eigenvalues
        .iter()
        .take_while(|&&l| l > rank_tol * top)
        .count();
    let n = q.nrows();
    if rank == 0 {
        return Err(Error::NoSignalSubspace);
    }
    Ok(EigenSplit {
        range_basis: eig.eigenvectors.columns(0, rank).into_owned(),
        null_basis: eig.eigenvectors.columns(rank, n - rank).into_owned(),
        rank,
        eigenvalues: eig.eigenvalues,
    })
}

/// `(Rᴴ Y, Ψᴴ Y)`.
pub fn stage1_project(split: &EigenSplit, samples: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if samples.nrows() != split.n_antennas() {
        return Err(Error::Dimension(format!(
            "frame has {} rows, split expects {}",
            samples.nrows(),
            split.n_antennas()
        )));
    }
    Ok((
        split.range_basis.adjoint() * samples,
        split.null_basis.adjoint() * samples,
    ))
}

/// Principal eigenvector and eigenvalue of the sample covariance of the
/// columns of `u`.
pub fn stage2_weights(u: &CMatrix) -> Result<(CVector, f64)> {
    if u.ncols() == 0 {
        return Err(Error::Empty("stage-2 samples"));
    }
    if u.ncols() < u.nrows() {
        log::warn!(
            "stage-2 covariance from {} samples in dimension {}",
            u.ncols(),
            u.nrows()
        );
    }
    principal_eigenvector(&sample_covariance(u)?)
}

#[derive(Debug, Clone)]
pub struct BeamformerState {
    pub split: EigenSplit,
    pub v0: CVector,
    pub v1: CVector,
    pub mu0: f64,
    pub mu1: f64,
}

impl BeamformerState {
    /// Estimate both second-stage weights from one frame.
    pub fn train(split: EigenSplit, samples: &CMatrix) -> Result<Self> {
        let (u0, u1) = stage1_project(&split, samples)?;
        let (v0, mu0) = stage2_weights(&u0)?;
        let (v1, mu1) = stage2_weights(&u1)?;
        Ok(Self {
            split,
            v0,
            v1,
            mu0,
            mu1,
        })
    }

    /// Same weights as [`BeamformerState::train`], from the frame's sample
    /// covariance `R̂`: the branch covariances are `Rᴴ R̂ R` and `Ψᴴ R̂ Ψ`.
    pub fn train_from_covariance(split: EigenSplit, r_hat: &CMatrix) -> Result<Self> {
        if r_hat.nrows() != split.n_antennas() || !r_hat.is_square() {
            return Err(Error::Dimension(format!(
                "covariance is {}x{}, split expects {}",
                r_hat.nrows(),
                r_hat.ncols(),
                split.n_antennas()
            )));
        }
        let (v0, mu0) = principal_eigenvector(&congruence(&split.range_basis, r_hat))?;
        let (v1, mu1) = principal_eigenvector(&congruence(&split.null_basis, r_hat))?;
        Ok(Self {
            split,
            v0,
            v1,
            mu0,
            mu1,
        })
    }

    /// Composite array weights `w0 = R v0`, `w1 = Ψ v1`.
    pub fn array_weights(&self) -> (CVector, CVector) {
        (
            &self.split.range_basis * &self.v0,
            &self.split.null_basis * &self.v1,
        )
    }

    /// `h0 = w0ᴴ d`, `h1 = w1ᴴ b` for noise-free path responses `d`, `b`.
    pub fn effective_gains(&self, direct: &CVector, scattered: &CVector) -> (Complex64, Complex64) {
        let (w0, w1) = self.array_weights();
        (w0.dotc(direct), w1.dotc(scattered))
    }
}

/// `ν0[i] = v0ᴴ u0[i]`, `ν1[i] = v1ᴴ u1[i]`.
pub fn beamform_outputs(
    state: &BeamformerState,
    samples: &CMatrix,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if samples.nrows() != state.split.n_antennas() {
        return Err(Error::Dimension(format!(
            "frame has {} rows, beamformer expects {}",
            samples.nrows(),
            state.split.n_antennas()
        )));
    }
    let (w0, w1) = state.array_weights();
    let mut nu0 = Vec::with_capacity(samples.ncols());
    let mut nu1 = Vec::with_capacity(samples.ncols());
    for col in samples.column_iter() {
        nu0.push(w0.dotc(&col));
        nu1.push(w1.dotc(&col));
    }
    Ok((nu0, nu1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::complex_normal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg8() -> ArrayConfig {
        ArrayConfig::half_wavelength(8).unwrap()
    }

    fn a_at(angle: f64, cfg: &ArrayConfig) -> CVector {
        steering_vector(directional_cosine(angle, cfg).unwrap(), 0, cfg)
            .unwrap()
            .entries
    }

    fn split_at(angle: f64) -> EigenSplit {
        eigensplit(
            &constraint_matrix(angle, &cfg8()).unwrap(),
            DEFAULT_RANK_TOL,
        )
        .unwrap()
    }

    /// Gram determinant of the columns, computed by Gaussian elimination
    /// independently of the eigensolver.
    fn gram_det(c: &CMatrix) -> f64 {
        let g = c.adjoint() * c;
        g.determinant().re
    }

    #[test]
    fn constraint_columns_at_broadside() {
        let cfg = ArrayConfig::half_wavelength(4).unwrap();
        let c = constraint_matrix(90.0, &cfg).unwrap().columns;
        for n in 0..4 {
            let nf = n as f64;
            assert!((c[(n, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!((c[(n, 1)] - Complex64::new(0.0, nf)).norm() < 1e-12);
            assert!((c[(n, 2)] - Complex64::new(-nf * nf, 0.0)).norm() < 1e-12);
        }
        assert!(constraint_matrix(90.0, &ArrayConfig::half_wavelength(3).unwrap()).is_err());
    }

    #[test]
    fn rank_three_for_single_path() {
        let c = constraint_matrix(60.0, &cfg8()).unwrap();
        assert_eq!(c.columns.shape(), (8, 3));
        assert!(gram_det(&c.columns) > 1e-6);
        let split = eigensplit(&c, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(split.rank, 3);
        assert_eq!(split.null_basis.ncols(), 5);
        let cross = split.range_basis.adjoint() * &split.null_basis;
        assert!(cross.norm() < 1e-12);
        let full = CMatrix::from_fn(8, 8, |i, j| {
            if j < 3 {
                split.range_basis[(i, j)]
            } else {
                split.null_basis[(i, j - 3)]
            }
        });
        assert!((full.adjoint() * &full - CMatrix::identity(8, 8)).norm() < 1e-12);
        for col in c.columns.column_iter() {
            assert!((split.null_basis.adjoint() * col).norm() <= 1e-8);
        }
    }

    #[test]
    fn exact_null_is_machine_deep() {
        let split = split_at(60.0);
        let a = a_at(60.0, &cfg8());
        let leak = (split.null_basis.adjoint() * &a).norm_squared() / 8.0;
        assert!(leak <= 1e-20, "{leak:e}");
        assert!((split.null_basis.adjoint() * &a).norm() < 1e-10);
    }

    #[test]
    fn derivative_constraints_widen_the_null() {
        let cfg = cfg8();
        let deriv = split_at(60.0);
        let plain = eigensplit(
            &constraint_matrix_for(&[60.0], 0, &cfg).unwrap(),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert_eq!(plain.rank, 1);
        let off = a_at(61.0, &cfg);
        let with = deriv.leakage_db(&off);
        let without = plain.leakage_db(&off);
        assert!(without - with >= 30.0, "{with} vs {without}");
    }

    #[test]
    fn scattered_energy_survives_projection() {
        let split = split_at(60.0);
        let b = a_at(90.0, &cfg8());
        let kept = (split.null_basis.adjoint() * &b).norm_squared();
        let lost = (split.range_basis.adjoint() * &b).norm_squared();
        assert!(kept / lost > 1.0, "{kept} / {lost}");
    }

    #[test]
    fn projection_conserves_energy_and_nulls_direct_path() {
        let cfg = cfg8();
        let split = split_at(60.0);
        let a = a_at(60.0, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let direct = CMatrix::from_fn(8, 64, |i, _| a[i]) * Complex64::new(3.0, -1.0);
        let (_, u1) = stage1_project(&split, &direct).unwrap();
        assert!(u1.norm() < 1e-9);

        let y = CMatrix::from_fn(8, 64, |_, _| complex_normal(&mut rng));
        let (u0, u1) = stage1_project(&split, &y).unwrap();
        for i in 0..64 {
            let total = y.column(i).norm_squared();
            let parts = u0.column(i).norm_squared() + u1.column(i).norm_squared();
            assert!((total - parts).abs() < 1e-10 * total);
        }
        assert!(stage1_project(&split, &CMatrix::zeros(7, 4)).is_err());
    }

    #[test]
    fn white_noise_energy_splits_by_dimension() {
        let split = split_at(60.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let y = CMatrix::from_fn(8, 40_000, |_, _| complex_normal(&mut rng));
        let (u0, u1) = stage1_project(&split, &y).unwrap();
        let ratio = u0.norm_squared() / u1.norm_squared();
        assert!((ratio - 3.0 / 5.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn stage2_rank_one_and_noise() {
        let b = CVector::from_vec(vec![
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, -2.0),
            Complex64::new(0.5, 0.0),
        ]);
        let u = CMatrix::from_fn(3, 10, |i, _| b[i]);
        let (v, mu) = stage2_weights(&u).unwrap();
        assert!((v.dotc(&b).norm() - b.norm()).abs() < 1e-12);
        assert!((mu - b.norm_squared()).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let z = CMatrix::from_fn(5, 50_000, |_, _| complex_normal(&mut rng));
        let (_, mu) = stage2_weights(&z).unwrap();
        // Largest Wishart eigenvalue edge: (1 + sqrt(5/50000))² ≈ 1.02.
        assert!((mu - 1.0).abs() < 0.05, "{mu}");
        assert!(stage2_weights(&CMatrix::zeros(3, 0)).is_err());
    }

    #[test]
    fn stage2_maximizes_rayleigh_quotient() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let u = CMatrix::from_fn(5, 200, |_, _| {
            complex_normal(&mut rng) * rng.random_range(0.5..2.0)
        });
        let sigma = sample_covariance(&u).unwrap();
        let (v, _) = stage2_weights(&u).unwrap();
        let best = (v.adjoint() * &sigma * &v)[0].re;
        for _ in 0..10_000 {
            let w = CVector::from_fn(5, |_, _| complex_normal(&mut rng));
            let w = &w / Complex64::new(w.norm(), 0.0);
            assert!(best >= (w.adjoint() * &sigma * &w)[0].re - 1e-12);
        }
    }

    #[test]
    fn covariance_route_matches_projection_route() {
        let split = split_at(60.0);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let y = CMatrix::from_fn(8, 300, |_, _| {
            complex_normal(&mut rng) * rng.random_range(0.1..3.0)
        });
        let a = BeamformerState::train(split.clone(), &y).unwrap();
        let b =
            BeamformerState::train_from_covariance(split, &sample_covariance(&y).unwrap()).unwrap();
        assert!((a.mu0 - b.mu0).abs() < 1e-10 * a.mu0);
        assert!((a.mu1 - b.mu1).abs() < 1e-10 * a.mu1);
        assert!(a.v0.dotc(&b.v0).norm() > 1.0 - 1e-10);
        assert!(a.v1.dotc(&b.v1).norm() > 1.0 - 1e-10);
    }

    #[test]
    fn noiseless_outputs() {
        let cfg = cfg8();
        let split = split_at(60.0);
        let d = a_at(60.0, &cfg) * Complex64::new(10.0, 0.0);
        let b = a_at(90.0, &cfg) * Complex64::new(0.1, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let chips: Vec<f64> = (0..32)
            .map(|i| if i % 3 == 0 { -1.0 } else { 1.0 })
            .collect();
        let s: Vec<Complex64> = (0..32)
            .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..6.3)))
            .collect();

        // Direct only: |ν0| constant, ν1 ≡ 0.
        let y = CMatrix::from_fn(8, 32, |k, i| d[k] * s[i]);
        let state = BeamformerState::train(split.clone(), &y).unwrap();
        let (nu0, _) = beamform_outputs(&state, &y).unwrap();
        let mag = nu0[0].norm();
        assert!(nu0.iter().all(|z| (z.norm() - mag).abs() < 1e-9 * mag));
        let (w0, w1) = state.array_weights();
        assert!((w0.norm() - 1.0).abs() < 1e-12 && (w1.norm() - 1.0).abs() < 1e-12);
        let nu1: Vec<Complex64> = (w1.adjoint() * &y).iter().copied().collect();
        assert!(nu1.iter().all(|z| z.norm() < 1e-9));

        // Both paths: ν1[i] / (h1 s[i]) recovers the chip exactly.
        let y = CMatrix::from_fn(8, 32, |k, i| (d[k] + b[k] * chips[i]) * s[i]);
        let state = BeamformerState::train(split, &y).unwrap();
        let (_, nu1) = beamform_outputs(&state, &y).unwrap();
        let (_, h1) = state.effective_gains(&d, &b);
        for i in 0..32 {
            let x = nu1[i] / (h1 * s[i]);
            assert!((x - Complex64::new(chips[i], 0.0)).norm() < 1e-9);
        }
    }
}
