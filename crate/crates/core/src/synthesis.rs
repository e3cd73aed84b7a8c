//! Received chip snapshots for one spread codeword.
//!
//! Column `i` of a frame is
//! `y[i] = (α0·e^{j∠g0}·a(Ω_d) + α1·e^{j∠g1}·a(Ω_s)·x̃[i])·s[i] + z[i]`
//! with unit-variance ambient samples `s[i]` and `CN(0, I)` noise.
//!
//! SNR is per antenna against unit noise: `α0² = snr`, and the scattered
//! amplitude sits `relative_loss_db` below it in power.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{directional_cosine, steering_vector, ArrayConfig};
use crate::channel::{path_gains, relative_loss_db, Geometry};
use crate::spreading::{spread, CodewordPair};
use crate::{CMatrix, CVector, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientModel {
    /// `s ~ CN(0, 1)`.
    #[default]
    ComplexGaussian,
    /// `|s| = 1` with uniform phase; used for exact noiseless checks.
    UnitModulus,
}

/// Fully resolved physical configuration of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub array: ArrayConfig,
    pub geometry: Geometry,
    pub lambda_m: f64,
    /// Direct-link SNR per antenna.
    pub snr_db: f64,
    pub code_order: u32,
    pub code_rows: (usize, usize),
    pub ambient_model: AmbientModel,
    /// Drop receiver noise entirely.
    pub noiseless: bool,
}

impl Scenario {
    pub fn codeword_len(&self) -> usize {
        1 << self.code_order
    }

    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db", "must be finite"));
        }
        path_gains(&self.geometry, self.lambda_m)?;
        directional_cosine(self.geometry.aoa_direct_deg, &self.array)?;
        directional_cosine(self.geometry.aoa_scattered_deg, &self.array)?;
        crate::spreading::select_pair(self.code_order, self.code_rows.0, self.code_rows.1)?;
        Ok(())
    }
}

/// Per-antenna path amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub alpha0: f64,
    pub alpha1: f64,
}

impl Amplitudes {
    pub fn direct_snr_db(&self) -> f64 {
        20.0 * self.alpha0.log10()
    }

    pub fn scattered_snr_db(&self) -> f64 {
        20.0 * self.alpha1.log10()
    }
}

/// Direct amplitude from the SNR; scattered amplitude `loss_db` lower in power.
pub fn amplitudes_for_loss(snr_db: f64, loss_db: f64) -> Amplitudes {
    let alpha0 = 10f64.powf(snr_db / 20.0);
    Amplitudes {
        alpha0,
        alpha1: alpha0 * 10f64.powf(-loss_db / 20.0),
    }
}

pub fn amplitude_calibration(scenario: &Scenario) -> Result<Amplitudes> {
    let loss = relative_loss_db(&scenario.geometry, scenario.lambda_m)?;
    Ok(amplitudes_for_loss(scenario.snr_db, loss))
}

/// Noise-free array responses of both paths, ready for repeated synthesis.
#[derive(Debug, Clone)]
pub struct SignalModel {
    /// `α0·e^{j∠g0}·a(Ω_direct)`
    pub direct: CVector,
    /// `α1·e^{j∠g1}·a(Ω_scattered)`
    pub scattered: CVector,
    pub ambient: AmbientModel,
    pub noise: bool,
}

impl SignalModel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let amps = amplitude_calibration(scenario)?;
        let gains = path_gains(&scenario.geometry, scenario.lambda_m)?;
        let om_d = directional_cosine(scenario.geometry.aoa_direct_deg, &scenario.array)?;
        let om_s = directional_cosine(scenario.geometry.aoa_scattered_deg, &scenario.array)?;
        let ph0 = Complex64::from_polar(amps.alpha0, gains.g0.arg());
        let ph1 = Complex64::from_polar(amps.alpha1, gains.g1.arg());
        Ok(Self {
            direct: steering_vector(om_d, 0, &scenario.array)?.entries * ph0,
            scattered: steering_vector(om_s, 0, &scenario.array)?.entries * ph1,
            ambient: scenario.ambient_model,
            noise: !scenario.noiseless,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.direct.len()
    }

    /// Snapshots for an arbitrary ±1 chip sequence.
    pub fn synthesize_chips<R: Rng + ?Sized>(&self, chips: &[i8], rng: &mut R) -> CMatrix {
        let n = self.n_antennas();
        let mut y = CMatrix::zeros(n, chips.len());
        let plus = &self.direct + &self.scattered;
        let minus = &self.direct - &self.scattered;
        for (i, &chip) in chips.iter().enumerate() {
            let s = ambient_sample(self.ambient, rng);
            let response = if chip >= 0 { &plus } else { &minus };
            let mut col = y.column_mut(i);
            for k in 0..n {
                col[k] = response[k] * s;
            }
            if self.noise {
                for k in 0..n {
                    col[k] += complex_normal(rng);
                }
            }
        }
        y
    }
}

/// One codeword's worth of received snapshots plus the transmitted truth.
#[derive(Debug, Clone)]
pub struct ChipFrame {
    /// `N × M`, column `i` is `y[i]`.
    pub samples: CMatrix,
    pub truth_symbol: i8,
    pub truth_chips: Vec<i8>,
}

pub fn synthesize_codeword<R: Rng + ?Sized>(
    model: &SignalModel,
    symbol: i8,
    pair: &CodewordPair,
    rng: &mut R,
) -> Result<ChipFrame> {
    let chips = spread(symbol, pair)?;
    Ok(ChipFrame {
        samples: model.synthesize_chips(chips, rng),
        truth_symbol: symbol,
        truth_chips: chips.to_vec(),
    })
}

/// Circular complex Gaussian with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn ambient_sample<R: Rng + ?Sized>(model: AmbientModel, rng: &mut R) -> Complex64 {
    match model {
        AmbientModel::ComplexGaussian => complex_normal(rng),
        AmbientModel::UnitModulus => {
            Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::derive_geometry;
    use crate::numerics::sample_covariance;
    use crate::spreading::default_pair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(snr_db: f64, d1: f64) -> Scenario {
        Scenario {
            array: ArrayConfig::half_wavelength(8).unwrap(),
            geometry: derive_geometry(1000.0, d1, 60.0, 90.0).unwrap(),
            lambda_m: 0.6,
            snr_db,
            code_order: 4,
            code_rows: (1, 2),
            ambient_model: AmbientModel::ComplexGaussian,
            noiseless: false,
        }
    }

    #[test]
    fn calibration_examples() {
        let a = amplitudes_for_loss(30.0, 27.0);
        assert!((a.scattered_snr_db() - 3.0).abs() < 1e-12);
        let a = amplitude_calibration(&scenario(0.0, 2.0)).unwrap();
        assert_eq!(a.alpha0, 1.0);
        let a = amplitude_calibration(&scenario(13.0, 2.0)).unwrap();
        assert!((a.direct_snr_db() - 13.0).abs() < 1e-12);
        assert!(
            (a.scattered_snr_db() + 19.4).abs() < 0.1,
            "{}",
            a.scattered_snr_db()
        );
    }

    #[test]
    fn noiseless_single_path_columns_follow_direct_response() {
        let sc = Scenario {
            noiseless: true,
            ambient_model: AmbientModel::UnitModulus,
            ..scenario(20.0, 2.0)
        };
        let mut model = SignalModel::new(&sc).unwrap();
        model.scattered.fill(Complex64::new(0.0, 0.0));
        let pair = default_pair(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frame = synthesize_codeword(&model, -1, &pair, &mut rng).unwrap();
        assert_eq!(frame.truth_chips, pair.code_minus);
        for col in frame.samples.column_iter() {
            let ratio = col[0] / model.direct[0];
            assert!((ratio.norm() - 1.0).abs() < 1e-12);
            for k in 0..8 {
                assert!((col[k] - model.direct[k] * ratio).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn pure_noise_covariance_is_identity() {
        let mut model = SignalModel::new(&scenario(0.0, 2.0)).unwrap();
        model.direct.fill(Complex64::new(0.0, 0.0));
        model.scattered.fill(Complex64::new(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = model.synthesize_chips(&vec![1; 50_000], &mut rng);
        let r = sample_covariance(&y).unwrap();
        let dev = (r - CMatrix::identity(8, 8))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 0.04, "{dev}");
    }

    #[test]
    fn empirical_direct_snr_matches_configured() {
        let sc = scenario(10.0, 2.0);
        let mut model = SignalModel::new(&sc).unwrap();
        model.scattered.fill(Complex64::new(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let chips = vec![1i8; 100_000];
        let y = model.synthesize_chips(&chips, &mut rng);
        // Per-antenna power is α0² + 1; noise power is 1.
        let per_antenna = y.norm_squared() / (8.0 * chips.len() as f64);
        let snr = 10.0 * (per_antenna - 1.0).log10();
        assert!((snr - 10.0).abs() < 0.2, "{snr}");
    }

    #[test]
    fn direct_only_covariance_structure() {
        // E{y y†} = α0² a a† + I, checked against 3 standard errors per entry.
        let sc = scenario(3.0, 2.0);
        let mut model = SignalModel::new(&sc).unwrap();
        model.scattered.fill(Complex64::new(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = 100_000;
        let y = model.synthesize_chips(&vec![1; m], &mut rng);
        let r = sample_covariance(&y).unwrap();
        let expected = &model.direct * model.direct.adjoint() + CMatrix::identity(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                // Var of y_i y_j* for circular Gaussians is E|y_i|² E|y_j|².
                let se = (expected[(i, i)].re * expected[(j, j)].re / m as f64).sqrt();
                assert!((r[(i, j)] - expected[(i, j)]).norm() < 3.0 * se * 1.5);
            }
        }
    }

    #[test]
    fn unit_modulus_ambient_has_unit_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let s = ambient_sample(AmbientModel::UnitModulus, &mut rng);
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn synthesis_is_seed_deterministic() {
        let model = SignalModel::new(&scenario(10.0, 3.0)).unwrap();
        let pair = default_pair(4).unwrap();
        let a = synthesize_codeword(&model, 1, &pair, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = synthesize_codeword(&model, 1, &pair, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!(synthesize_codeword(&model, 0, &pair, &mut ChaCha8Rng::seed_from_u64(9)).is_err());
    }
}
