//! Bartlett (conventional beamformer) angle-of-arrival scan.

use crate::array::{directional_cosine_unchecked, steering_vector, ArrayConfig};
use crate::numerics::{hermitian_defect, sample_covariance};
use crate::{CMatrix, Error, Result};

pub const DEFAULT_GRID_STEP_DEG: f64 = 0.5;
/// Peak-to-mean power ratio below which an estimate is flagged.
pub const LOW_CONFIDENCE_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AngularSpectrum {
    pub grid_degrees: Vec<f64>,
    pub power: Vec<f64>,
}

impl AngularSpectrum {
    pub fn argmax(&self) -> usize {
        self.power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn peak_to_mean(&self) -> f64 {
        let mean = self.power.iter().sum::<f64>() / self.power.len() as f64;
        if mean > 0.0 {
            self.power[self.argmax()] / mean
        } else {
            0.0
        }
    }

    /// Local maxima, strongest first.
    pub fn peaks(&self, count: usize) -> Vec<usize> {
        let p = &self.power;
        let n = p.len();
        let mut idx: Vec<usize> = (0..n)
            .filter(|&i| {
                let left = i == 0 || p[i] >= p[i - 1];
                let right = i + 1 == n || p[i] > p[i + 1];
                left && right
            })
            .collect();
        idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
        idx.truncate(count);
        idx
    }

    /// Sub-grid peak position from a parabola through the three samples
    /// around grid index `i`.
    pub fn refine(&self, i: usize) -> f64 {
        let g = &self.grid_degrees;
        if i == 0 || i + 1 >= g.len() {
            return g[i];
        }
        let (l, c, r) = (self.power[i - 1], self.power[i], self.power[i + 1]);
        let denom = l - 2.0 * c + r;
        if denom >= 0.0 {
            return g[i];
        }
        let step = 0.5 * (g[i + 1] - g[i - 1]);
        let offset = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
        g[i] + offset * step
    }
}

/// Uniform grid over `[0°, 180°]`, including 180° when the step divides it.
pub fn angle_grid(step_deg: f64) -> Result<Vec<f64>> {
    if !(step_deg > 0.0 && step_deg <= 180.0) {
        return Err(Error::config(
            "grid_step_deg",
            format!("must be in (0, 180], got {step_deg}"),
        ));
    }
    let count = (180.0 / step_deg + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| (k as f64 * step_deg).min(180.0))
        .collect())
}

/// `P(φ) = a(Ω(φ))ᴴ R̂ a(Ω(φ)) / (aᴴa)` on each grid angle.
pub fn bartlett_spectrum(
    r_hat: &CMatrix,
    grid_degrees: &[f64],
    config: &ArrayConfig,
) -> Result<AngularSpectrum> {
    let n = config.n_antennas();
    if r_hat.nrows() != n || r_hat.ncols() != n {
        return Err(Error::Dimension(format!(
            "covariance is {}x{}, array has {n} elements",
            r_hat.nrows(),
            r_hat.ncols()
        )));
    }
    if grid_degrees.is_empty() {
        return Err(Error::Empty("angle grid"));
    }
    let defect = hermitian_defect(r_hat);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let power = grid_degrees
        .iter()
        .map(|&phi| {
            let omega = directional_cosine_unchecked(phi, config);
            let a = steering_vector(omega, 0, config)?.entries;
            let q = (a.adjoint() * r_hat * &a)[0].re / n as f64;
            Ok(q.max(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AngularSpectrum {
        grid_degrees: grid_degrees.to_vec(),
        power,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoaEstimate {
    /// Refined angles, strongest first.
    pub angles_deg: Vec<f64>,
    pub peak_to_mean: f64,
    pub low_confidence: bool,
}

impl AoaEstimate {
    pub fn primary(&self) -> f64 {
        self.angles_deg[0]
    }
}

/// Bartlett scan of the sample covariance of `samples` (columns are
/// snapshots), returning the `n_peaks` strongest refined peaks.
pub fn estimate_aoa(
    samples: &CMatrix,
    grid_step_deg: f64,
    n_peaks: usize,
    config: &ArrayConfig,
) -> Result<AoaEstimate> {
    estimate_aoa_from_covariance(&sample_covariance(samples)?, grid_step_deg, n_peaks, config)
}

/// [`estimate_aoa`] for an already computed sample covariance.
pub fn estimate_aoa_from_covariance(
    r_hat: &CMatrix,
    grid_step_deg: f64,
    n_peaks: usize,
    config: &ArrayConfig,
) -> Result<AoaEstimate> {
    let grid = angle_grid(grid_step_deg)?;
    let spectrum = bartlett_spectrum(r_hat, &grid, config)?;
    let angles_deg: Vec<f64> = spectrum
        .peaks(n_peaks.max(1))
        .into_iter()
        .map(|i| spectrum.refine(i))
        .collect();
    let peak_to_mean = spectrum.peak_to_mean();
    Ok(AoaEstimate {
        angles_deg,
        peak_to_mean,
        low_confidence: peak_to_mean < LOW_CONFIDENCE_RATIO,
    })
}
