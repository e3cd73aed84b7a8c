//! Uniform linear array manifold.

use num_complex::Complex64;

use crate::{CVector, Error, Result};

/// Uniform linear array with element spacing given in carrier wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    n_antennas: usize,
    spacing_wavelengths: f64,
}

impl ArrayConfig {
    pub fn new(n_antennas: usize, spacing_wavelengths: f64) -> Result<Self> {
        if n_antennas < 2 {
            return Err(Error::InvalidArray(format!(
                "need at least 2 antennas, got {n_antennas}"
            )));
        }
        if !(spacing_wavelengths > 0.0 && spacing_wavelengths.is_finite()) {
            return Err(Error::InvalidArray(format!(
                "spacing must be positive, got {spacing_wavelengths}"
            )));
        }
        Ok(Self {
            n_antennas,
            spacing_wavelengths,
        })
    }

    /// Half-wavelength array.
    pub fn half_wavelength(n_antennas: usize) -> Result<Self> {
        Self::new(n_antennas, 0.5)
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }
}

/// Array response `a(Ω)` or one of its derivatives with respect to `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub entries: CVector,
    pub derivative_order: usize,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Inter-element phase progression `Ω = 2π·Δd·cos φ` for arrival angle `φ`
/// (degrees, broadside at 90°).
pub fn directional_cosine(aoa_degrees: f64, config: &ArrayConfig) -> Result<f64> {
    if !(0.0..=180.0).contains(&aoa_degrees) {
        return Err(Error::AngleOutOfRange(aoa_degrees));
    }
    Ok(directional_cosine_unchecked(aoa_degrees, config))
}

pub(crate) fn directional_cosine_unchecked(aoa_degrees: f64, config: &ArrayConfig) -> f64 {
    2.0 * std::f64::consts::PI * config.spacing_wavelengths * aoa_degrees.to_radians().cos()
}

/// Entry `n` is `(j·n)^order · e^{j·n·Ω}`, the `order`-th derivative of
/// `e^{j·n·Ω}`. Orders above 2 are rejected.
pub fn steering_vector(omega: f64, order: usize, config: &ArrayConfig) -> Result<SteeringVector> {
    if order > 2 {
        return Err(Error::UnsupportedDerivative(order));
    }
    let entries = CVector::from_fn(config.n_antennas, |n, _| {
        let n = n as f64;
        let phase = Complex64::from_polar(1.0, n * omega);
        let factor = match order {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, n),
            _ => Complex64::new(-n * n, 0.0),
        };
        factor * phase
    });
    Ok(SteeringVector {
        entries,
        derivative_order: order,
    })
}
