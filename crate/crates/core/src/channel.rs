//! Deterministic two-path geometry and free-space path gains.
//!
//! The gains follow the Friis power law: the direct path carries
//! `(λ/4π)² / d0²` and the scattered path the product of both hops,
//! `(λ/4π)⁴ / (d1² d2²)`, each with its propagation phase. Because these are
//! power gains, the scattered path sits `10·log10(|g0|/|g1|)` dB below the
//! direct path.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Carrier wavelength in metres.
pub fn wavelength(carrier_hz: f64) -> Result<f64> {
    if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
        return Err(Error::InvalidWavelength(f64::NAN));
    }
    Ok(SPEED_OF_LIGHT / carrier_hz)
}

/// Receiver at the origin; source and tag placed by range and bearing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Source to receiver.
    pub d0_m: f64,
    /// Tag to receiver.
    pub d1_m: f64,
    /// Source to tag.
    pub d2_m: f64,
    pub aoa_direct_deg: f64,
    pub aoa_scattered_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGains {
    pub g0: Complex64,
    pub g1: Complex64,
}

/// Places the source at `(d0, φ_direct)` and the tag at `(d1, φ_scattered)`
/// and closes the triangle with the law of cosines.
pub fn derive_geometry(
    d0_m: f64,
    d1_m: f64,
    aoa_direct_deg: f64,
    aoa_scattered_deg: f64,
) -> Result<Geometry> {
    for (name, d) in [("d0", d0_m), ("d1", d1_m)] {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "{name} must be positive, got {d}"
            )));
        }
    }
    for a in [aoa_direct_deg, aoa_scattered_deg] {
        if !(0.0..=180.0).contains(&a) {
            return Err(Error::AngleOutOfRange(a));
        }
    }
    let included = (aoa_direct_deg - aoa_scattered_deg).abs().to_radians();
    let d2_sq = d0_m * d0_m + d1_m * d1_m - 2.0 * d0_m * d1_m * included.cos();
    let d2_m = d2_sq.max(0.0).sqrt();
    if d2_m <= 1e-9 * d0_m.max(d1_m) {
        return Err(Error::InvalidGeometry(
            "source and tag positions coincide".into(),
        ));
    }
    Ok(Geometry {
        d0_m,
        d1_m,
        d2_m,
        aoa_direct_deg,
        aoa_scattered_deg,
    })
}

pub fn path_gains(geometry: &Geometry, lambda_m: f64) -> Result<PathGains> {
    check_lambda(lambda_m)?;
    let k = lambda_m / (4.0 * PI);
    let Geometry {
        d0_m, d1_m, d2_m, ..
    } = *geometry;
    let g0 = Complex64::from_polar(k * k / (d0_m * d0_m), -2.0 * PI * d0_m / lambda_m);
    let g1 = Complex64::from_polar(
        k.powi(4) / (d1_m * d1_m * d2_m * d2_m),
        -2.0 * PI * (d1_m + d2_m) / lambda_m,
    );
    Ok(PathGains { g0, g1 })
}

/// How far the scattered path sits below the direct one, in dB.
pub fn relative_loss_db(geometry: &Geometry, lambda_m: f64) -> Result<f64> {
    check_lambda(lambda_m)?;
    // Computed from the closed form rather than the gains: |g1| underflows
    // long before the ratio becomes meaningless.
    let k = 4.0 * PI / lambda_m;
    let Geometry {
        d0_m, d1_m, d2_m, ..
    } = *geometry;
    Ok(10.0 * (k * k * d1_m * d1_m * d2_m * d2_m / (d0_m * d0_m)).log10())
}

fn check_lambda(lambda_m: f64) -> Result<()> {
    if lambda_m > 0.0 && lambda_m.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWavelength(lambda_m))
    }
}
