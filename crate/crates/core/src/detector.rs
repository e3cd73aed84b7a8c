//! Two-phase correlator: cancel the ambient phase, then compare codeword
//! energies.

use num_complex::Complex64;

use crate::spreading::CodewordPair;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub decision: i8,
}

/// `ν̃[i] = ν0[i]* · ν1[i]`.
pub fn cross_correlate(nu0: &[Complex64], nu1: &[Complex64]) -> Result<Vec<Complex64>> {
    if nu0.len() != nu1.len() {
        return Err(Error::LengthMismatch {
            left: nu0.len(),
            right: nu1.len(),
        });
    }
    Ok(nu0.iter().zip(nu1).map(|(a, b)| a.conj() * b).collect())
}

/// `|⟨ν̃, c⟩|²` for both codewords.
pub fn codeword_energies(nu_tilde: &[Complex64], pair: &CodewordPair) -> Result<(f64, f64)> {
    if nu_tilde.len() != pair.len() {
        return Err(Error::LengthMismatch {
            left: nu_tilde.len(),
            right: pair.len(),
        });
    }
    let correlate = |code: &[i8]| {
        nu_tilde
            .iter()
            .zip(code)
            .fold(Complex64::new(0.0, 0.0), |acc, (z, &c)| {
                if c > 0 {
                    acc + z
                } else {
                    acc - z
                }
            })
            .norm_sqr()
    };
    Ok((correlate(&pair.code_plus), correlate(&pair.code_minus)))
}

/// Ties go to +1.
pub fn decide(gamma_plus: f64, gamma_minus: f64) -> i8 {
    if gamma_plus >= gamma_minus {
        1
    } else {
        -1
    }
}

pub fn detect(
    nu0: &[Complex64],
    nu1: &[Complex64],
    pair: &CodewordPair,
) -> Result<DetectionResult> {
    let nu_tilde = cross_correlate(nu0, nu1)?;
    let (gamma_plus, gamma_minus) = codeword_energies(&nu_tilde, pair)?;
    Ok(DetectionResult {
        gamma_plus,
        gamma_minus,
        decision: decide(gamma_plus, gamma_minus),
    })
}
