//! Link-level simulator for a hybrid analog-digital null-steering receiver
//! for bi-static ambient backscatter.
//!
//! The receiver chain is:
//!
//! 1. [`synthesis`] builds the per-chip array snapshots of one spread codeword
//!    (strong direct path plus weak tag-modulated scattered path).
//! 2. [`aoa`] estimates the direct-path angle with a Bartlett scan.
//! 3. [`beamformer`] nulls the direct path with derivative constraints, splits
//!    the array space into range and null eigenspaces, and combines each with
//!    its principal eigenvector.
//! 4. [`detector`] cancels the unknown ambient phase by cross-correlating the
//!    two beams, then picks the Hadamard codeword with the larger energy.
//!
//! [`sim`] runs this end to end under Monte Carlo and aggregates BER.

pub mod aoa;
pub mod array;
pub mod beamformer;
pub mod channel;
pub mod config;
pub mod detector;
pub mod error;
pub mod numerics;
pub mod sim;
pub mod spreading;
pub mod synthesis;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Column-major dense complex matrix used throughout the receiver.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
