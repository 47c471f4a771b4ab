//! Link-level simulator for downlink coordinated beamforming (CB).
//!
//! A cluster of `B` multi-antenna base stations jointly designs linear
//! transmit precoders and receive combiners for `B` mobile terminals (one
//! scheduled terminal per base station). The cluster operates inside a larger
//! network, so every terminal additionally sees out-of-cluster interference
//! (OCI, relative power `beta`, Nakagami-m amplitude statistics) and works
//! from pilot-based channel estimates (`Np` pilots) instead of perfect CSI.
//!
//! The crate is organised as follows:
//!
//! - [`model`]: random quantities of the system model — cluster channels,
//!   estimation errors, OCI vectors, AWGN — plus the reception chain.
//! - [`schemes`]: beamformer design. Interference alignment (IA), max-SINR,
//!   weighted-MMSE (WMMSE), the two-part "reconfigurable" design, and the
//!   non-coordinated full-reuse / orthogonal baselines.
//! - [`metrics`]: per-stream SINR, cluster sum rate, closed-form two-cell
//!   rate bounds, and power-calibration helpers.
//! - [`simulate`]: seeded Monte Carlo sweeps over (scheme, SNR, trial) with
//!   deterministic per-trial seed derivation.
//! - [`config`] / [`report`]: the flat `key = value` scenario format and the
//!   CSV result format used by the command line front end.

pub mod config;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod report;
pub mod schemes;
pub mod simulate;

use thiserror::Error;

/// Errors produced by simulator operations.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A configuration document could not be tokenised.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// A configuration value violated a model invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// An iterative solver or factorization broke down.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// The operation is defined only for a configuration we do not support.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Convert an SNR (or any power ratio) from dB to linear scale.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear power ratio to dB.
#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_conversions_round_trip() {
        for db in [-30.0, 0.0, 15.0, 22.5] {
            assert!((linear_to_db(db_to_linear(db)) - db).abs() < 1e-12);
        }
        assert_eq!(db_to_linear(f64::NEG_INFINITY), 0.0);
    }
}
