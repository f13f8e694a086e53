//! Joint timing-offset and channel estimation for multi-user UFMC uplink.
//!
//! The crate is organised around the processing chain:
//!
//! - [`waveform`]: UFMC transmitter, flat-fading channel with fractional
//!   timing offsets, zero-padded 2N-point receiver front end and the
//!   timing-offset interference diagnostics.
//! - [`anm`]: the atomic-norm SDP (bordered Toeplitz form) solved by an
//!   operator-splitting method with PSD projections.
//! - [`estimator`]: matrix-pencil offset extraction, least-squares channel
//!   recovery, evaluation-time association, Timing Advance decisions and a
//!   correlation-peak baseline.
//! - [`harness`]: Monte Carlo NMSE and BER sweeps with CSV output.
//!
//! All times are in units of the sampling interval and the first detected
//! symbol starts at time zero.

pub mod anm;
pub mod config;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod qpsk;
pub mod waveform;

pub use num_complex::Complex64 as C64;

pub use config::{Config, ExperimentSettings, LambdaRule, ScenarioConfig, SolverParams, SystemConfig};
pub use error::{Error, Result};
