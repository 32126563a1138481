//! Desk-scale cognitive massive-MIMO radar simulator.
//!
//! The crate closes a perception-action loop around a colocated MIMO radar:
//!
//! * [`array`] — ULA steering vectors, transmit beampattern, and the
//!   Kronecker virtual channel that links beam weights to the received
//!   signal model.
//! * [`disturbance`] — correlated heavy-tailed AR clutter generation, its
//!   power spectral density, and the single-snapshot banded covariance
//!   estimator used by the detector.
//! * [`detector`] — robust Wald-type CFAR statistic, threshold, amplitude
//!   and noncentrality estimators, and the Marcum Q detection probability.
//! * [`beamformer`] — max-min transmit beampattern synthesis toward a set
//!   of angle bins by iterative inner convex approximation.
//! * [`agent`] — tabular SARSA over candidate-bin-set sizes with an
//!   ε-greedy policy and a detection-probability reward.
//! * [`simulator`] — scenario-driven closed-loop episodes and Monte Carlo
//!   replication over policies (RL, omnidirectional, adaptive-no-RL).
//! * [`scenario`] — scenario configuration, a line-oriented file format,
//!   and bundled experiment presets.
//! * [`report`] — delimited text report tables for plotting tools.
//!
//! All randomness flows through caller-supplied [`rand`] sources; every
//! simulation artifact is a pure function of its scenario and seed.

pub mod agent;
pub mod array;
pub mod beamformer;
pub mod detector;
pub mod disturbance;
pub mod error;
pub mod report;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;
