// Validation guards are written `!(x > 0.0)` so NaN inputs are rejected
// along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Time-resolved fourth-order interference of two single photons at a
//! beam splitter.
//!
//! The crate covers the full chain from first principles to extracted
//! parameters:
//!
//! - [`model`]: closed-form joint detection densities, the quantum-beat
//!   correlation law, visibility and temporal-filter observables;
//! - [`fock`]: an exact discretized two-photon verifier for the model;
//! - [`montecarlo`]: time-tagged event generation with periodic emission,
//!   random path routing, losses, and gated dark counts;
//! - [`correlator`]: coincidence histograms, background modeling and
//!   subtraction, temporal-filter post-selection;
//! - [`analysis`]: reference and beat-model fits, visibility curves,
//!   filter scans;
//! - [`cli`]: the `photon-beat` command-line front end.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod correlator;
pub mod error;
pub mod fock;
pub mod model;
pub mod montecarlo;
pub mod records;
pub mod simplex;

pub use config::{ExperimentConfig, RunMode};
pub use correlator::CorrelationHistogram;
pub use error::{Error, Result};
pub use model::{BeatModel, Channel, GridSpec, JointDensity, Polarization, Wavepacket};
pub use records::{DetectionRecord, Detector, Origin};
