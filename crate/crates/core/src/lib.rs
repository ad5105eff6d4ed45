//! Crackling-noise analysis library.
//!
//! Turns multichannel waveform events into per-time-step functional
//! networks, tracks the modularity-based R-profile through the
//! strengthening / weakening / decelerating phases of a single event,
//! maps degree dynamics onto an Ising-like sign chain, measures the
//! frozen correlation length near the critical point, and fits the
//! Kibble-Zurek scaling of that length against the ramp rate.
//!
//! The crate is organized along the pipeline:
//!
//! - [`event`]: on-disk event formats, validation, channel normalization
//! - [`funcnet`]: windowed-correlation networks, modularity, betweenness
//! - [`profiles`]: Q/R/centrality profiles, impulse detection, S/W/D phases
//! - [`kstring`]: sign chains, order parameter, correlation length, freeze
//! - [`kzm`]: closed-form quench predictors and cross-event scaling fits
//! - [`quench`]: synthetic generators (constructed events and a stochastic
//!   field-quench oracle) used to verify the pipeline end to end
//! - [`pipeline`]: glue that runs one event through the full analysis

pub mod config;
pub mod error;
pub mod event;
pub mod funcnet;
pub mod kstring;
pub mod kzm;
pub mod pipeline;
pub mod profiles;
pub mod quench;
pub mod stats;

pub use config::AnalysisConfig;
pub use error::Error;
pub use event::EventRecord;
pub use funcnet::{FrameMetrics, FrameNetwork};
pub use kzm::{KzmParams, ScalingFit, ScalingPoint};

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
