//! Crate error type.

use std::path::PathBuf;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {reason}")]
    Io {
        path: PathBuf,
        reason: String,
    },

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader {
        path: PathBuf,
        reason: String,
    },

    #[error("non-rectangular sample matrix: row {row} has {got} columns, expected {expected}")]
    NonRectangular {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("non-finite sample at channel {channel}, index {index}")]
    NonFinite {
        channel: usize,
        index: usize,
    },

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("window [{start}, {end}) out of range for event with {samples} samples")]
    WindowOutOfRange {
        start: usize,
        end: usize,
        samples: usize,
    },

    #[error("event too short: need at least {needed} samples for window length {window}, got {got}")]
    EventTooShort {
        needed: usize,
        window: usize,
        got: usize,
    },

    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        source: Box<Error>,
    },

    #[error("rest modularity is zero; event unusable")]
    RestModularityZero,

    #[error("need at least {needed} frames, got {got}")]
    TooFewFrames {
        needed: usize,
        got: usize,
    },

    #[error("impulse baseline region has only {got} usable frames (need {needed})")]
    InsufficientBaseline {
        needed: usize,
        got: usize,
    },

    #[error("no impulse interval supplied; cannot segment phases")]
    NoImpulse,

    #[error("truncated event: no W phase")]
    TruncatedEvent,

    #[error("S interval too short for a ramp fit: {frames} frames (need at least 4)")]
    ShortRampInterval {
        frames: usize,
    },

    #[error("weakening interval has zero duration")]
    ZeroWeakeningTime,

    #[error("correlation chain too short: {got} nodes (need at least {needed})")]
    ChainTooShort {
        got: usize,
        needed: usize,
    },

    #[error("not enough usable lags to fit a correlation length: {got} (need at least 6)")]
    TooFewLags {
        got: usize,
    },

    #[error("relaxation time diverges at the critical point (control parameter is zero)")]
    CriticalDivergence,

    #[error("weakening-time formula undefined for tau_s <= tau0 (tau_s = {tau_s}, tau0 = {tau0})")]
    WeakeningDomain {
        tau_s: f64,
        tau0: f64,
    },

    #[error("power-law fit needs at least {needed} usable points, got {got}")]
    TooFewPoints {
        needed: usize,
        got: usize,
    },

    #[error("power-law fit requires strictly positive values: {0}")]
    NonPositiveValue(String),

    #[error("exponent estimation failed: {0}")]
    EstimationFailed(String),

    #[error("field integration blew up (|phi| > {limit}) at t = {t}; reduce dt")]
    NumericalBlowup {
        t: f64,
        limit: f64,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            reason: err.to_string(),
        }
    }

    /// Attach a frame index to an error bubbling out of per-frame work.
    pub(crate) fn at_frame(self, frame: usize) -> Self {
        Error::Frame {
            frame,
            source: Box::new(self),
        }
    }
}
