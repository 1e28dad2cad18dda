//! Multimodal PHQ-8 severity estimation.
//!
//! The crate turns three kinds of per-session input into one severity
//! estimate:
//!
//! - per-frame acoustic descriptors ([`audiofeat`]),
//! - 68-point facial landmark tracks ([`videofeat`]),
//! - timed interview transcripts ([`textfeat`]).
//!
//! Each modality gets its own random-forest regressor ([`forest`]). The
//! spread of the individual tree outputs serves as that modality's
//! confidence, and [`fusion`] picks (or blends) the per-modality
//! predictions. [`eval`] holds the metrics, the train/development
//! experiment runner; [`synth`] writes synthetic session trees.

pub mod audiofeat;
pub mod datamodel;
pub mod error;
pub mod eval;
pub mod forest;
pub mod fusion;
pub mod ingest;
pub mod pipeline;
pub mod signalmath;
pub mod synth;
pub mod textfeat;
pub mod videofeat;

pub use datamodel::{
    Dataset, DescriptorSeries, FeatureVector, LandmarkSeries, Modality, Point, SessionRecord,
    Split, Transcript, Utterance,
};
pub use error::{Error, Result};

/// Lowest PHQ-8 score.
pub const PHQ8_MIN: f64 = 0.0;
/// Highest PHQ-8 score.
pub const PHQ8_MAX: f64 = 24.0;

/// Clamp a raw regression output onto the PHQ-8 scale.
pub fn clamp_phq8(value: f64) -> f64 {
    value.clamp(PHQ8_MIN, PHQ8_MAX)
}
