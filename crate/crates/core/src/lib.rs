//! Dual-participant EEG synchrony engine.
//!
//! Two synchronized 8-channel EEG streams are turned into three features
//! per sliding window (inter-brain phase-locking value, frontal alpha
//! asymmetry per participant, per-channel amplitude). Those features drive
//! a stream of musical note events, a two-phase session protocol records
//! everything, and the [`stats`] module compares sessions across feedback
//! conditions.
//!
//! Module map:
//!
//! * [`signal`]: dyad frames, replay files, synthetic coupled oscillators, stream alignment
//! * [`dsp`]: band-pass filtering, analytic phase, PLV, FAA, amplitude, windowed features
//! * [`sonify`]: amplitude/valence/synchrony to note mapping and OSC encoding
//! * [`session`]: the Idle → Baseline → EyeContact → Done protocol and its records
//! * [`stats`]: Wilcoxon signed-rank, rank-sum, Spearman and the study report

pub mod dsp;
pub mod error;
pub mod seed;
pub mod session;
pub mod signal;
pub mod sonify;
pub mod stats;

pub use error::{Error, Result};
