//! Dyad EEG frame production: replay files, synthetic coupled oscillators
//! and alignment of two single-participant streams.

mod align;
mod replay;
mod synth;

pub use align::{align, Aligned, ParticipantSample};
pub use replay::{open_replay, read_replay, write_replay, Replay, ReplayStream};
pub use synth::{generate_synthetic, SynthConfig, SyntheticStream};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channels per participant.
pub const CHANNELS: usize = 8;

pub const DEFAULT_SAMPLING_RATE_HZ: f64 = 250.0;

/// Default 10/20 montage order.
pub const DEFAULT_CHANNEL_NAMES: [&str; CHANNELS] = ["Fz", "F3", "F4", "C3", "Cz", "C4", "Pz", "Oz"];

pub type Channels = [f64; CHANNELS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelLayout {
    names: Vec<String>,
    sampling_rate_hz: f64,
}

impl Default for ChannelLayout {
    fn default() -> Self {
        Self {
            names: DEFAULT_CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
            sampling_rate_hz: DEFAULT_SAMPLING_RATE_HZ,
        }
    }
}

impl ChannelLayout {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>, sampling_rate_hz: f64) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() != CHANNELS {
            return Err(Error::config(format!(
                "layout needs exactly {CHANNELS} channels, got {}",
                names.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::config("empty channel label"));
            }
            if names[..i].contains(name) {
                return Err(Error::config(format!("duplicate channel label {name}")));
            }
        }
        for required in ["F3", "F4"] {
            if !names.iter().any(|n| n == required) {
                return Err(Error::config(format!("layout is missing {required}")));
            }
        }
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(Error::config(format!("sampling rate must be positive, got {sampling_rate_hz}")));
        }
        Ok(Self {
            names,
            sampling_rate_hz,
        })
    }

    pub fn with_rate(sampling_rate_hz: f64) -> Result<Self> {
        Self::new(DEFAULT_CHANNEL_NAMES, sampling_rate_hz)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sampling_rate_hz / 2.0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Index of the left frontal electrode.
    pub fn f3(&self) -> usize {
        self.index_of("F3").expect("validated layout has F3")
    }

    /// Index of the right frontal electrode.
    pub fn f4(&self) -> usize {
        self.index_of("F4").expect("validated layout has F4")
    }
}

/// One time-aligned sample of both participants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadFrame {
    /// Seconds since stream start.
    pub t: f64,
    /// Participant A, microvolts.
    pub a: Channels,
    /// Participant B, microvolts.
    pub b: Channels,
}

impl DyadFrame {
    pub fn participant(&self, p: Participant) -> &Channels {
        match p {
            Participant::A => &self.a,
            Participant::B => &self.b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Participant {
    A,
    B,
}

impl Participant {
    pub fn other(self) -> Self {
        match self {
            Participant::A => Participant::B,
            Participant::B => Participant::A,
        }
    }
}

/// A pull-based sequence of dyad frames with a known layout.
///
/// A source is handed to exactly one consumer; it is `Send` so that consumer
/// may live on another thread.
pub trait FrameSource: Iterator<Item = Result<DyadFrame>> + Send {
    fn layout(&self) -> &ChannelLayout;
}

impl<S: FrameSource + ?Sized> FrameSource for Box<S> {
    fn layout(&self) -> &ChannelLayout {
        (**self).layout()
    }
}
