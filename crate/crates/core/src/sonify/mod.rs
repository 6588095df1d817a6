//! Note events from window features, and their OSC wire form.

mod mapping;
mod osc;
mod scale;

pub use mapping::{
    amp_to_pitch, drone_state, AmpBounds, AmpRange, Calibration, Condition, Drone, MappingConfig, MusicEvent,
    Sonifier, ThresholdMode, FALLBACK_AMP_RANGE,
};
pub use osc::{
    encode_osc, note_message, EventSink, NullSink, OscArg, OscMessage, OscSender, DEFAULT_OSC_TARGET, NOTE_ADDRESS,
};
pub use scale::{quantize_pitch, select_mode, Mode, Scale};
