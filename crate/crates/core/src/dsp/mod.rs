//! Feature extraction over sliding windows of dyad frames.

mod features;
mod filter;
mod hilbert;

pub use features::{
    amplitude, band_power, faa, feature_stream, inter_brain_plv, plv, read_features_csv, write_features_csv,
    FeatureExtractor, FeatureStream, FeatureWindow, WindowConfig, EDGE_TRIM_FRACTION, FEATURE_CSV_HEADER,
    POWER_FLOOR,
};
pub use filter::{bandpass, Band, BandpassFilter, MIN_SAMPLES};
pub use hilbert::{analytic_phase, envelope, unwrap_phase, HilbertTransformer};
