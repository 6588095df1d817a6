//! Feature window to note mapping.
//!
//! Amplitude sets pitch (quantized onto the active scale), the source
//! participant's asymmetry sets the mode, and inter-brain PLV decides whether
//! the drone is consonant. Sources alternate A, B, A, ... note by note. In the
//! Random condition only the drone is randomized; pitch and mode still follow
//! the EEG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scale::{quantize_pitch, select_mode, Mode, Scale};
use crate::dsp::FeatureWindow;
use crate::error::{Error, Result};
use crate::signal::Participant;

/// Amplitude range used before any calibration is available, µV.
pub const FALLBACK_AMP_RANGE: AmpRange = AmpRange { lo: 0.0, hi: 50.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Neuroadaptive,
    Random,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Condition::Neuroadaptive => "neuroadaptive",
            Condition::Random => "random",
        })
    }
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "neuroadaptive" => Ok(Condition::Neuroadaptive),
            "random" => Ok(Condition::Random),
            other => Err(format!("unknown condition `{other}` (expected neuroadaptive or random)")),
        }
    }
}

/// Ordered `Dissonant < Consonant`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Drone {
    Dissonant,
    Consonant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusicEvent {
    pub onset_s: f64,
    pub pitch: u8,
    pub source: Participant,
    pub mode: Mode,
    pub drone: Drone,
    pub velocity: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmpRange {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmpBounds {
    /// Percentiles of the baseline phase's mean window amplitude, per participant.
    BaselinePercentile { lo_pct: f64, hi_pct: f64 },
    Fixed { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    Fixed,
    /// Median PLV of the baseline phase.
    BaselineMedian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingConfig {
    pub root: u8,
    pub pitch_lo: u8,
    pub pitch_hi: u8,
    pub amp_bounds: AmpBounds,
    pub plv_threshold: f64,
    pub threshold_mode: ThresholdMode,
    pub note_period_s: f64,
    /// Semitones above the root; a perfect fifth.
    pub drone_consonant_offset: u8,
    /// Semitones above the root; a minor second.
    pub drone_dissonant_offset: u8,
    pub velocity: u8,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            root: 60,
            pitch_lo: 48,
            pitch_hi: 84,
            amp_bounds: AmpBounds::BaselinePercentile {
                lo_pct: 5.0,
                hi_pct: 95.0,
            },
            plv_threshold: 0.5,
            threshold_mode: ThresholdMode::Fixed,
            note_period_s: 0.5,
            drone_consonant_offset: 7,
            drone_dissonant_offset: 1,
            velocity: 90,
        }
    }
}

impl MappingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.root > 127 || self.pitch_hi > 127 {
            return Err(Error::config("MIDI notes must lie in 0..=127"));
        }
        if self.pitch_lo >= self.pitch_hi {
            return Err(Error::config(format!(
                "pitch range {}..{} is empty",
                self.pitch_lo, self.pitch_hi
            )));
        }
        match self.amp_bounds {
            AmpBounds::Fixed { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                return Err(Error::config(format!("amplitude bounds {lo}..{hi} are empty")))
            }
            AmpBounds::BaselinePercentile { lo_pct, hi_pct } if !(0.0 <= lo_pct && lo_pct < hi_pct && hi_pct <= 100.0) => {
                return Err(Error::config("amplitude percentiles must satisfy 0 <= lo < hi <= 100"))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.plv_threshold) {
            return Err(Error::config("PLV threshold must lie in [0, 1]"));
        }
        if !(self.note_period_s.is_finite() && self.note_period_s > 0.0) {
            return Err(Error::config("note period must be positive"));
        }
        if self.root as u16 + self.drone_consonant_offset.max(self.drone_dissonant_offset) as u16 > 127 {
            return Err(Error::config("drone note exceeds MIDI range"));
        }
        if self.velocity > 127 {
            return Err(Error::config("velocity must lie in 0..=127"));
        }
        Ok(())
    }

    pub fn drone_note(&self, drone: Drone) -> u8 {
        self.root
            + match drone {
                Drone::Consonant => self.drone_consonant_offset,
                Drone::Dissonant => self.drone_dissonant_offset,
            }
    }
}

/// Linear map of the clamped amplitude onto `[pitch_lo, pitch_hi]`.
pub fn amp_to_pitch(amp: f64, range: AmpRange, cfg: &MappingConfig) -> f64 {
    let (lo, hi) = (cfg.pitch_lo as f64, cfg.pitch_hi as f64);
    let frac = (amp.clamp(range.lo, range.hi) - range.lo) / (range.hi - range.lo);
    lo + frac * (hi - lo)
}

/// Neuroadaptive: consonant iff `plv >= threshold`. Random: a fair coin that
/// ignores `plv` and consumes exactly one draw.
pub fn drone_state<R: Rng + ?Sized>(plv: f64, threshold: f64, condition: Condition, rng: &mut R) -> Drone {
    match condition {
        Condition::Neuroadaptive => {
            if plv >= threshold {
                Drone::Consonant
            } else {
                Drone::Dissonant
            }
        }
        Condition::Random => {
            if rng.random_bool(0.5) {
                Drone::Consonant
            } else {
                Drone::Dissonant
            }
        }
    }
}

/// Linear-interpolated percentile of unsorted data, `pct` in [0, 100].
pub(crate) fn percentile(values: &[f64], pct: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = pct / 100.0 * (v.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    Some(if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    })
}

/// Per-session mapping parameters fixed after the baseline phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub amp_a: AmpRange,
    pub amp_b: AmpRange,
    pub plv_threshold: f64,
}

impl Calibration {
    pub fn amp(&self, p: Participant) -> AmpRange {
        match p {
            Participant::A => self.amp_a,
            Participant::B => self.amp_b,
        }
    }

    /// Calibration used when no baseline data exists.
    pub fn uncalibrated(cfg: &MappingConfig) -> Self {
        let amp = match cfg.amp_bounds {
            AmpBounds::Fixed { lo, hi } => AmpRange { lo, hi },
            AmpBounds::BaselinePercentile { .. } => FALLBACK_AMP_RANGE,
        };
        Self {
            amp_a: amp,
            amp_b: amp,
            plv_threshold: cfg.plv_threshold,
        }
    }

    pub fn from_baseline(cfg: &MappingConfig, baseline: &[FeatureWindow]) -> Self {
        let mut cal = Self::uncalibrated(cfg);
        if baseline.is_empty() {
            return cal;
        }
        if let AmpBounds::BaselinePercentile { lo_pct, hi_pct } = cfg.amp_bounds {
            let range_for = |p: Participant| {
                let amps: Vec<f64> = baseline.iter().map(|w| w.mean_amplitude(p)).collect();
                let lo = percentile(&amps, lo_pct).unwrap_or(FALLBACK_AMP_RANGE.lo);
                let hi = percentile(&amps, hi_pct).unwrap_or(FALLBACK_AMP_RANGE.hi);
                if hi > lo {
                    AmpRange { lo, hi }
                } else {
                    // Flat baseline: centre a unit-relative range on it.
                    let half = 0.5 * lo.abs().max(1.0);
                    AmpRange { lo: lo - half, hi: lo + half }
                }
            };
            cal.amp_a = range_for(Participant::A);
            cal.amp_b = range_for(Participant::B);
        }
        if cfg.threshold_mode == ThresholdMode::BaselineMedian {
            let plvs: Vec<f64> = baseline.iter().map(|w| w.plv).collect();
            cal.plv_threshold = percentile(&plvs, 50.0).unwrap_or(cfg.plv_threshold);
        }
        cal
    }
}

/// Event producer; owns the alternation state and the drone coin.
#[derive(Debug, Clone)]
pub struct Sonifier {
    cfg: MappingConfig,
    condition: Condition,
    calibration: Calibration,
    rng: ChaCha8Rng,
    next_source: Participant,
    last_onset: Option<f64>,
}

impl Sonifier {
    /// `drone_seed` should come from [`crate::seed::drone_seed`].
    pub fn new(cfg: MappingConfig, condition: Condition, drone_seed: u64) -> Self {
        let calibration = Calibration::uncalibrated(&cfg);
        Self {
            cfg,
            condition,
            calibration,
            rng: ChaCha8Rng::seed_from_u64(drone_seed),
            next_source: Participant::A,
            last_onset: None,
        }
    }

    pub fn config(&self) -> &MappingConfig {
        &self.cfg
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    pub fn set_calibration(&mut self, calibration: Calibration) {
        self.calibration = calibration;
    }

    pub fn calibrate(&mut self, baseline: &[FeatureWindow]) {
        self.calibration = Calibration::from_baseline(&self.cfg, baseline);
    }

    pub fn drone_note(&self, drone: Drone) -> u8 {
        self.cfg.drone_note(drone)
    }

    /// Builds the next note from `fw` and advances the alternation.
    pub fn next_event(&mut self, fw: &FeatureWindow) -> MusicEvent {
        let source = self.next_source;
        self.next_source = source.other();
        let mode = select_mode(fw.faa(source));
        let raw = amp_to_pitch(fw.mean_amplitude(source), self.calibration.amp(source), &self.cfg);
        let pitch = quantize_pitch(raw, &Scale::new(self.cfg.root, mode));
        let drone = drone_state(fw.plv, self.calibration.plv_threshold, self.condition, &mut self.rng);
        self.last_onset = Some(fw.t_end);
        MusicEvent {
            onset_s: fw.t_end,
            pitch,
            source,
            mode,
            drone,
            velocity: self.cfg.velocity,
        }
    }

    /// Applies the note cadence: emits only when a full note period has elapsed
    /// since the previous onset.
    pub fn on_window(&mut self, fw: &FeatureWindow) -> Option<MusicEvent> {
        match self.last_onset {
            Some(last) if fw.t_end - last < self.cfg.note_period_s - 1e-9 => None,
            _ => Some(self.next_event(fw)),
        }
    }
}
