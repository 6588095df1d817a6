use serde::{Deserialize, Serialize};

use super::protocol::Phase;
use crate::dsp::{FeatureWindow, WindowConfig};
use crate::error::{Error, Result};
use crate::sonify::{Condition, MappingConfig, MusicEvent};

/// Slack for comparing stream timestamps against phase boundaries.
pub(crate) const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub dyad_id: String,
    pub condition: Condition,
    pub baseline_s: f64,
    pub eyecontact_s: f64,
    pub seed: u64,
    pub mapping: MappingConfig,
    pub windows: WindowConfig,
}

impl SessionConfig {
    pub fn new(dyad_id: impl Into<String>, condition: Condition) -> Self {
        Self {
            dyad_id: dyad_id.into(),
            condition,
            baseline_s: 60.0,
            eyecontact_s: 300.0,
            seed: 0,
            mapping: MappingConfig::default(),
            windows: WindowConfig::default(),
        }
    }

    pub fn validate(&self, rate_hz: f64) -> Result<()> {
        if self.dyad_id.trim().is_empty() {
            return Err(Error::config("dyad id must be non-empty"));
        }
        if self.dyad_id.contains(['/', '\\']) || self.dyad_id == "." || self.dyad_id == ".." {
            return Err(Error::config(format!("dyad id `{}` is not a valid directory name", self.dyad_id)));
        }
        for (name, d) in [("baseline", self.baseline_s), ("eye-contact", self.eyecontact_s)] {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::config(format!("{name} duration must be positive, got {d}")));
            }
        }
        self.mapping.validate()?;
        self.windows.validate(rate_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMark {
    pub phase: Phase,
    pub t_start: f64,
    pub t_end: f64,
}

impl PhaseMark {
    /// Windows belong to the phase in which they end: `t_end` in `(t_start, t_end]`.
    pub fn owns(&self, fw: &FeatureWindow) -> bool {
        fw.t_end > self.t_start + TIME_EPS && fw.t_end <= self.t_end + TIME_EPS
    }

    pub fn duration_s(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertPair {
    pub pre: i32,
    pub post: i32,
}

impl LikertPair {
    pub fn change(&self) -> i32 {
        self.post - self.pre
    }
}

/// Per-participant subjective synchrony ratings collected outside the software loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectiveScores {
    pub a: LikertPair,
    pub b: LikertPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub config: SessionConfig,
    pub phase_marks: Vec<PhaseMark>,
    pub features: Vec<FeatureWindow>,
    pub events: Vec<MusicEvent>,
    pub plv_baseline: Option<f64>,
    pub plv_eyecontact: Option<f64>,
    pub delta_plv: Option<f64>,
    pub complete: bool,
    pub incomplete_reason: Option<String>,
    pub subjective: Option<SubjectiveScores>,
}

impl SessionRecord {
    pub fn mark(&self, phase: Phase) -> Option<&PhaseMark> {
        self.phase_marks.iter().find(|m| m.phase == phase)
    }

    pub fn phase_features(&self, phase: Phase) -> Vec<&FeatureWindow> {
        match self.mark(phase) {
            Some(mark) => self.features.iter().filter(|fw| mark.owns(fw)).collect(),
            None => Vec::new(),
        }
    }

    /// Mean PLV over the windows of one phase.
    pub fn phase_mean_plv(&self, phase: Phase) -> Result<f64> {
        let windows = self.phase_features(phase);
        if windows.is_empty() {
            return Err(Error::IncompleteRecord(format!("no {phase} windows in record")));
        }
        Ok(windows.iter().map(|w| w.plv).sum::<f64>() / windows.len() as f64)
    }

    /// Fills the PLV summary fields from marks and features.
    pub(crate) fn summarize(&mut self) {
        let base = self.phase_mean_plv(Phase::Baseline).ok();
        let eye = self.phase_mean_plv(Phase::EyeContact).ok();
        self.plv_baseline = base;
        self.plv_eyecontact = eye;
        self.delta_plv = match (base, eye) {
            (Some(b), Some(e)) => Some(e - b),
            _ => None,
        };
    }
}

/// Mean eye-contact PLV minus mean baseline PLV.
pub fn baseline_corrected_plv(record: &SessionRecord) -> Result<f64> {
    let base = record.phase_mean_plv(Phase::Baseline)?;
    let eye = record.phase_mean_plv(Phase::EyeContact)?;
    Ok(eye - base)
}
