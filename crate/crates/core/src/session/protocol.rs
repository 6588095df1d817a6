//! Protocol state machine: Idle → Baseline → EyeContact → Done, abort from
//! any live phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Baseline,
    EyeContact,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::Baseline => "baseline",
            Phase::EyeContact => "eye_contact",
            Phase::Done => "done",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "idle" => Ok(Phase::Idle),
            "baseline" => Ok(Phase::Baseline),
            "eye_contact" => Ok(Phase::EyeContact),
            "done" => Ok(Phase::Done),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Command {
    #[serde(rename = "start_baseline")]
    StartBaseline,
    #[serde(rename = "start_eyecontact")]
    StartEyeContact,
    #[serde(rename = "abort")]
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    Command(Command),
    TimerExpired,
}

impl std::fmt::Display for Trigger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Trigger::Command(Command::StartBaseline) => f.write_str("start_baseline"),
            Trigger::Command(Command::StartEyeContact) => f.write_str("start_eyecontact"),
            Trigger::Command(Command::Abort) => f.write_str("abort"),
            Trigger::TimerExpired => f.write_str("timer expiry"),
        }
    }
}

/// Next phase for a legal trigger, state error otherwise.
///
/// `start_eyecontact` during Baseline is an operator override that cuts the
/// baseline short.
pub fn phase_transition(current: Phase, trigger: Trigger) -> Result<Phase> {
    use Command::*;
    use Phase::*;
    let next = match (current, trigger) {
        (Idle, Trigger::Command(StartBaseline)) => Some(Baseline),
        (Baseline, Trigger::Command(StartEyeContact)) | (Baseline, Trigger::TimerExpired) => Some(EyeContact),
        (EyeContact, Trigger::TimerExpired) => Some(Done),
        (Idle | Baseline | EyeContact, Trigger::Command(Abort)) => Some(Done),
        _ => None,
    };
    next.ok_or_else(|| Error::State {
        current: current.to_string(),
        requested: trigger.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legal_path() {
        let p = phase_transition(Phase::Idle, Trigger::Command(Command::StartBaseline)).unwrap();
        assert_eq!(p, Phase::Baseline);
        let p = phase_transition(p, Trigger::TimerExpired).unwrap();
        assert_eq!(p, Phase::EyeContact);
        assert_eq!(phase_transition(p, Trigger::TimerExpired).unwrap(), Phase::Done);
    }

    #[test]
    fn operator_override_and_abort() {
        assert_eq!(
            phase_transition(Phase::Baseline, Trigger::Command(Command::StartEyeContact)).unwrap(),
            Phase::EyeContact
        );
        for p in [Phase::Idle, Phase::Baseline, Phase::EyeContact] {
            assert_eq!(phase_transition(p, Trigger::Command(Command::Abort)).unwrap(), Phase::Done);
        }
    }

    #[test]
    fn illegal_transitions_name_both_sides() {
        let err = phase_transition(Phase::Done, Trigger::Command(Command::StartBaseline)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("done") && msg.contains("start_baseline"), "{msg}");
        assert!(phase_transition(Phase::Idle, Trigger::TimerExpired).is_err());
        assert!(phase_transition(Phase::Idle, Trigger::Command(Command::StartEyeContact)).is_err());
        assert!(phase_transition(Phase::EyeContact, Trigger::Command(Command::StartEyeContact)).is_err());
        assert!(phase_transition(Phase::Done, Trigger::Command(Command::Abort)).is_err());
    }

    #[test]
    fn command_wire_names() {
        assert_eq!(serde_json::to_string(&Command::StartEyeContact).unwrap(), "\"start_eyecontact\"");
        assert_eq!(serde_json::to_string(&Phase::EyeContact).unwrap(), "\"eye_contact\"");
    }
}
