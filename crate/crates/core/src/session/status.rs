//! Operator console messages and the bounded status hand-off.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crossbeam::queue::ArrayQueue;
use serde::{Deserialize, Serialize};

use super::protocol::{Command, Phase};
use crate::sonify::{Condition, MusicEvent};

pub const DEFAULT_STATUS_CAPACITY: usize = 256;

/// Server to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConsoleMessage {
    Status {
        phase: Phase,
        t: f64,
        /// Seconds since the current phase started.
        elapsed_s: f64,
        plv: f64,
        faa_a: f64,
        faa_b: f64,
        condition: Condition,
        last_event: Option<MusicEvent>,
    },
    Event {
        #[serde(flatten)]
        event: MusicEvent,
        drone_note: u8,
    },
    Error {
        message: String,
    },
}

/// Client to server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OperatorMessage {
    Command { action: Command },
    SetCondition { value: Condition },
}

/// Bounded queue where a full buffer evicts the oldest message.
#[derive(Clone)]
pub struct StatusQueue {
    queue: Arc<ArrayQueue<ConsoleMessage>>,
    dropped: Arc<AtomicU64>,
}

impl Default for StatusQueue {
    fn default() -> Self {
        Self::new(DEFAULT_STATUS_CAPACITY)
    }
}

impl StatusQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            queue: Arc::new(ArrayQueue::new(capacity.max(1))),
            dropped: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn push(&self, msg: ConsoleMessage) {
        if self.queue.force_push(msg).is_some() {
            self.dropped.fetch_add(1, Ordering::Relaxed);
        }
    }

    pub fn pop(&self) -> Option<ConsoleMessage> {
        self.queue.pop()
    }

    pub fn drain(&self) -> Vec<ConsoleMessage> {
        std::iter::from_fn(|| self.queue.pop()).collect()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn error(i: usize) -> ConsoleMessage {
        ConsoleMessage::Error {
            message: i.to_string(),
        }
    }

    #[test]
    fn full_queue_drops_oldest() {
        let q = StatusQueue::new(3);
        for i in 0..5 {
            q.push(error(i));
        }
        assert_eq!(q.dropped(), 2);
        assert_eq!(q.drain(), vec![error(2), error(3), error(4)]);
    }

    #[test]
    fn operator_messages_parse() {
        let m: OperatorMessage = serde_json::from_str(r#"{"type":"command","action":"start_eyecontact"}"#).unwrap();
        assert_eq!(
            m,
            OperatorMessage::Command {
                action: Command::StartEyeContact
            }
        );
        let m: OperatorMessage = serde_json::from_str(r#"{"type":"set_condition","value":"random"}"#).unwrap();
        assert_eq!(
            m,
            OperatorMessage::SetCondition {
                value: Condition::Random
            }
        );
        assert!(serde_json::from_str::<OperatorMessage>(r#"{"type":"command","action":"jump"}"#).is_err());
    }

    #[test]
    fn status_wire_shape() {
        let msg = ConsoleMessage::Status {
            phase: Phase::Baseline,
            t: 1.5,
            elapsed_s: 1.5,
            plv: 0.42,
            faa_a: 0.1,
            faa_b: -0.2,
            condition: Condition::Neuroadaptive,
            last_event: None,
        };
        let v: serde_json::Value = serde_json::to_value(&msg).unwrap();
        assert_eq!(v["type"], "status");
        assert_eq!(v["phase"], "baseline");
        assert_eq!(v["plv"], 0.42);
        assert_eq!(v["faa_b"], -0.2);
    }
}
