//! Session driver: frames → features → notes, one hop at a time.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use crossbeam::channel::Receiver;

use super::persist::persist_session;
use super::protocol::{phase_transition, Command, Phase, Trigger};
use super::record::{PhaseMark, SessionConfig, SessionRecord, TIME_EPS};
use super::status::{ConsoleMessage, OperatorMessage, StatusQueue};
use crate::dsp::{feature_stream, FeatureWindow};
use crate::error::Error;
use crate::seed;
use crate::signal::FrameSource;
use crate::sonify::{EventSink, MusicEvent, Sonifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pacing {
    /// Process frames as fast as they arrive (replay).
    #[default]
    Unpaced,
    /// Hold each hop until wall-clock time catches up with frame time.
    RealTime,
}

#[derive(Default)]
pub struct SessionOptions {
    pub status: Option<StatusQueue>,
    pub commands: Option<Receiver<OperatorMessage>>,
    pub pacing: Pacing,
    /// Stay in Idle until the operator sends `start_baseline`.
    pub wait_for_operator: bool,
    /// When set, the record is written under `<root>/<dyad_id>/<timestamp>/`.
    pub output_root: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub record: SessionRecord,
    /// Wall-clock start of each phase mark, RFC 3339.
    pub wall_clock: Vec<String>,
    pub dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("session setup failed: {0}")]
    Setup(#[source] Error),
    #[error("session incomplete: {reason}")]
    Incomplete { reason: String, outcome: Box<SessionOutcome> },
    #[error("could not persist session record: {source}")]
    Persist {
        #[source]
        source: Error,
        outcome: Box<SessionOutcome>,
    },
}

struct Driver<'a> {
    cfg: SessionConfig,
    phase: Phase,
    phase_start: f64,
    marks: Vec<PhaseMark>,
    wall_clock: Vec<String>,
    features: Vec<FeatureWindow>,
    events: Vec<MusicEvent>,
    sonifier: Sonifier,
    sink: &'a mut dyn EventSink,
    status: Option<StatusQueue>,
    last_event: Option<MusicEvent>,
}

impl Driver<'_> {
    fn notify(&self, msg: ConsoleMessage) {
        if let Some(q) = &self.status {
            q.push(msg);
        }
    }

    fn reject(&self, err: &Error) {
        log::warn!("{err}");
        self.notify(ConsoleMessage::Error {
            message: err.to_string(),
        });
    }

    fn transition(&mut self, trigger: Trigger, at: f64) -> Result<(), Error> {
        let next = phase_transition(self.phase, trigger)?;
        if matches!(self.phase, Phase::Baseline | Phase::EyeContact) {
            self.marks.push(PhaseMark {
                phase: self.phase,
                t_start: self.phase_start,
                t_end: at,
            });
        }
        if self.phase == Phase::Baseline {
            let mark = *self.marks.last().expect("baseline mark just pushed");
            let baseline: Vec<FeatureWindow> = self.features.iter().filter(|fw| mark.owns(fw)).copied().collect();
            self.sonifier.calibrate(&baseline);
        }
        if matches!(next, Phase::Baseline | Phase::EyeContact) {
            self.wall_clock.push(chrono::Utc::now().to_rfc3339());
        }
        log::info!("{} -> {} at t = {at:.3} s", self.phase, next);
        self.phase = next;
        self.phase_start = at;
        Ok(())
    }

    fn handle(&mut self, msg: OperatorMessage, clock: f64) {
        match msg {
            OperatorMessage::Command { action } => {
                if let Err(e) = self.transition(Trigger::Command(action), clock) {
                    self.reject(&e);
                } else if action == Command::Abort {
                    log::warn!("session aborted by operator");
                }
            }
            OperatorMessage::SetCondition { value } => {
                if self.phase == Phase::Idle {
                    self.cfg.condition = value;
                    self.sonifier = Sonifier::new(self.cfg.mapping.clone(), value, seed::drone_seed(self.cfg.seed));
                } else {
                    self.reject(&Error::State {
                        current: self.phase.to_string(),
                        requested: format!("set_condition {value}"),
                    });
                }
            }
        }
    }

    fn deadline(&self) -> Option<f64> {
        match self.phase {
            Phase::Baseline => Some(self.phase_start + self.cfg.baseline_s),
            Phase::EyeContact => Some(self.phase_start + self.cfg.eyecontact_s),
            _ => None,
        }
    }

    /// Fires timer transitions whose deadline has been reached by `t`.
    fn expire_timers(&mut self, t: f64, inclusive: bool) {
        while let Some(deadline) = self.deadline() {
            let due = if inclusive {
                t >= deadline - TIME_EPS
            } else {
                t > deadline + TIME_EPS
            };
            if !due {
                break;
            }
            self.transition(Trigger::TimerExpired, deadline)
                .expect("timer expiry is legal in timed phases");
        }
    }

    fn process(&mut self, fw: FeatureWindow) {
        match self.phase {
            Phase::Baseline => self.features.push(fw),
            Phase::EyeContact => {
                self.features.push(fw);
                if let Some(event) = self.sonifier.on_window(&fw) {
                    let drone_note = self.sonifier.drone_note(event.drone);
                    if let Err(e) = self.sink.deliver(&event, drone_note) {
                        log::warn!("event delivery failed at t = {:.3} s: {e}", event.onset_s);
                    }
                    self.notify(ConsoleMessage::Event { event, drone_note });
                    self.events.push(event);
                    self.last_event = Some(event);
                }
            }
            Phase::Idle | Phase::Done => {}
        }
        self.notify(ConsoleMessage::Status {
            phase: self.phase,
            t: fw.t_end,
            elapsed_s: fw.t_end - self.phase_start,
            plv: fw.plv,
            faa_a: fw.faa_a,
            faa_b: fw.faa_b,
            condition: self.cfg.condition,
            last_event: self.last_event,
        });
    }

    fn into_record(mut self, clock: f64, reason: Option<String>) -> (SessionRecord, Vec<String>) {
        if matches!(self.phase, Phase::Baseline | Phase::EyeContact) {
            self.marks.push(PhaseMark {
                phase: self.phase,
                t_start: self.phase_start,
                t_end: clock,
            });
        }
        let mut record = SessionRecord {
            config: self.cfg,
            phase_marks: self.marks,
            features: self.features,
            events: self.events,
            plv_baseline: None,
            plv_eyecontact: None,
            delta_plv: None,
            complete: reason.is_none(),
            incomplete_reason: reason,
            subjective: None,
        };
        record.summarize();
        (record, self.wall_clock)
    }
}

/// Runs the protocol over `source`, emitting notes to `sink` during eye contact.
///
/// Without `wait_for_operator` the baseline starts with the first frame. Phase
/// timers run on frame time, so replayed sessions are reproducible. Sink
/// failures are logged and never stop the session. Source exhaustion, a
/// source error or an operator abort yields [`SessionError::Incomplete`]
/// carrying the partial record (persisted when an output root is set).
pub fn run_session<S: FrameSource>(
    cfg: &SessionConfig,
    source: S,
    sink: &mut dyn EventSink,
    opts: SessionOptions,
) -> Result<SessionOutcome, SessionError> {
    let layout = source.layout().clone();
    cfg.validate(layout.sampling_rate_hz()).map_err(SessionError::Setup)?;
    let mut windows = feature_stream(source, &layout, &cfg.windows).map_err(SessionError::Setup)?;

    let mut d = Driver {
        cfg: cfg.clone(),
        phase: Phase::Idle,
        phase_start: 0.0,
        marks: Vec::new(),
        wall_clock: Vec::new(),
        features: Vec::new(),
        events: Vec::new(),
        sonifier: Sonifier::new(cfg.mapping.clone(), cfg.condition, seed::drone_seed(cfg.seed)),
        sink,
        status: opts.status.clone(),
        last_event: None,
    };

    let mut clock: Option<f64> = None;
    let mut pace: Option<(Instant, f64)> = None;
    let mut failure: Option<String> = None;

    while d.phase != Phase::Done {
        let fw = match windows.next() {
            Some(Ok(fw)) => fw,
            Some(Err(e)) => {
                failure = Some(format!("source error: {e}"));
                break;
            }
            None => {
                failure = Some(format!("source exhausted during {} phase", d.phase));
                break;
            }
        };
        let now = *clock.get_or_insert(fw.t_start);

        if opts.pacing == Pacing::RealTime {
            let (wall0, t0) = *pace.get_or_insert((Instant::now(), fw.t_start));
            let due = wall0 + Duration::from_secs_f64((fw.t_end - t0).max(0.0));
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }

        if d.phase == Phase::Idle && !opts.wait_for_operator {
            d.transition(Trigger::Command(Command::StartBaseline), now)
                .expect("idle accepts start_baseline");
        }
        if let Some(rx) = &opts.commands {
            while let Ok(msg) = rx.try_recv() {
                d.handle(msg, now);
            }
        }
        if d.phase == Phase::Done {
            failure = Some("aborted by operator".into());
            break;
        }

        d.expire_timers(fw.t_end, false);
        if d.phase == Phase::Done {
            break;
        }
        d.process(fw);
        clock = Some(fw.t_end);
        d.expire_timers(fw.t_end, true);
    }

    let clock = clock.unwrap_or(0.0);
    let (record, wall_clock) = d.into_record(clock, failure.clone());
    let mut outcome = SessionOutcome {
        record,
        wall_clock,
        dir: None,
    };
    if let Some(root) = &opts.output_root {
        match persist_session(root, &outcome.record, &outcome.wall_clock) {
            Ok(dir) => outcome.dir = Some(dir),
            Err(source) => {
                return Err(SessionError::Persist {
                    source,
                    outcome: Box::new(outcome),
                })
            }
        }
    }
    match failure {
        None => Ok(outcome),
        Some(reason) => Err(SessionError::Incomplete {
            reason,
            outcome: Box::new(outcome),
        }),
    }
}
