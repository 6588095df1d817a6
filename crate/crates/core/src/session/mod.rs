//! The two-phase recording protocol and its on-disk records.

mod engine;
mod persist;
mod protocol;
mod record;
mod status;

pub use engine::{run_session, Pacing, SessionError, SessionOptions, SessionOutcome};
pub use persist::{
    attach_subjective, default_sessions_root, find_session_dirs, persist_session, read_session_dir, read_summary,
    write_session_files, SessionSummary, DEFAULT_SESSIONS_DIR, SESSIONS_DIR_ENV,
};
pub use protocol::{phase_transition, Command, Phase, Trigger};
pub use record::{baseline_corrected_plv, LikertPair, PhaseMark, SessionConfig, SessionRecord, SubjectiveScores};
pub use status::{ConsoleMessage, OperatorMessage, StatusQueue, DEFAULT_STATUS_CAPACITY};
