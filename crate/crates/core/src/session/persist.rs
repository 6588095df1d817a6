//! Session directories: `<root>/<dyad_id>/<timestamp>/` holding
//! `config.json`, `features.csv`, `events.jsonl`, `marks.csv` and
//! `summary.json`. Wall-clock times appear only in `marks.csv`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::protocol::Phase;
use super::record::{PhaseMark, SessionConfig, SessionRecord, SubjectiveScores};
use crate::dsp::{read_features_csv, write_features_csv};
use crate::error::{Error, Result};
use crate::sonify::{Condition, MusicEvent};

pub const SESSIONS_DIR_ENV: &str = "BRAINSYNC_SESSIONS_DIR";
pub const DEFAULT_SESSIONS_DIR: &str = "sessions";

const MARKS_HEADER: &str = "phase,t_start,t_end,wall_clock_start";

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub dyad_id: String,
    pub condition: Condition,
    pub complete: bool,
    pub incomplete_reason: Option<String>,
    pub plv_baseline: Option<f64>,
    pub plv_eyecontact: Option<f64>,
    pub delta_plv: Option<f64>,
    pub n_baseline_windows: usize,
    pub n_eyecontact_windows: usize,
    pub n_events: usize,
    pub subjective: Option<SubjectiveScores>,
}

impl SessionSummary {
    pub fn of(record: &SessionRecord) -> Self {
        Self {
            dyad_id: record.config.dyad_id.clone(),
            condition: record.config.condition,
            complete: record.complete,
            incomplete_reason: record.incomplete_reason.clone(),
            plv_baseline: record.plv_baseline,
            plv_eyecontact: record.plv_eyecontact,
            delta_plv: record.delta_plv,
            n_baseline_windows: record.phase_features(Phase::Baseline).len(),
            n_eyecontact_windows: record.phase_features(Phase::EyeContact).len(),
            n_events: record.events.len(),
            subjective: record.subjective,
        }
    }
}

/// Default output root: `$BRAINSYNC_SESSIONS_DIR`, else `./sessions`.
pub fn default_sessions_root() -> PathBuf {
    std::env::var_os(SESSIONS_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_SESSIONS_DIR))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

/// Writes the five record files into an existing directory.
pub fn write_session_files(dir: &Path, record: &SessionRecord, wall_clock: &[String]) -> Result<()> {
    write_json(&dir.join("config.json"), &record.config)?;

    let path = dir.join("features.csv");
    write_features_csv(create(&path)?, &record.features).map_err(|e| Error::io(&path, e))?;

    let path = dir.join("events.jsonl");
    let mut w = create(&path)?;
    for event in &record.events {
        serde_json::to_writer(&mut w, event)?;
        writeln!(w).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("marks.csv");
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    writeln!(w, "{MARKS_HEADER}").map_err(io)?;
    for (i, m) in record.phase_marks.iter().enumerate() {
        let wall = wall_clock.get(i).map(String::as_str).unwrap_or("");
        writeln!(w, "{},{:?},{:?},{wall}", m.phase, m.t_start, m.t_end).map_err(io)?;
    }
    w.flush().map_err(io)?;

    write_json(&dir.join("summary.json"), &SessionSummary::of(record))
}

/// Creates `<root>/<dyad_id>/<UTC timestamp>/` and writes the record into it.
pub fn persist_session(root: &Path, record: &SessionRecord, wall_clock: &[String]) -> Result<PathBuf> {
    let parent = root.join(&record.config.dyad_id);
    fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
    let mut dir = parent.join(&stamp);
    let mut n = 1;
    loop {
        match fs::create_dir(&dir) {
            Ok(()) => break,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                dir = parent.join(format!("{stamp}-{n}"));
                n += 1;
            }
            Err(e) => return Err(Error::io(&dir, e)),
        }
    }
    write_session_files(&dir, record, wall_clock)?;
    Ok(dir)
}

pub fn read_summary(dir: &Path) -> Result<SessionSummary> {
    read_json(&dir.join("summary.json"))
}

fn read_marks(path: &Path) -> Result<Vec<PhaseMark>> {
    let mut marks = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| Error::Format { line: line_no, message };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(fail(format!("expected at least 3 fields, found {}", cols.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| fail(format!("{s}: {e}")));
        marks.push(PhaseMark {
            phase: cols[0].parse().map_err(fail)?,
            t_start: num(cols[1])?,
            t_end: num(cols[2])?,
        });
    }
    Ok(marks)
}

/// Loads a persisted record. Wall-clock marks are not part of the record.
pub fn read_session_dir(dir: &Path) -> Result<SessionRecord> {
    let config: SessionConfig = read_json(&dir.join("config.json"))?;
    let features = read_features_csv(open(&dir.join("features.csv"))?)?;
    let path = dir.join("events.jsonl");
    let mut events = Vec::new();
    for line in open(&path)?.lines() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if !line.trim().is_empty() {
            events.push(serde_json::from_str::<MusicEvent>(&line)?);
        }
    }
    let phase_marks = read_marks(&dir.join("marks.csv"))?;
    let summary = read_summary(dir)?;
    Ok(SessionRecord {
        config,
        phase_marks,
        features,
        events,
        plv_baseline: summary.plv_baseline,
        plv_eyecontact: summary.plv_eyecontact,
        delta_plv: summary.delta_plv,
        complete: summary.complete,
        incomplete_reason: summary.incomplete_reason,
        subjective: summary.subjective,
    })
}

/// Attaches questionnaire scores to a persisted session.
pub fn attach_subjective(dir: &Path, scores: SubjectiveScores) -> Result<()> {
    let mut summary = read_summary(dir)?;
    summary.subjective = Some(scores);
    write_json(&dir.join("summary.json"), &summary)
}

/// Every directory under `root` (inclusive) that contains a `summary.json`.
pub fn find_session_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        if dir.join("summary.json").is_file() {
            out.push(dir);
            continue;
        }
        let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            if entry.file_type().map(|t| t.is_dir()).unwrap_or(false) {
                stack.push(entry.path());
            }
        }
    }
    out.sort();
    Ok(out)
}
