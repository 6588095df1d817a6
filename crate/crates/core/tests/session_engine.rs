use std::path::Path;

use brainsync::dsp::read_features_csv;
use brainsync::session::{
    attach_subjective, baseline_corrected_plv, find_session_dirs, read_session_dir, read_summary, run_session,
    Command, ConsoleMessage, LikertPair, OperatorMessage, Phase, SessionConfig, SessionError, SessionOptions,
    SessionOutcome, StatusQueue, SubjectiveScores,
};
use brainsync::signal::{
    generate_synthetic, open_replay, write_replay, ChannelLayout, DyadFrame, FrameSource, SynthConfig,
};
use brainsync::sonify::{Condition, MusicEvent, NullSink};
use brainsync::stats::{analyze_study, load_study_inputs, AnalysisOptions};
use crossbeam::channel::{unbounded, Sender};

const RATE: f64 = 250.0;

fn layout() -> ChannelLayout {
    ChannelLayout::with_rate(RATE).unwrap()
}

fn synth(duration_s: f64, coupling: f64, onset: f64, seed: u64) -> SynthConfig {
    SynthConfig {
        duration_s,
        coupling,
        seed,
        coupling_onset_s: onset,
        pre_onset_coupling: 0.0,
        ..SynthConfig::default()
    }
}

fn short_config(dyad: &str, condition: Condition, baseline_s: f64, eyecontact_s: f64) -> SessionConfig {
    let mut cfg = SessionConfig::new(dyad, condition);
    cfg.baseline_s = baseline_s;
    cfg.eyecontact_s = eyecontact_s;
    cfg
}

fn run_synthetic(cfg: &SessionConfig, synth_cfg: &SynthConfig, opts: SessionOptions) -> Result<SessionOutcome, SessionError> {
    let source = generate_synthetic(synth_cfg, &layout()).unwrap();
    run_session(cfg, source, &mut NullSink, opts)
}

#[test]
fn eye_contact_emits_one_note_per_hop() {
    let cfg = short_config("d", Condition::Neuroadaptive, 2.0, 4.0);
    let mut sink: Vec<(MusicEvent, u8)> = Vec::new();
    let source = generate_synthetic(&synth(7.0, 0.5, 0.0, 1), &layout()).unwrap();
    let outcome = run_session(&cfg, source, &mut sink, SessionOptions::default()).unwrap();
    let r = &outcome.record;
    assert!(r.complete);
    assert_eq!(r.events.len(), 8);
    assert_eq!(sink.len(), 8);
    for (k, e) in r.events.iter().enumerate() {
        assert!(e.onset_s > 2.0 && e.onset_s <= 6.0 + 1e-9);
        assert!((e.onset_s - (2.5 + 0.5 * k as f64)).abs() < 1e-9);
    }
    let base = r.mark(Phase::Baseline).unwrap();
    let eye = r.mark(Phase::EyeContact).unwrap();
    assert_eq!((base.t_start, base.t_end), (0.0, 2.0));
    assert_eq!((eye.t_start, eye.t_end), (2.0, 6.0));
    assert!(r.events.iter().all(|e| !(e.onset_s > base.t_start && e.onset_s <= base.t_end)));
}

#[test]
fn coupled_eye_contact_raises_plv() {
    let cfg = short_config("d", Condition::Neuroadaptive, 10.0, 10.0);
    let outcome = run_synthetic(&cfg, &synth(22.0, 1.0, 10.0, 3), SessionOptions::default()).unwrap();
    let r = &outcome.record;
    let delta = r.delta_plv.unwrap();
    assert!(delta > 0.0, "{r:?}");
    assert!((delta - (r.plv_eyecontact.unwrap() - r.plv_baseline.unwrap())).abs() < 1e-12);
    assert!((baseline_corrected_plv(r).unwrap() - delta).abs() < 1e-12);
}

#[test]
fn record_round_trips_through_its_directory() {
    let root = tempfile::tempdir().unwrap();
    let cfg = short_config("dyad-7", Condition::Random, 4.0, 6.0);
    let opts = SessionOptions {
        output_root: Some(root.path().to_path_buf()),
        ..SessionOptions::default()
    };
    let outcome = run_synthetic(&cfg, &synth(12.0, 0.8, 4.0, 9), opts).unwrap();
    let dir = outcome.dir.clone().unwrap();
    assert!(dir.starts_with(root.path().join("dyad-7")));
    for f in ["config.json", "features.csv", "events.jsonl", "marks.csv", "summary.json"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let back = read_session_dir(&dir).unwrap();
    assert_eq!(back, outcome.record);

    // Recompute the correction from the CSV alone.
    let features = read_features_csv(std::fs::File::open(dir.join("features.csv")).unwrap()).unwrap();
    let mean = |lo: f64, hi: f64| {
        let v: Vec<f64> = features.iter().filter(|w| w.t_end > lo + 1e-9 && w.t_end <= hi + 1e-9).map(|w| w.plv).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let offline = mean(4.0, 10.0) - mean(0.0, 4.0);
    assert!((offline - outcome.record.delta_plv.unwrap()).abs() < 1e-9);

    let marks = std::fs::read_to_string(dir.join("marks.csv")).unwrap();
    assert!(marks.starts_with("phase,t_start,t_end,wall_clock_start"));
    assert_eq!(marks.lines().count(), 3);

    attach_subjective(
        &dir,
        SubjectiveScores {
            a: LikertPair { pre: 3, post: 5 },
            b: LikertPair { pre: 4, post: 4 },
        },
    )
    .unwrap();
    let summary = read_summary(&dir).unwrap();
    assert_eq!(summary.subjective.unwrap().a.change(), 2);
    assert_eq!(find_session_dirs(root.path()).unwrap(), vec![dir]);
}

fn file_bytes(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn same_replay_and_seed_give_identical_records() {
    let tmp = tempfile::tempdir().unwrap();
    let replay = tmp.path().join("dyad.csv");
    let frames: Vec<DyadFrame> = generate_synthetic(&synth(9.0, 0.6, 3.0, 4), &layout())
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap();
    write_replay(std::fs::File::create(&replay).unwrap(), &layout(), &frames).unwrap();

    let mut cfg = short_config("rep", Condition::Random, 3.0, 5.0);
    cfg.seed = 5;
    let run = |sub: &str| {
        let opts = SessionOptions {
            output_root: Some(tmp.path().join(sub)),
            ..SessionOptions::default()
        };
        run_session(&cfg, open_replay(&replay).unwrap().into_stream(), &mut NullSink, opts).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a.record, b.record);
    let (da, db) = (a.dir.unwrap(), b.dir.unwrap());
    for f in ["config.json", "features.csv", "events.jsonl", "summary.json"] {
        assert_eq!(file_bytes(&da, f), file_bytes(&db, f), "{f}");
    }

    let mut other = cfg.clone();
    other.seed = 6;
    let c = run_session(&other, open_replay(&replay).unwrap().into_stream(), &mut NullSink, SessionOptions::default())
        .unwrap();
    assert_eq!(c.record.features, a.record.features);
    assert_ne!(
        c.record.events.iter().map(|e| e.drone).collect::<Vec<_>>(),
        a.record.events.iter().map(|e| e.drone).collect::<Vec<_>>()
    );
}

#[test]
fn short_source_yields_a_flagged_partial_record() {
    let root = tempfile::tempdir().unwrap();
    let cfg = short_config("short", Condition::Neuroadaptive, 3.0, 10.0);
    let opts = SessionOptions {
        output_root: Some(root.path().to_path_buf()),
        ..SessionOptions::default()
    };
    match run_synthetic(&cfg, &synth(6.0, 0.5, 0.0, 2), opts) {
        Err(SessionError::Incomplete { reason, outcome }) => {
            assert!(reason.contains("exhausted"), "{reason}");
            assert!(!outcome.record.complete);
            let dir = outcome.dir.unwrap();
            let s = read_summary(&dir).unwrap();
            assert!(!s.complete);
            assert!(s.delta_plv.is_some());
            assert!(outcome.record.mark(Phase::EyeContact).unwrap().t_end < 13.0);
        }
        other => panic!("expected an incomplete session, got {other:?}"),
    }
}

/// Forwards frames and injects operator messages once given timestamps pass.
struct Scripted<S> {
    inner: S,
    script: Vec<(f64, OperatorMessage)>,
    tx: Sender<OperatorMessage>,
}

impl<S: FrameSource> Iterator for Scripted<S> {
    type Item = brainsync::Result<DyadFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        let item = self.inner.next()?;
        if let Ok(f) = &item {
            while self.script.first().is_some_and(|(t, _)| *t <= f.t) {
                let (_, msg) = self.script.remove(0);
                self.tx.send(msg).unwrap();
            }
        }
        Some(item)
    }
}

impl<S: FrameSource> FrameSource for Scripted<S> {
    fn layout(&self) -> &ChannelLayout {
        self.inner.layout()
    }
}

fn scripted(
    cfg: &SessionConfig,
    duration_s: f64,
    script: Vec<(f64, OperatorMessage)>,
    wait: bool,
) -> (Result<SessionOutcome, SessionError>, Vec<ConsoleMessage>) {
    let (tx, rx) = unbounded();
    let status = StatusQueue::new(10_000);
    let source = Scripted {
        inner: generate_synthetic(&synth(duration_s, 0.5, 0.0, 8), &layout()).unwrap(),
        script,
        tx,
    };
    let opts = SessionOptions {
        status: Some(status.clone()),
        commands: Some(rx),
        wait_for_operator: wait,
        ..SessionOptions::default()
    };
    let result = run_session(cfg, source, &mut NullSink, opts);
    (result, status.drain())
}

#[test]
fn operator_can_cut_the_baseline_short() {
    let cfg = short_config("op", Condition::Neuroadaptive, 10.0, 3.0);
    let start_eye = OperatorMessage::Command {
        action: Command::StartEyeContact,
    };
    let (result, _) = scripted(&cfg, 12.0, vec![(3.2, start_eye)], false);
    let r = result.unwrap().record;
    let base = r.mark(Phase::Baseline).unwrap();
    assert!(base.duration_s() < 10.0);
    // The command arrives with the window ending at 3.5 and applies at the previous window end.
    assert!((base.t_end - 3.0).abs() < 1e-9, "{base:?}");
    assert_eq!(r.mark(Phase::EyeContact).unwrap().duration_s(), 3.0);
}

#[test]
fn operator_driven_session_and_condition_lock() {
    let cfg = short_config("op", Condition::Neuroadaptive, 2.0, 2.0);
    let script = vec![
        (0.5, OperatorMessage::SetCondition { value: Condition::Random }),
        (1.2, OperatorMessage::Command { action: Command::StartBaseline }),
        (1.6, OperatorMessage::SetCondition { value: Condition::Neuroadaptive }),
        (2.0, OperatorMessage::Command { action: Command::StartBaseline }),
    ];
    let (result, messages) = scripted(&cfg, 10.0, script, true);
    let r = result.unwrap().record;
    assert_eq!(r.config.condition, Condition::Random);
    let base = r.mark(Phase::Baseline).unwrap();
    assert!((base.t_start - 1.0).abs() < 1e-9, "{base:?}");
    let errors: Vec<&String> = messages
        .iter()
        .filter_map(|m| match m {
            ConsoleMessage::Error { message } => Some(message),
            _ => None,
        })
        .collect();
    assert_eq!(errors.len(), 2, "{errors:?}");
    assert!(errors[0].contains("baseline"));
}

#[test]
fn abort_persists_an_incomplete_record() {
    let root = tempfile::tempdir().unwrap();
    let cfg = short_config("ab", Condition::Neuroadaptive, 2.0, 5.0);
    let (tx, rx) = unbounded();
    let source = Scripted {
        inner: generate_synthetic(&synth(10.0, 0.5, 0.0, 8), &layout()).unwrap(),
        script: vec![(4.0, OperatorMessage::Command { action: Command::Abort })],
        tx,
    };
    let opts = SessionOptions {
        commands: Some(rx),
        output_root: Some(root.path().to_path_buf()),
        ..SessionOptions::default()
    };
    match run_session(&cfg, source, &mut NullSink, opts) {
        Err(SessionError::Incomplete { reason, outcome }) => {
            assert!(reason.contains("abort"), "{reason}");
            assert!(outcome.dir.is_some());
            assert!(!read_summary(&outcome.dir.unwrap()).unwrap().complete);
        }
        other => panic!("expected abort, got {other:?}"),
    }
}

#[test]
fn status_messages_track_every_hop() {
    let cfg = short_config("st", Condition::Neuroadaptive, 2.0, 3.0);
    let (result, messages) = scripted(&cfg, 8.0, vec![], false);
    let r = result.unwrap().record;
    let status: Vec<(f64, f64)> = messages
        .iter()
        .filter_map(|m| match m {
            ConsoleMessage::Status { t, plv, .. } => Some((*t, *plv)),
            _ => None,
        })
        .collect();
    assert_eq!(status.len(), r.features.len());
    for ((t, plv), fw) in status.iter().zip(&r.features) {
        assert_eq!(*t, fw.t_end);
        assert_eq!(*plv, fw.plv);
    }
    assert!(status.windows(2).all(|w| w[0].0 < w[1].0));
    let events = messages.iter().filter(|m| matches!(m, ConsoleMessage::Event { .. })).count();
    assert_eq!(events, r.events.len());
}

#[test]
fn report_from_directories_equals_report_from_records() {
    let root = tempfile::tempdir().unwrap();
    let mut records = Vec::new();
    for (k, (condition, coupling)) in [
        (Condition::Neuroadaptive, 1.0),
        (Condition::Neuroadaptive, 0.9),
        (Condition::Random, 0.0),
        (Condition::Random, 0.1),
    ]
    .into_iter()
    .enumerate()
    {
        let mut cfg = short_config(&format!("d{k}"), condition, 4.0, 6.0);
        cfg.seed = k as u64;
        let opts = SessionOptions {
            output_root: Some(root.path().to_path_buf()),
            ..SessionOptions::default()
        };
        records.push(run_synthetic(&cfg, &synth(12.0, coupling, 4.0, 100 + k as u64), opts).unwrap().record);
    }
    let opts = AnalysisOptions { rank_sum: true };
    let in_memory = analyze_study(&records, opts).unwrap();
    let on_disk = load_study_inputs(&[root.path().to_path_buf()]).unwrap().analyze(opts).unwrap();
    assert_eq!(in_memory, on_disk);
    assert_eq!(in_memory.to_json().unwrap(), on_disk.to_json().unwrap());
}

#[test]
fn corrupt_summary_is_skipped_with_warning() {
    let root = tempfile::tempdir().unwrap();
    for k in 0..2 {
        let cfg = short_config(&format!("c{k}"), Condition::Neuroadaptive, 2.0, 2.0);
        let opts = SessionOptions {
            output_root: Some(root.path().to_path_buf()),
            ..SessionOptions::default()
        };
        run_synthetic(&cfg, &synth(5.0, 0.5, 0.0, k), opts).unwrap();
    }
    let dirs = find_session_dirs(root.path()).unwrap();
    std::fs::write(dirs[0].join("summary.json"), "{ not json").unwrap();
    let loaded = load_study_inputs(&[root.path().to_path_buf()]).unwrap();
    assert_eq!(loaded.dyads.len(), 1);
    assert_eq!(loaded.warnings.len(), 1);
    assert!(loaded.warnings[0].contains("summary.json"));
}
