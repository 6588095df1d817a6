//! `brainsync` command-line front end.

pub mod args;
pub mod console;

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use brainsync::dsp::{inter_brain_plv, write_features_csv, FeatureExtractor, WindowConfig};
use brainsync::session::{
    attach_subjective, run_session, LikertPair, Pacing, SessionError, SessionOptions, SessionOutcome, StatusQueue,
    SubjectiveScores,
};
use brainsync::signal::{generate_synthetic, open_replay, write_replay, ChannelLayout, FrameSource, SynthConfig};
use brainsync::sonify::{EventSink, NullSink, OscSender};
use brainsync::stats::{load_study_inputs, AnalysisOptions, StudyReport};
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

pub use args::Cli;
use args::{AnalyzeArgs, Command, ReplayArgs, RunArgs, ScoreArgs, SimulateArgs, DEFAULT_CONSOLE_PORT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] brainsync::Error),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(brainsync::Error::Config(_)) => EXIT_USAGE,
            CliError::Session(SessionError::Setup(brainsync::Error::Config(_))) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }

    fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

/// Parses `argv`, merging `--config` values underneath explicit flags.
pub fn parse_args<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let (Some(path), Some(pos)) = (config_path(&argv), subcommand_position(&argv)) else {
        return Cli::try_parse_from(&argv);
    };
    let extra = config_flags(&path)?;
    let mut merged = argv[..=pos].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[pos + 1..]);
    Cli::try_parse_from(merged)
}

/// Value of `--config PATH` or `--config=PATH` anywhere on the command line.
fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut args = argv.iter().skip(1).map(|a| a.to_string_lossy());
    while let Some(a) = args.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return args.next().map(|p| PathBuf::from(p.as_ref()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn subcommand_position(argv: &[OsString]) -> Option<usize> {
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let mut skip_value = false;
    for (i, a) in argv.iter().enumerate().skip(1) {
        let a = a.to_string_lossy();
        if skip_value {
            skip_value = false;
        } else if a == "--config" {
            skip_value = true;
        } else if names.iter().any(|n| *n == a) {
            return Some(i);
        }
    }
    None
}

/// Turns a JSON object into flags: `{"plv_threshold": 0.4, "synthetic": true}`
/// becomes `--plv-threshold 0.4 --synthetic`.
fn config_flags(path: &Path) -> Result<Vec<OsString>, clap::Error> {
    let bad = |msg: String| clap::Error::raw(ErrorKind::InvalidValue, format!("config {}: {msg}\n", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| bad("expected a JSON object".into()))?;
    let mut out = Vec::new();
    for (key, v) in obj {
        if key == "config" {
            return Err(bad("nested config is not supported".into()));
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            serde_json::Value::Bool(true) => out.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Number(n) => out.extend([flag.into(), n.to_string().into()]),
            serde_json::Value::String(s) => out.extend([flag.into(), s.into()]),
            _ => return Err(bad(format!("`{key}` must be a string, number or boolean"))),
        }
    }
    Ok(out)
}

/// Runs the parsed command and maps the result to an exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Run(a) => cmd_run(&a, false),
        Command::ServeConsole(a) => cmd_run(&a.run, true),
        Command::Replay(a) => cmd_replay(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Score(a) => cmd_score(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let layout = ChannelLayout::with_rate(a.synth.rate)?;
    let cfg = SynthConfig {
        duration_s: a.duration,
        coupling: a.synth.coupling,
        carrier_hz: a.synth.carrier,
        noise_amplitude: a.synth.noise,
        seed: a.seed,
        coupling_onset_s: a.coupling_onset,
        pre_onset_coupling: a.pre_onset_coupling,
    };
    let stream = generate_synthetic(&cfg, &layout)?;
    let frames = stream.collect::<brainsync::Result<Vec<_>>>()?;
    let file = File::create(&a.output).map_err(|e| CliError::io(format!("cannot create {}", a.output.display()), e))?;
    write_replay(file, &layout, &frames).map_err(|e| CliError::io(format!("writing {}", a.output.display()), e))?;
    let plv = inter_brain_plv(&frames, &layout, &WindowConfig::default())?;
    println!("wrote {} frames ({:.1} s) to {}", frames.len(), a.duration, a.output.display());
    println!("mean inter-brain PLV: {plv:.4}");
    Ok(())
}

pub fn cmd_run(a: &RunArgs, serve: bool) -> Result<(), CliError> {
    let cfg = a.session_config();
    let source: Box<dyn FrameSource> = if a.synthetic {
        let layout = a.synth_layout()?;
        let synth = a.synth_config();
        synth.validate(&layout)?;
        Box::new(generate_synthetic(&synth, &layout)?)
    } else {
        let path = a.replay.as_ref().expect("clap requires --replay without --synthetic");
        Box::new(open_replay(path)?.into_stream())
    };
    // Validate everything before any socket is opened.
    cfg.validate(source.layout().sampling_rate_hz())?;

    let mut sink: Box<dyn EventSink> = match &a.osc {
        Some(target) => {
            let sender = OscSender::connect(target.as_str())?;
            log::info!("sending OSC to {}", sender.target());
            Box::new(sender)
        }
        None => Box::new(NullSink),
    };

    let port = a.console_port.or(serve.then_some(DEFAULT_CONSOLE_PORT));
    let mut opts = SessionOptions {
        pacing: if a.realtime || a.wait_for_operator || serve {
            Pacing::RealTime
        } else {
            Pacing::Unpaced
        },
        wait_for_operator: a.wait_for_operator || serve,
        output_root: Some(a.out.clone()),
        ..SessionOptions::default()
    };
    let server = match port {
        Some(port) => {
            let status = StatusQueue::default();
            let (tx, rx) = crossbeam::channel::unbounded();
            let addr = SocketAddr::from(([127, 0, 0, 1], port));
            let server = console::ConsoleServer::start(addr, a.console_dir.clone(), status.clone(), tx)
                .map_err(|e| CliError::io(format!("cannot serve console on {addr}"), e))?;
            println!("operator console on http://{}/", server.local_addr());
            opts.status = Some(status);
            opts.commands = Some(rx);
            Some(server)
        }
        None => None,
    };

    let result = run_session(&cfg, source, sink.as_mut(), opts);
    if let Some(server) = server {
        server.shutdown();
    }
    match result {
        Ok(outcome) => {
            report_outcome(&outcome);
            Ok(())
        }
        Err(SessionError::Incomplete { reason, outcome }) => {
            report_outcome(&outcome);
            Err(CliError::Session(SessionError::Incomplete { reason, outcome }))
        }
        Err(e) => Err(e.into()),
    }
}

fn report_outcome(outcome: &SessionOutcome) {
    let r = &outcome.record;
    if let Some(dir) = &outcome.dir {
        println!("session directory: {}", dir.display());
    }
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
    println!(
        "dyad {} ({}): baseline PLV {}, eye-contact PLV {}, delta PLV {}, {} events",
        r.config.dyad_id,
        r.config.condition,
        fmt(r.plv_baseline),
        fmt(r.plv_eyecontact),
        fmt(r.delta_plv),
        r.events.len()
    );
}

pub fn cmd_replay(a: &ReplayArgs) -> Result<(), CliError> {
    let replay = open_replay(&a.input)?;
    let cfg = a.features.window_config();
    let layout = replay.layout.clone();
    cfg.validate(layout.sampling_rate_hz())?;
    let whole = inter_brain_plv(&replay.frames, &layout, &cfg)?;
    let mut extractor = FeatureExtractor::new(&layout, &cfg)?;
    let (win, hop) = (cfg.window_len(layout.sampling_rate_hz()), cfg.hop_len(layout.sampling_rate_hz()));
    let mut windows = Vec::new();
    let mut start = 0;
    while start + win <= replay.frames.len() {
        windows.push(extractor.extract(&replay.frames[start..start + win])?);
        start += hop;
    }
    println!(
        "{}: {} frames at {} Hz ({:.2} s)",
        a.input.display(),
        replay.frames.len(),
        layout.sampling_rate_hz(),
        replay.duration_s()
    );
    println!("whole-recording inter-brain PLV: {whole:.4}");
    if !windows.is_empty() {
        let mean = windows.iter().map(|w| w.plv).sum::<f64>() / windows.len() as f64;
        println!("{} windows, mean windowed PLV: {mean:.4}", windows.len());
    }
    if let Some(path) = &a.features_out {
        let file = File::create(path).map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))?;
        write_features_csv(BufWriter::new(file), &windows)
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        println!("features written to {}", path.display());
    }
    Ok(())
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let loaded = load_study_inputs(&a.paths)?;
    for w in &loaded.warnings {
        log::warn!("{w}");
        eprintln!("warning: {w}");
    }
    let report = loaded.analyze(AnalysisOptions { rank_sum: a.rank_sum })?;
    write_report(&report, &a.out_dir)?;
    print_headline(&report);
    Ok(())
}

/// Writes `report.md` and `report.json` into `dir`.
pub fn write_report(report: &StudyReport, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
    let md = dir.join("report.md");
    let json = dir.join("report.json");
    std::fs::write(&md, report.to_markdown()).map_err(|e| CliError::io(format!("writing {}", md.display()), e))?;
    std::fs::write(&json, report.to_json()? + "\n")
        .map_err(|e| CliError::io(format!("writing {}", json.display()), e))?;
    Ok((md, json))
}

fn print_headline(report: &StudyReport) {
    println!(
        "{} dyads ({} neuroadaptive, {} random)",
        report.n_dyads, report.n_neuroadaptive, report.n_random
    );
    let fmt = |v: Option<f64>, d: usize| v.map(|x| format!("{x:.d$}")).unwrap_or_else(|| "-".into());
    for c in &report.comparisons {
        match &c.skipped {
            Some(reason) => println!("{} [{}]: skipped ({reason})", c.name, c.method),
            None => println!(
                "{} [{}]: n = {}, statistic = {}, Z = {}, p one-sided = {}, p two-sided = {}; Md {} vs {}",
                c.name,
                c.method,
                c.n,
                fmt(c.statistic, 1),
                fmt(c.z, 2),
                fmt(c.p_one_sided, 3),
                fmt(c.p_two_sided, 3),
                fmt(c.median_neuroadaptive, 2),
                fmt(c.median_random, 2)
            ),
        }
    }
    for c in &report.correlations {
        match &c.skipped {
            Some(reason) => println!("{} [{}]: skipped ({reason})", c.name, c.condition),
            None => println!(
                "{} [{}]: rs({}) = {}, p = {}",
                c.name,
                c.condition,
                c.n,
                fmt(c.rs, 2),
                fmt(c.p_two_sided, 3)
            ),
        }
    }
}

pub fn cmd_score(a: &ScoreArgs) -> Result<(), CliError> {
    for (name, v) in [("a-pre", a.a_pre), ("a-post", a.a_post), ("b-pre", a.b_pre), ("b-post", a.b_post)] {
        if !(1..=a.scale_max).contains(&v) {
            return Err(CliError::Usage(format!("--{name} must lie in 1..={}, got {v}", a.scale_max)));
        }
    }
    let scores = SubjectiveScores {
        a: LikertPair {
            pre: a.a_pre,
            post: a.a_post,
        },
        b: LikertPair {
            pre: a.b_pre,
            post: a.b_post,
        },
    };
    attach_subjective(&a.session, scores)?;
    println!("scores attached to {}", a.session.display());
    Ok(())
}

/// Entry point shared by the binary and tests.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    execute(cli)
}
