use std::path::PathBuf;

use brainsync::dsp::{Band, WindowConfig};
use brainsync::session::{SessionConfig, SESSIONS_DIR_ENV};
use brainsync::signal::{ChannelLayout, SynthConfig, DEFAULT_SAMPLING_RATE_HZ};
use brainsync::sonify::{AmpBounds, Condition, MappingConfig, ThresholdMode};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Dual-participant EEG synchrony sonification.
#[derive(Debug, Parser)]
#[command(name = "brainsync", version, args_override_self = true)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// JSON file of flag values; keys are flag names, explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dyad replay file.
    Simulate(SimulateArgs),
    /// Run a full Baseline + EyeContact session.
    Run(RunArgs),
    /// Extract features from a replay file without running the protocol.
    Replay(ReplayArgs),
    /// Compare sessions across conditions.
    Analyze(AnalyzeArgs),
    /// Attach pre/post subjective synchrony scores to a recorded session.
    Score(ScoreArgs),
    /// Run an operator-driven session behind the WebSocket console.
    ServeConsole(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Cross-brain phase coupling in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub coupling: f64,
    /// Carrier frequency in Hz.
    #[arg(long, default_value_t = 10.0)]
    pub carrier: f64,
    /// Standard deviation of additive white noise, in signal units.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Sampling rate in Hz.
    #[arg(long, default_value_t = DEFAULT_SAMPLING_RATE_HZ)]
    pub rate: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Duration in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time at which --coupling takes effect.
    #[arg(long, default_value_t = 0.0)]
    pub coupling_onset: f64,
    /// Coupling before --coupling-onset.
    #[arg(long, default_value_t = 0.0)]
    pub pre_onset_coupling: f64,
    /// Output replay CSV.
    #[arg(short, long, value_name = "PATH")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FeatureArgs {
    /// Window length in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
    /// Hop in seconds.
    #[arg(long, default_value_t = 0.5)]
    pub hop: f64,
    /// PLV band, LOW-HIGH in Hz.
    #[arg(long, default_value_t = Band::ALPHA)]
    pub plv_band: Band,
    /// Alpha band for asymmetry, LOW-HIGH in Hz.
    #[arg(long, default_value_t = Band::ALPHA)]
    pub alpha_band: Band,
}

impl FeatureArgs {
    pub fn window_config(&self) -> WindowConfig {
        WindowConfig {
            window_s: self.window,
            hop_s: self.hop,
            plv_band: self.plv_band,
            alpha_band: self.alpha_band,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    Neuroadaptive,
    Random,
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::Neuroadaptive => Condition::Neuroadaptive,
            ConditionArg::Random => Condition::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    Fixed,
    BaselineMedian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpRangeArg(pub f64, pub f64);

impl std::str::FromStr for AmpRangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once('-').ok_or_else(|| format!("expected LOW-HIGH, got `{s}`"))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number `{v}`"));
        Ok(Self(num(lo)?, num(hi)?))
    }
}

#[derive(Debug, Clone, Args)]
pub struct MappingArgs {
    /// Scale root, MIDI note.
    #[arg(long, default_value_t = 60)]
    pub root: u8,
    /// Lowest melody pitch, MIDI note.
    #[arg(long, default_value_t = 48)]
    pub pitch_lo: u8,
    /// Highest melody pitch, MIDI note.
    #[arg(long, default_value_t = 84)]
    pub pitch_hi: u8,
    /// PLV at or above which the drone is consonant.
    #[arg(long, default_value_t = 0.5)]
    pub plv_threshold: f64,
    #[arg(long, value_enum, default_value_t = ThresholdArg::Fixed)]
    pub threshold_mode: ThresholdArg,
    /// Seconds between notes.
    #[arg(long, default_value_t = 0.5)]
    pub note_period: f64,
    /// Baseline amplitude percentile mapped to the lowest pitch.
    #[arg(long, default_value_t = 5.0)]
    pub amp_lo_pct: f64,
    /// Baseline amplitude percentile mapped to the highest pitch.
    #[arg(long, default_value_t = 95.0)]
    pub amp_hi_pct: f64,
    /// Fixed amplitude range LOW-HIGH instead of baseline percentiles.
    #[arg(long, value_name = "LOW-HIGH")]
    pub amp_range: Option<AmpRangeArg>,
    #[arg(long, default_value_t = 90)]
    pub velocity: u8,
}

impl MappingArgs {
    pub fn mapping_config(&self) -> MappingConfig {
        MappingConfig {
            root: self.root,
            pitch_lo: self.pitch_lo,
            pitch_hi: self.pitch_hi,
            amp_bounds: match self.amp_range {
                Some(AmpRangeArg(lo, hi)) => AmpBounds::Fixed { lo, hi },
                None => AmpBounds::BaselinePercentile {
                    lo_pct: self.amp_lo_pct,
                    hi_pct: self.amp_hi_pct,
                },
            },
            plv_threshold: self.plv_threshold,
            threshold_mode: match self.threshold_mode {
                ThresholdArg::Fixed => ThresholdMode::Fixed,
                ThresholdArg::BaselineMedian => ThresholdMode::BaselineMedian,
            },
            note_period_s: self.note_period,
            velocity: self.velocity,
            ..MappingConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Dyad identifier; names the session directory.
    #[arg(long)]
    pub dyad: String,
    #[arg(long, value_enum)]
    pub condition: ConditionArg,
    /// Replay CSV to stream.
    #[arg(long, value_name = "PATH", conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub replay: Option<PathBuf>,
    /// Stream a synthetic dyad; --coupling applies during eye contact.
    #[arg(long)]
    pub synthetic: bool,
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Synthetic coupling during the baseline phase.
    #[arg(long, default_value_t = 0.0)]
    pub baseline_coupling: f64,
    /// Baseline phase length in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub baseline: f64,
    /// Eye-contact phase length in seconds.
    #[arg(long, default_value_t = 300.0)]
    pub eyecontact: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub mapping: MappingArgs,
    /// Send note events as OSC to HOST:PORT.
    #[arg(long, value_name = "HOST:PORT")]
    pub osc: Option<String>,
    /// Serve the operator console (static files and WebSocket) on this port.
    #[arg(long)]
    pub console_port: Option<u16>,
    /// Directory of console static files.
    #[arg(long, value_name = "DIR")]
    pub console_dir: Option<PathBuf>,
    /// Stay idle until the operator starts the baseline.
    #[arg(long)]
    pub wait_for_operator: bool,
    /// Pace frames at wall-clock speed.
    #[arg(long)]
    pub realtime: bool,
    /// Session output root.
    #[arg(long, env = SESSIONS_DIR_ENV, default_value = "sessions")]
    pub out: PathBuf,
}

impl RunArgs {
    pub fn session_config(&self) -> SessionConfig {
        let mut cfg = SessionConfig::new(self.dyad.clone(), self.condition.into());
        cfg.baseline_s = self.baseline;
        cfg.eyecontact_s = self.eyecontact;
        cfg.seed = self.seed;
        cfg.mapping = self.mapping.mapping_config();
        cfg.windows = self.features.window_config();
        cfg
    }

    /// Long enough to cover both phases plus the final window.
    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            duration_s: self.baseline + self.eyecontact + 2.0 * self.features.window,
            coupling: self.synth.coupling,
            carrier_hz: self.synth.carrier,
            noise_amplitude: self.synth.noise,
            seed: self.seed,
            coupling_onset_s: self.baseline,
            pre_onset_coupling: self.baseline_coupling,
        }
    }

    pub fn synth_layout(&self) -> brainsync::Result<ChannelLayout> {
        ChannelLayout::with_rate(self.synth.rate)
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

/// Default WebSocket port for `serve-console`.
pub const DEFAULT_CONSOLE_PORT: u16 = 8765;

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Replay CSV.
    pub input: PathBuf,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Write the feature windows as CSV.
    #[arg(long, value_name = "PATH")]
    pub features_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Session directories (searched recursively) or flat study CSV files.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Directory for report.md and report.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Add rank-sum (Mann-Whitney) rows to each comparison.
    #[arg(long)]
    pub rank_sum: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Session directory containing summary.json.
    pub session: PathBuf,
    #[arg(long)]
    pub a_pre: i32,
    #[arg(long)]
    pub a_post: i32,
    #[arg(long)]
    pub b_pre: i32,
    #[arg(long)]
    pub b_post: i32,
    /// Highest point of the Likert scale.
    #[arg(long, default_value_t = 7)]
    pub scale_max: i32,
}
