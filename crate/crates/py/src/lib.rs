//! Python bindings for the brainsync engine.

use std::path::PathBuf;

use brainsync::dsp::{self, Band, WindowConfig};
use brainsync::session::{self, SessionConfig, SessionError, SessionOptions};
use brainsync::signal::{generate_synthetic, open_replay, write_replay, ChannelLayout, FrameSource, SynthConfig};
use brainsync::sonify::{self, Condition, Mode, NullSink, Scale};
use brainsync::stats::{self, AnalysisOptions};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

fn to_py(e: brainsync::Error) -> PyErr {
    match e {
        brainsync::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        brainsync::Error::IncompleteRecord(_) | brainsync::Error::State { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_condition(s: &str) -> PyResult<Condition> {
    s.parse().map_err(PyValueError::new_err)
}

/// One analysis window.
#[pyclass(name = "FeatureWindow", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyFeatureWindow {
    t_start: f64,
    t_end: f64,
    plv: f64,
    faa_a: f64,
    faa_b: f64,
    amp_a: Vec<f64>,
    amp_b: Vec<f64>,
}

#[pymethods]
impl PyFeatureWindow {
    fn __repr__(&self) -> String {
        format!(
            "FeatureWindow(t_start={}, t_end={}, plv={:.4}, faa_a={:.4}, faa_b={:.4})",
            self.t_start, self.t_end, self.plv, self.faa_a, self.faa_b
        )
    }
}

impl From<dsp::FeatureWindow> for PyFeatureWindow {
    fn from(w: dsp::FeatureWindow) -> Self {
        Self {
            t_start: w.t_start,
            t_end: w.t_end,
            plv: w.plv,
            faa_a: w.faa_a,
            faa_b: w.faa_b,
            amp_a: w.amp_a.to_vec(),
            amp_b: w.amp_b.to_vec(),
        }
    }
}

/// Phase-locking value of two phase series.
#[pyfunction]
fn plv(phase_a: Vec<f64>, phase_b: Vec<f64>) -> PyResult<f64> {
    dsp::plv(&phase_a, &phase_b).map_err(to_py)
}

/// Zero-phase Butterworth band-pass.
#[pyfunction]
#[pyo3(signature = (x, rate_hz, low_hz = 8.0, high_hz = 12.0))]
fn bandpass(x: Vec<f64>, rate_hz: f64, low_hz: f64, high_hz: f64) -> PyResult<Vec<f64>> {
    dsp::bandpass(&x, Band::new(low_hz, high_hz), rate_hz).map_err(to_py)
}

/// Instantaneous phase in (-pi, pi].
#[pyfunction]
fn analytic_phase(x: Vec<f64>) -> PyResult<Vec<f64>> {
    dsp::analytic_phase(&x).map_err(to_py)
}

/// Mean band power after band-pass filtering and edge trimming.
#[pyfunction]
#[pyo3(signature = (x, rate_hz, low_hz = 8.0, high_hz = 12.0))]
fn band_power(x: Vec<f64>, rate_hz: f64, low_hz: f64, high_hz: f64) -> PyResult<f64> {
    dsp::band_power(&x, Band::new(low_hz, high_hz), rate_hz).map_err(to_py)
}

/// Generates a synthetic dyad, optionally writes it as a replay CSV, and
/// returns its whole-recording inter-brain PLV.
#[allow(clippy::too_many_arguments)]
#[pyfunction]
#[pyo3(signature = (duration_s, coupling, seed = 0, carrier_hz = 10.0, noise_amplitude = 0.0, rate_hz = 250.0, path = None))]
fn simulate(
    py: Python<'_>,
    duration_s: f64,
    coupling: f64,
    seed: u64,
    carrier_hz: f64,
    noise_amplitude: f64,
    rate_hz: f64,
    path: Option<PathBuf>,
) -> PyResult<f64> {
    py.detach(|| {
        let layout = ChannelLayout::with_rate(rate_hz).map_err(to_py)?;
        let cfg = SynthConfig {
            duration_s,
            coupling,
            carrier_hz,
            noise_amplitude,
            seed,
            ..SynthConfig::default()
        };
        let frames = generate_synthetic(&cfg, &layout)
            .map_err(to_py)?
            .collect::<brainsync::Result<Vec<_>>>()
            .map_err(to_py)?;
        if let Some(path) = path {
            let f = std::fs::File::create(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
            write_replay(f, &layout, &frames).map_err(|e| PyIOError::new_err(e.to_string()))?;
        }
        dsp::inter_brain_plv(&frames, &layout, &WindowConfig::default()).map_err(to_py)
    })
}

/// Sliding-window features of a replay file.
#[pyfunction]
#[pyo3(signature = (path, window_s = 1.0, hop_s = 0.5))]
fn extract_features(py: Python<'_>, path: PathBuf, window_s: f64, hop_s: f64) -> PyResult<Vec<PyFeatureWindow>> {
    py.detach(|| {
        let replay = open_replay(&path).map_err(to_py)?;
        let cfg = WindowConfig {
            window_s,
            hop_s,
            ..WindowConfig::default()
        };
        let layout = replay.layout.clone();
        dsp::feature_stream(replay.into_stream(), &layout, &cfg)
            .map_err(to_py)?
            .map(|w| w.map(PyFeatureWindow::from).map_err(to_py))
            .collect()
    })
}

/// Quantises a raw pitch onto the scale of `root` in `mode` ("major" or "minor").
#[pyfunction]
#[pyo3(signature = (raw_pitch, root = 60, mode = "major"))]
fn quantize_pitch(raw_pitch: f64, root: u8, mode: &str) -> PyResult<u8> {
    let mode = match mode {
        "major" => Mode::Major,
        "minor" => Mode::Minor,
        other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    };
    Ok(sonify::quantize_pitch(raw_pitch, &Scale { root, mode }))
}

/// Wilcoxon signed-rank test on paired differences.
#[pyfunction]
fn wilcoxon_signed_rank<'py>(py: Python<'py>, diffs: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let t = stats::wilcoxon_signed_rank(&diffs).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n", t.n)?;
    d.set_item("n_zero", t.n_zero)?;
    d.set_item("w_plus", t.w_plus)?;
    d.set_item("w_minus", t.w_minus)?;
    d.set_item("z", t.z)?;
    d.set_item("p_one_sided", t.p_one_sided)?;
    d.set_item("p_two_sided", t.p_two_sided)?;
    d.set_item("exact", t.exact)?;
    Ok(d)
}

/// Rank-sum (Mann-Whitney) test of `x` against `y`.
#[pyfunction]
fn rank_sum<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let t = stats::rank_sum(&x, &y).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("u", t.u)?;
    d.set_item("z", t.z)?;
    d.set_item("p_one_sided", t.p_one_sided)?;
    d.set_item("p_two_sided", t.p_two_sided)?;
    d.set_item("p_normal_one_sided", t.p_normal_one_sided)?;
    d.set_item("exact", t.exact)?;
    Ok(d)
}

/// Spearman rank correlation, returned as `(rs, p_two_sided)`.
#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
    let t = stats::spearman(&x, &y).map_err(to_py)?;
    Ok((t.rs, t.p_two_sided))
}

/// OSC packet for one note event.
#[allow(clippy::too_many_arguments)]
#[pyfunction]
#[pyo3(signature = (onset_s, pitch, source = "A", mode = "major", consonant = true, velocity = 90, drone_note = 67))]
fn encode_osc<'py>(
    py: Python<'py>,
    onset_s: f64,
    pitch: u8,
    source: &str,
    mode: &str,
    consonant: bool,
    velocity: u8,
    drone_note: u8,
) -> PyResult<Bound<'py, PyBytes>> {
    let event = sonify::MusicEvent {
        onset_s,
        pitch,
        source: match source {
            "A" | "a" => brainsync::signal::Participant::A,
            "B" | "b" => brainsync::signal::Participant::B,
            other => return Err(PyValueError::new_err(format!("unknown participant `{other}`"))),
        },
        mode: match mode {
            "major" => Mode::Major,
            "minor" => Mode::Minor,
            other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
        },
        drone: if consonant {
            sonify::Drone::Consonant
        } else {
            sonify::Drone::Dissonant
        },
        velocity,
    };
    Ok(PyBytes::new(py, &sonify::encode_osc(&event, drone_note)))
}

/// Runs a full session over a replay file (or a synthetic dyad when `replay`
/// is None) and returns its summary as a dict.
#[pyfunction]
#[pyo3(signature = (dyad_id, condition, replay = None, baseline_s = 60.0, eyecontact_s = 300.0, seed = 0,
    coupling = 0.9, baseline_coupling = 0.0, output_root = None))]
#[allow(clippy::too_many_arguments)]
fn run_session<'py>(
    py: Python<'py>,
    dyad_id: String,
    condition: &str,
    replay: Option<PathBuf>,
    baseline_s: f64,
    eyecontact_s: f64,
    seed: u64,
    coupling: f64,
    baseline_coupling: f64,
    output_root: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = SessionConfig::new(dyad_id, parse_condition(condition)?);
    cfg.baseline_s = baseline_s;
    cfg.eyecontact_s = eyecontact_s;
    cfg.seed = seed;
    let result = py.detach(|| -> PyResult<_> {
        let source: Box<dyn FrameSource> = match replay {
            Some(path) => Box::new(open_replay(&path).map_err(to_py)?.into_stream()),
            None => {
                let synth = SynthConfig {
                    duration_s: baseline_s + eyecontact_s + 2.0 * cfg.windows.window_s,
                    coupling,
                    seed,
                    coupling_onset_s: baseline_s,
                    pre_onset_coupling: baseline_coupling,
                    ..SynthConfig::default()
                };
                let layout = ChannelLayout::with_rate(brainsync::signal::DEFAULT_SAMPLING_RATE_HZ).map_err(to_py)?;
                Box::new(generate_synthetic(&synth, &layout).map_err(to_py)?)
            }
        };
        let opts = SessionOptions {
            output_root,
            ..SessionOptions::default()
        };
        Ok(session::run_session(&cfg, source, &mut NullSink, opts))
    })?;
    let outcome = match result {
        Ok(o) => o,
        Err(SessionError::Setup(e)) => return Err(to_py(e)),
        Err(e) => return Err(PyRuntimeError::new_err(e.to_string())),
    };
    let r = &outcome.record;
    let d = PyDict::new(py);
    d.set_item("dyad_id", &r.config.dyad_id)?;
    d.set_item("condition", r.config.condition.to_string())?;
    d.set_item("plv_baseline", r.plv_baseline)?;
    d.set_item("plv_eyecontact", r.plv_eyecontact)?;
    d.set_item("delta_plv", r.delta_plv)?;
    d.set_item("n_windows", r.features.len())?;
    d.set_item("n_events", r.events.len())?;
    d.set_item("dir", outcome.dir)?;
    Ok(d)
}

/// Loads session directories or study CSVs and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (paths, rank_sum = false))]
fn analyze(paths: Vec<PathBuf>, rank_sum: bool) -> PyResult<String> {
    let loaded = stats::load_study_inputs(&paths).map_err(to_py)?;
    let report = loaded.analyze(AnalysisOptions { rank_sum }).map_err(to_py)?;
    report.to_json().map_err(to_py)
}

#[pymodule]
fn brainsync_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFeatureWindow>()?;
    m.add_function(wrap_pyfunction!(plv, m)?)?;
    m.add_function(wrap_pyfunction!(bandpass, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_phase, m)?)?;
    m.add_function(wrap_pyfunction!(band_power, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(quantize_pitch, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon_signed_rank, m)?)?;
    m.add_function(wrap_pyfunction!(rank_sum, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(encode_osc, m)?)?;
    m.add_function(wrap_pyfunction!(run_session, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
