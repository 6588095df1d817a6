//! Window features: inter-brain PLV, frontal alpha asymmetry, amplitude.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use serde::{Deserialize, Serialize};

use super::filter::{Band, BandpassFilter, MIN_SAMPLES};
use super::hilbert::HilbertTransformer;
use crate::error::{Error, Result};
use crate::signal::{ChannelLayout, Channels, DyadFrame, CHANNELS};

/// Fraction trimmed from each window edge before phase and power statistics.
pub const EDGE_TRIM_FRACTION: f64 = 0.1;

/// Floor applied to band powers before taking logarithms, µV².
pub const POWER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub plv_band: Band,
    pub alpha_band: Band,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_s: 1.0,
            hop_s: 0.5,
            plv_band: Band::ALPHA,
            alpha_band: Band::ALPHA,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self, rate_hz: f64) -> Result<()> {
        if !(self.window_s.is_finite() && self.window_s > 0.0) {
            return Err(Error::config("window length must be positive"));
        }
        if !(self.hop_s.is_finite() && self.hop_s > 0.0) {
            return Err(Error::config("hop must be positive"));
        }
        if self.hop_s > self.window_s {
            return Err(Error::config(format!(
                "hop {} s exceeds window {} s",
                self.hop_s, self.window_s
            )));
        }
        if self.window_len(rate_hz) < MIN_SAMPLES {
            return Err(Error::config(format!(
                "window of {} s at {rate_hz} Hz holds fewer than {MIN_SAMPLES} samples",
                self.window_s
            )));
        }
        if self.hop_len(rate_hz) == 0 {
            return Err(Error::config("hop is shorter than one sample"));
        }
        self.plv_band.validate(rate_hz)?;
        self.alpha_band.validate(rate_hz)
    }

    pub fn window_len(&self, rate_hz: f64) -> usize {
        (self.window_s * rate_hz).round() as usize
    }

    pub fn hop_len(&self, rate_hz: f64) -> usize {
        (self.hop_s * rate_hz).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub plv: f64,
    pub faa_a: f64,
    pub faa_b: f64,
    pub amp_a: Channels,
    pub amp_b: Channels,
}

impl FeatureWindow {
    pub fn mean_amplitude(&self, p: crate::signal::Participant) -> f64 {
        let amps = match p {
            crate::signal::Participant::A => &self.amp_a,
            crate::signal::Participant::B => &self.amp_b,
        };
        amps.iter().sum::<f64>() / CHANNELS as f64
    }

    pub fn faa(&self, p: crate::signal::Participant) -> f64 {
        match p {
            crate::signal::Participant::A => self.faa_a,
            crate::signal::Participant::B => self.faa_b,
        }
    }
}

/// Modulus of the mean unit phasor of the phase difference.
pub fn plv(phase_a: &[f64], phase_b: &[f64]) -> Result<f64> {
    if phase_a.len() != phase_b.len() {
        return Err(Error::Shape(format!(
            "phase lengths differ: {} vs {}",
            phase_a.len(),
            phase_b.len()
        )));
    }
    if phase_a.len() < MIN_SAMPLES {
        return Err(Error::Shape(format!(
            "need at least {MIN_SAMPLES} phase samples, got {}",
            phase_a.len()
        )));
    }
    let (mut re, mut im) = (0.0, 0.0);
    for (a, b) in phase_a.iter().zip(phase_b) {
        let (s, c) = (a - b).sin_cos();
        re += c;
        im += s;
    }
    let n = phase_a.len() as f64;
    Ok((re / n).hypot(im / n).min(1.0))
}

fn trimmed<T>(x: &[T]) -> &[T] {
    let k = (x.len() as f64 * EDGE_TRIM_FRACTION).floor() as usize;
    &x[k..x.len() - k]
}

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Mean square of the band-passed signal over the interior (edge-trimmed) samples, µV².
pub fn band_power(x: &[f64], band: Band, rate_hz: f64) -> Result<f64> {
    let filtered = BandpassFilter::design(band, rate_hz)?.filtfilt(x)?;
    Ok(mean_square(trimmed(&filtered)))
}

/// Per-channel RMS of the raw window.
pub fn amplitude(window: &[Channels]) -> Result<Channels> {
    if window.is_empty() {
        return Err(Error::Shape("amplitude of an empty window".into()));
    }
    let mut out = [0.0; CHANNELS];
    for (c, slot) in out.iter_mut().enumerate() {
        let ms = window.iter().map(|s| s[c] * s[c]).sum::<f64>() / window.len() as f64;
        *slot = ms.sqrt();
    }
    Ok(out)
}

fn faa_from_powers(p_f3: f64, p_f4: f64) -> f64 {
    p_f4.max(POWER_FLOOR).ln() - p_f3.max(POWER_FLOOR).ln()
}

/// Frontal alpha asymmetry `ln P(F4) - ln P(F3)`; positive means positive valence.
pub fn faa(window: &[Channels], layout: &ChannelLayout, cfg: &WindowConfig) -> Result<f64> {
    let rate = layout.sampling_rate_hz();
    let f3: Vec<f64> = window.iter().map(|s| s[layout.f3()]).collect();
    let f4: Vec<f64> = window.iter().map(|s| s[layout.f4()]).collect();
    Ok(faa_from_powers(
        band_power(&f3, cfg.alpha_band, rate)?,
        band_power(&f4, cfg.alpha_band, rate)?,
    ))
}

/// Mean PLV over all 64 cross-brain channel pairs.
pub fn inter_brain_plv(frames: &[DyadFrame], layout: &ChannelLayout, cfg: &WindowConfig) -> Result<f64> {
    let mut ex = FeatureExtractor::new(layout, cfg)?;
    ex.inter_brain_plv(frames)
}

/// Computes every feature of a window with cached filters and FFT plans.
pub struct FeatureExtractor {
    layout: ChannelLayout,
    cfg: WindowConfig,
    plv_filter: BandpassFilter,
    alpha_filter: BandpassFilter,
    hilbert: HilbertTransformer,
}

impl FeatureExtractor {
    pub fn new(layout: &ChannelLayout, cfg: &WindowConfig) -> Result<Self> {
        let rate = layout.sampling_rate_hz();
        Ok(Self {
            layout: layout.clone(),
            cfg: *cfg,
            plv_filter: BandpassFilter::design(cfg.plv_band, rate)?,
            alpha_filter: BandpassFilter::design(cfg.alpha_band, rate)?,
            hilbert: HilbertTransformer::new(),
        })
    }

    pub fn layout(&self) -> &ChannelLayout {
        &self.layout
    }

    pub fn config(&self) -> &WindowConfig {
        &self.cfg
    }

    fn channel_phases(&mut self, frames: &[DyadFrame], pick: fn(&DyadFrame) -> &Channels) -> Result<Vec<Vec<f64>>> {
        (0..CHANNELS)
            .map(|c| {
                let x: Vec<f64> = frames.iter().map(|f| pick(f)[c]).collect();
                let filtered = self.plv_filter.filtfilt(&x)?;
                let phase = self.hilbert.phase(&filtered)?;
                Ok(trimmed(&phase).to_vec())
            })
            .collect()
    }

    pub fn inter_brain_plv(&mut self, frames: &[DyadFrame]) -> Result<f64> {
        let pa = self.channel_phases(frames, |f| &f.a)?;
        let pb = self.channel_phases(frames, |f| &f.b)?;
        let mut total = 0.0;
        for a in &pa {
            for b in &pb {
                total += plv(a, b)?;
            }
        }
        Ok(total / (CHANNELS * CHANNELS) as f64)
    }

    fn faa_of(&self, frames: &[DyadFrame], pick: fn(&DyadFrame) -> &Channels) -> Result<f64> {
        let power = |c: usize| -> Result<f64> {
            let x: Vec<f64> = frames.iter().map(|f| pick(f)[c]).collect();
            Ok(mean_square(trimmed(&self.alpha_filter.filtfilt(&x)?)))
        };
        Ok(faa_from_powers(power(self.layout.f3())?, power(self.layout.f4())?))
    }

    /// Features of one window. `t_end` is `t_start + window_s`.
    pub fn extract(&mut self, frames: &[DyadFrame]) -> Result<FeatureWindow> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Shape("feature window is empty".into()))?;
        let a: Vec<Channels> = frames.iter().map(|f| f.a).collect();
        let b: Vec<Channels> = frames.iter().map(|f| f.b).collect();
        Ok(FeatureWindow {
            t_start: first.t,
            t_end: first.t + self.cfg.window_s,
            plv: self.inter_brain_plv(frames)?,
            faa_a: self.faa_of(frames, |f| &f.a)?,
            faa_b: self.faa_of(frames, |f| &f.b)?,
            amp_a: amplitude(&a)?,
            amp_b: amplitude(&b)?,
        })
    }
}

/// Sliding-window feature stream. Window `k` covers frames
/// `[k * hop, k * hop + window)` and is emitted once its last frame arrives.
pub struct FeatureStream<S> {
    source: S,
    extractor: FeatureExtractor,
    buffer: VecDeque<DyadFrame>,
    window_len: usize,
    hop_len: usize,
    emitted: usize,
    last_t: Option<f64>,
    done: bool,
}

pub fn feature_stream<S>(source: S, layout: &ChannelLayout, cfg: &WindowConfig) -> Result<FeatureStream<S>>
where
    S: Iterator<Item = Result<DyadFrame>>,
{
    let rate = layout.sampling_rate_hz();
    cfg.validate(rate)?;
    Ok(FeatureStream {
        source,
        extractor: FeatureExtractor::new(layout, cfg)?,
        buffer: VecDeque::new(),
        window_len: cfg.window_len(rate),
        hop_len: cfg.hop_len(rate),
        emitted: 0,
        last_t: None,
        done: false,
    })
}

impl<S> FeatureStream<S> {
    /// Timestamp of the most recent frame pulled from the source.
    pub fn last_frame_t(&self) -> Option<f64> {
        self.last_t
    }
}

impl<S> Iterator for FeatureStream<S>
where
    S: Iterator<Item = Result<DyadFrame>>,
{
    type Item = Result<FeatureWindow>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        while self.buffer.len() < self.window_len {
            match self.source.next() {
                Some(Ok(frame)) => {
                    self.last_t = Some(frame.t);
                    self.buffer.push_back(frame);
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                None => {
                    self.done = true;
                    if self.emitted == 0 {
                        log::warn!(
                            "stream ended after {} frames, shorter than one {}-frame window",
                            self.buffer.len(),
                            self.window_len
                        );
                    }
                    return None;
                }
            }
        }
        let window: Vec<DyadFrame> = self.buffer.iter().copied().collect();
        let out = self.extractor.extract(&window);
        let drain = self.hop_len.min(self.buffer.len());
        self.buffer.drain(..drain);
        self.emitted += 1;
        if out.is_err() {
            self.done = true;
        }
        Some(out)
    }
}

pub const FEATURE_CSV_HEADER: &str = "t_start,t_end,plv,faa_a,faa_b,\
amp_a_1,amp_a_2,amp_a_3,amp_a_4,amp_a_5,amp_a_6,amp_a_7,amp_a_8,\
amp_b_1,amp_b_2,amp_b_3,amp_b_4,amp_b_5,amp_b_6,amp_b_7,amp_b_8";

/// Writes the feature log; values use shortest round-trip formatting.
pub fn write_features_csv<'a>(
    writer: impl Write,
    windows: impl IntoIterator<Item = &'a FeatureWindow>,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{FEATURE_CSV_HEADER}")?;
    for fw in windows {
        write!(w, "{:?},{:?},{:?},{:?},{:?}", fw.t_start, fw.t_end, fw.plv, fw.faa_a, fw.faa_b)?;
        for v in fw.amp_a.iter().chain(&fw.amp_b) {
            write!(w, ",{v:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn read_features_csv(reader: impl Read) -> Result<Vec<FeatureWindow>> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::Format { line: 1, message: e.to_string() })?
        .unwrap_or_default();
    if header.trim_end() != FEATURE_CSV_HEADER {
        return Err(Error::Format {
            line: 1,
            message: "unexpected feature log header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::Format { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .trim_end()
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Format { line: line_no, message: e.to_string() })?;
        if vals.len() != 5 + 2 * CHANNELS {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected {} fields, found {}", 5 + 2 * CHANNELS, vals.len()),
            });
        }
        let mut amp_a = [0.0; CHANNELS];
        let mut amp_b = [0.0; CHANNELS];
        amp_a.copy_from_slice(&vals[5..5 + CHANNELS]);
        amp_b.copy_from_slice(&vals[5 + CHANNELS..]);
        out.push(FeatureWindow {
            t_start: vals[0],
            t_end: vals[1],
            plv: vals[2],
            faa_a: vals[3],
            faa_b: vals[4],
            amp_a,
            amp_b,
        });
    }
    Ok(out)
}
