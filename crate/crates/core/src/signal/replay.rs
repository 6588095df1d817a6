//! CSV replay files.
//!
//! Header: `t,A_<ch1>,...,A_<ch8>,B_<ch1>,...,B_<ch8>`, one row per frame.
//! Timestamps carry at least six decimals; channel values are written in
//! shortest round-trip form so a written file re-opens to identical frames.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ChannelLayout, Channels, DyadFrame, FrameSource, CHANNELS, DEFAULT_SAMPLING_RATE_HZ};
use crate::error::{Error, Result};

/// Relative tolerance on the sample period when checking a file's timestamp grid.
const PERIOD_TOLERANCE: f64 = 1e-3;

/// A fully loaded replay file.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub layout: ChannelLayout,
    pub frames: Vec<DyadFrame>,
}

impl Replay {
    /// Total duration covered by the frames, `n / rate`.
    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.layout.sampling_rate_hz()
    }

    pub fn into_stream(self) -> ReplayStream {
        ReplayStream {
            layout: self.layout,
            frames: self.frames.into_iter(),
        }
    }
}

pub struct ReplayStream {
    layout: ChannelLayout,
    frames: std::vec::IntoIter<DyadFrame>,
}

impl ReplayStream {
    pub fn from_frames(layout: ChannelLayout, frames: Vec<DyadFrame>) -> Self {
        Self {
            layout,
            frames: frames.into_iter(),
        }
    }
}

impl Iterator for ReplayStream {
    type Item = Result<DyadFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.frames.next().map(Ok)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.frames.size_hint()
    }
}

impl FrameSource for ReplayStream {
    fn layout(&self) -> &ChannelLayout {
        &self.layout
    }
}

/// Opens and validates a replay file. The sampling rate is taken from the
/// timestamp step of the first two rows; single-row files get the default rate.
pub fn open_replay(path: impl AsRef<Path>) -> Result<Replay> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_replay(file)
}

pub fn read_replay(reader: impl Read) -> Result<Replay> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::Format {
            line: 1,
            message: e.to_string(),
        })?,
        None => {
            return Err(Error::Format {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    let labels = parse_header(header.trim_end_matches('\r'))?;

    let mut frames: Vec<DyadFrame> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::Format {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let frame = parse_row(line, line_no, &labels)?;
        if let Some(prev) = frames.last() {
            if frame.t <= prev.t {
                return Err(Error::Integrity(format!(
                    "timestamps not strictly increasing at line {line_no} ({} after {})",
                    frame.t, prev.t
                )));
            }
        }
        frames.push(frame);
    }

    let rate = match frames.as_slice() {
        [first, second, ..] => 1.0 / (second.t - first.t),
        _ => DEFAULT_SAMPLING_RATE_HZ,
    };
    let period = 1.0 / rate;
    for (i, pair) in frames.windows(2).enumerate() {
        let step = pair[1].t - pair[0].t;
        if (step - period).abs() > PERIOD_TOLERANCE * period {
            return Err(Error::Integrity(format!(
                "irregular sample step {step} at line {} (expected {period})",
                i + 3
            )));
        }
    }
    // Snap the inferred rate when the file was written at an integer rate.
    let rate = if (rate - rate.round()).abs() < 1e-6 * rate {
        rate.round()
    } else {
        rate
    };
    let layout = ChannelLayout::new(labels, rate)?;
    Ok(Replay { layout, frames })
}

fn parse_header(header: &str) -> Result<Vec<String>> {
    let fail = |message: String| Error::Format { line: 1, message };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() != 1 + 2 * CHANNELS {
        return Err(fail(format!(
            "expected {} columns, found {}",
            1 + 2 * CHANNELS,
            cols.len()
        )));
    }
    if cols[0] != "t" {
        return Err(fail(format!("first column must be `t`, found `{}`", cols[0])));
    }
    let mut labels = Vec::with_capacity(CHANNELS);
    for (i, col) in cols[1..=CHANNELS].iter().enumerate() {
        let label = col
            .strip_prefix("A_")
            .ok_or_else(|| fail(format!("column {} must start with `A_`, found `{col}`", i + 2)))?;
        labels.push(label.to_string());
    }
    for (i, col) in cols[CHANNELS + 1..].iter().enumerate() {
        let expected = format!("B_{}", labels[i]);
        if *col != expected {
            return Err(fail(format!(
                "column {} must be `{expected}`, found `{col}`",
                i + CHANNELS + 2
            )));
        }
    }
    Ok(labels)
}

fn parse_row(line: &str, line_no: usize, labels: &[String]) -> Result<DyadFrame> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 1 + 2 * CHANNELS {
        return Err(Error::Format {
            line: line_no,
            message: format!("expected {} fields, found {}", 1 + 2 * CHANNELS, fields.len()),
        });
    }
    let parse = |s: &str, col: &str| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|_| Error::Format {
            line: line_no,
            message: format!("column {col}: cannot parse `{s}` as a number"),
        })
    };
    let t = parse(fields[0], "t")?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Integrity(format!("row at line {line_no}: invalid timestamp {t}")));
    }
    let mut a: Channels = [0.0; CHANNELS];
    let mut b: Channels = [0.0; CHANNELS];
    for c in 0..CHANNELS {
        for (prefix, dst, field) in [("A", &mut a, fields[1 + c]), ("B", &mut b, fields[1 + CHANNELS + c])] {
            let col = format!("{prefix}_{}", labels[c]);
            let v = parse(field, &col)?;
            if !v.is_finite() {
                return Err(Error::Integrity(format!(
                    "non-finite value in channel {col} at line {line_no}"
                )));
            }
            dst[c] = v;
        }
    }
    Ok(DyadFrame { t, a, b })
}

/// Writes frames in replay format. The file re-opens to identical frames.
pub fn write_replay<'a>(
    writer: impl Write,
    layout: &ChannelLayout,
    frames: impl IntoIterator<Item = &'a DyadFrame>,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    write!(w, "t")?;
    for p in ["A", "B"] {
        for name in layout.names() {
            write!(w, ",{p}_{name}")?;
        }
    }
    writeln!(w)?;
    for frame in frames {
        write!(w, "{}", format_timestamp(frame.t))?;
        for v in frame.a.iter().chain(frame.b.iter()) {
            write!(w, ",{v:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Six decimals when that round-trips exactly, otherwise the shortest exact form.
pub(crate) fn format_timestamp(t: f64) -> String {
    let fixed = format!("{t:.6}");
    if fixed.parse::<f64>().ok() == Some(t) {
        return fixed;
    }
    let shortest = format!("{t:?}");
    match shortest.split_once('.') {
        Some((_, frac)) if frac.len() >= 6 || frac.contains('e') => shortest,
        _ => format!("{t:.9}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        let mut h = String::from("t");
        for p in ["A", "B"] {
            for n in super::super::DEFAULT_CHANNEL_NAMES {
                h.push_str(&format!(",{p}_{n}"));
            }
        }
        h
    }

    fn row(t: &str, v: f64) -> String {
        let mut r = t.to_string();
        for _ in 0..16 {
            r.push_str(&format!(",{v}"));
        }
        r
    }

    #[test]
    fn three_rows_at_250_hz() {
        let csv = format!(
            "{}\n{}\n{}\n{}\n",
            header(),
            row("0.000000", 1.0),
            row("0.004000", 2.0),
            row("0.008000", 3.0)
        );
        let replay = read_replay(csv.as_bytes()).unwrap();
        assert_eq!(replay.layout.sampling_rate_hz(), 250.0);
        let ts: Vec<f64> = replay.frames.iter().map(|f| f.t).collect();
        assert_eq!(ts, vec![0.0, 0.004, 0.008]);
        assert_eq!(replay.frames[2].b[7], 3.0);
        assert!((replay.duration_s() - 0.012).abs() < 1e-12);
    }

    #[test]
    fn nan_is_an_integrity_error_naming_channel_and_row() {
        let mut fields: Vec<String> = row("0.004000", 1.0).split(',').map(String::from).collect();
        fields[3] = "NaN".into();
        let bad = fields.join(",");
        let csv = format!("{}\n{}\n{}\n", header(), row("0.000000", 1.0), bad);
        let err = read_replay(csv.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Integrity(_)), "{msg}");
        assert!(msg.contains("A_F4"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn malformed_row_names_line() {
        let csv = format!("{}\n{}\n0.004,1,2\n", header(), row("0.000000", 1.0));
        match read_replay(csv.as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let csv = format!("{}\n{}\n", header(), row("0.0", 1.0).replace(",1", ",x"));
        assert!(matches!(read_replay(csv.as_bytes()), Err(Error::Format { line: 2, .. })));
    }

    #[test]
    fn malformed_header() {
        let csv = "time,foo\n";
        assert!(matches!(read_replay(csv.as_bytes()), Err(Error::Format { line: 1, .. })));
        let swapped = header().replace("B_Fz", "B_Qz");
        assert!(matches!(
            read_replay(format!("{swapped}\n").as_bytes()),
            Err(Error::Format { line: 1, .. })
        ));
    }

    #[test]
    fn non_monotone_timestamps() {
        let csv = format!(
            "{}\n{}\n{}\n{}\n",
            header(),
            row("0.000000", 1.0),
            row("0.004000", 1.0),
            row("0.004000", 1.0)
        );
        assert!(matches!(read_replay(csv.as_bytes()), Err(Error::Integrity(_))));
    }

    #[test]
    fn timestamp_format_has_six_decimals() {
        assert_eq!(format_timestamp(0.0), "0.000000");
        assert_eq!(format_timestamp(0.004), "0.004000");
        let odd = 1.0 / 256.0;
        assert_eq!(format_timestamp(odd).parse::<f64>().unwrap(), odd);
        let tiny = 1.0 / 3.0;
        assert_eq!(format_timestamp(tiny).parse::<f64>().unwrap(), tiny);
    }
}
