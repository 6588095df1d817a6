use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Major,
    Minor,
}

impl Mode {
    /// Pitch-class offsets from the root. Minor is the natural minor.
    pub fn degrees(self) -> &'static [u8; 7] {
        match self {
            Mode::Major => &[0, 2, 4, 5, 7, 9, 11],
            Mode::Minor => &[0, 2, 3, 5, 7, 8, 10],
        }
    }

    /// Wire code used in OSC messages.
    pub fn code(self) -> i32 {
        match self {
            Mode::Major => 0,
            Mode::Minor => 1,
        }
    }
}

/// Non-negative asymmetry maps to major, negative to minor.
pub fn select_mode(faa: f64) -> Mode {
    if faa >= 0.0 {
        Mode::Major
    } else {
        Mode::Minor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    pub root: u8,
    pub mode: Mode,
}

impl Scale {
    pub fn new(root: u8, mode: Mode) -> Self {
        Self { root, mode }
    }

    pub fn degrees(&self) -> &'static [u8; 7] {
        self.mode.degrees()
    }

    /// True when `note` is a scale member in any octave.
    pub fn contains(&self, note: u8) -> bool {
        let pc = (note as i32 - self.root as i32).rem_euclid(12) as u8;
        self.degrees().contains(&pc)
    }
}

/// Nearest scale member to `raw_pitch` within MIDI 0..=127; ties go to the lower note.
pub fn quantize_pitch(raw_pitch: f64, scale: &Scale) -> u8 {
    let raw = raw_pitch.clamp(0.0, 127.0);
    let below = (0..=raw.floor() as u8).rev().find(|&n| scale.contains(n));
    let above = (raw.ceil() as u8..=127).find(|&n| scale.contains(n));
    match (below, above) {
        (Some(lo), Some(hi)) => {
            if raw - lo as f64 <= hi as f64 - raw {
                lo
            } else {
                hi
            }
        }
        (Some(lo), None) => lo,
        (None, Some(hi)) => hi,
        (None, None) => unreachable!("every scale has members in 0..=127"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C_MAJOR: Scale = Scale {
        root: 60,
        mode: Mode::Major,
    };

    /// Exhaustive nearest-member search over every scale note in 0..=127.
    fn oracle(raw: f64, scale: &Scale) -> u8 {
        let mut best: Option<(f64, u8)> = None;
        for n in 0..=127u8 {
            if !scale.contains(n) {
                continue;
            }
            let d = (n as f64 - raw).abs();
            match best {
                Some((bd, _)) if d >= bd => {}
                _ => best = Some((d, n)),
            }
        }
        best.unwrap().1
    }

    #[test]
    fn mode_selection() {
        assert_eq!(select_mode(0.8), Mode::Major);
        assert_eq!(select_mode(-0.3), Mode::Minor);
        assert_eq!(select_mode(0.0), Mode::Major);
        assert_eq!(select_mode(-0.0), Mode::Major);
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_pitch(60.0, &C_MAJOR), 60);
        assert_eq!(quantize_pitch(61.0, &C_MAJOR), 60);
        assert_eq!(quantize_pitch(61.4, &C_MAJOR), 62);
        assert_eq!(oracle(61.4, &C_MAJOR), 62);
    }

    #[test]
    fn quantize_matches_exhaustive_oracle() {
        for root in [0u8, 57, 60, 66, 127] {
            for mode in [Mode::Major, Mode::Minor] {
                let scale = Scale::new(root, mode);
                for i in 0..=1270 {
                    let raw = i as f64 / 10.0;
                    assert_eq!(quantize_pitch(raw, &scale), oracle(raw, &scale), "{raw} on {scale:?}");
                }
            }
        }
    }

    #[test]
    fn scale_membership() {
        let a_minor = Scale::new(57, Mode::Minor);
        for n in [57, 59, 60, 62, 64, 65, 67, 69, 45] {
            assert!(a_minor.contains(n), "{n}");
        }
        assert!(!a_minor.contains(58));
        assert!(!C_MAJOR.contains(61));
    }
}
