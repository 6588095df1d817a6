//! Fusing two single-participant streams into dyad frames.
//!
//! Samples are paired when their timestamps differ by at most the tolerance.
//! Anything that cannot be paired is dropped and counted, never interpolated.

use std::iter::Peekable;

use super::{Channels, DyadFrame};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticipantSample {
    pub t: f64,
    pub values: Channels,
}

pub struct Aligned<A: Iterator, B: Iterator> {
    a: Peekable<A>,
    b: Peekable<B>,
    tolerance_s: f64,
    dropped_a: usize,
    dropped_b: usize,
}

/// Pairs two streams recorded at the same sampling rate.
pub fn align<A, B>(
    src_a: A,
    rate_a_hz: f64,
    src_b: B,
    rate_b_hz: f64,
    tolerance_s: f64,
) -> Result<Aligned<A::IntoIter, B::IntoIter>>
where
    A: IntoIterator<Item = ParticipantSample>,
    B: IntoIterator<Item = ParticipantSample>,
{
    if (rate_a_hz - rate_b_hz).abs() > 1e-9 * rate_a_hz.abs().max(rate_b_hz.abs()) {
        return Err(Error::config(format!(
            "sampling rates differ: {rate_a_hz} Hz vs {rate_b_hz} Hz"
        )));
    }
    if !(tolerance_s.is_finite() && tolerance_s >= 0.0) {
        return Err(Error::config("alignment tolerance must be non-negative"));
    }
    Ok(Aligned {
        a: src_a.into_iter().peekable(),
        b: src_b.into_iter().peekable(),
        tolerance_s,
        dropped_a: 0,
        dropped_b: 0,
    })
}

impl<A, B> Aligned<A, B>
where
    A: Iterator<Item = ParticipantSample>,
    B: Iterator<Item = ParticipantSample>,
{
    /// Samples dropped so far from (A, B). Trailing drops are counted once
    /// the aligned stream has been exhausted.
    pub fn dropped(&self) -> (usize, usize) {
        (self.dropped_a, self.dropped_b)
    }
}

impl<A, B> Iterator for Aligned<A, B>
where
    A: Iterator<Item = ParticipantSample>,
    B: Iterator<Item = ParticipantSample>,
{
    type Item = DyadFrame;

    fn next(&mut self) -> Option<DyadFrame> {
        loop {
            match (self.a.peek(), self.b.peek()) {
                (Some(sa), Some(sb)) => {
                    let (ta, tb) = (sa.t, sb.t);
                    if (ta - tb).abs() <= self.tolerance_s {
                        let sa = self.a.next()?;
                        let sb = self.b.next()?;
                        return Some(DyadFrame {
                            t: sa.t,
                            a: sa.values,
                            b: sb.values,
                        });
                    } else if ta < tb {
                        self.a.next();
                        self.dropped_a += 1;
                    } else {
                        self.b.next();
                        self.dropped_b += 1;
                    }
                }
                (Some(_), None) => {
                    self.dropped_a += self.a.by_ref().count();
                    return None;
                }
                (None, Some(_)) => {
                    self.dropped_b += self.b.by_ref().count();
                    return None;
                }
                (None, None) => return None,
            }
        }
    }
}
