//! OSC 1.0 encoding and UDP delivery of note events.

use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};

use super::mapping::MusicEvent;
use crate::error::{Error, Result};

pub const NOTE_ADDRESS: &str = "/brainibeats/note";
pub const DEFAULT_OSC_TARGET: &str = "127.0.0.1:4560";

#[derive(Debug, Clone, PartialEq)]
pub enum OscArg {
    Int(i32),
    Float(f32),
    Str(String),
}

impl OscArg {
    fn tag(&self) -> char {
        match self {
            OscArg::Int(_) => 'i',
            OscArg::Float(_) => 'f',
            OscArg::Str(_) => 's',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscMessage {
    pub address: String,
    pub args: Vec<OscArg>,
}

/// Null-terminated, zero-padded to a multiple of four bytes.
fn push_padded_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(s.as_bytes());
    let pad = 4 - s.len() % 4;
    buf.extend(std::iter::repeat_n(0u8, pad));
}

impl OscMessage {
    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(64);
        push_padded_str(&mut buf, &self.address);
        let tags: String = std::iter::once(',').chain(self.args.iter().map(OscArg::tag)).collect();
        push_padded_str(&mut buf, &tags);
        for arg in &self.args {
            match arg {
                OscArg::Int(v) => buf.extend_from_slice(&v.to_be_bytes()),
                OscArg::Float(v) => buf.extend_from_slice(&v.to_be_bytes()),
                OscArg::Str(s) => push_padded_str(&mut buf, s),
            }
        }
        buf
    }
}

/// `/brainibeats/note ,iiifi pitch velocity drone_note onset mode`.
pub fn note_message(event: &MusicEvent, drone_note: u8) -> OscMessage {
    OscMessage {
        address: NOTE_ADDRESS.to_string(),
        args: vec![
            OscArg::Int(event.pitch as i32),
            OscArg::Int(event.velocity as i32),
            OscArg::Int(drone_note as i32),
            OscArg::Float(event.onset_s as f32),
            OscArg::Int(event.mode.code()),
        ],
    }
}

pub fn encode_osc(event: &MusicEvent, drone_note: u8) -> Vec<u8> {
    note_message(event, drone_note).encode()
}

/// Consumer of note events. Delivery is best-effort; callers log failures
/// and carry on.
pub trait EventSink {
    fn deliver(&mut self, event: &MusicEvent, drone_note: u8) -> std::io::Result<()>;
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn deliver(&mut self, _event: &MusicEvent, _drone_note: u8) -> std::io::Result<()> {
        Ok(())
    }
}

impl EventSink for Vec<(MusicEvent, u8)> {
    fn deliver(&mut self, event: &MusicEvent, drone_note: u8) -> std::io::Result<()> {
        self.push((*event, drone_note));
        Ok(())
    }
}

/// Sends each event as one OSC datagram.
pub struct OscSender {
    socket: UdpSocket,
    target: SocketAddr,
}

impl OscSender {
    pub fn connect(target: impl ToSocketAddrs + std::fmt::Debug) -> Result<Self> {
        let label = format!("{target:?}");
        let target = target
            .to_socket_addrs()
            .map_err(|e| Error::io(&label, e))?
            .next()
            .ok_or_else(|| Error::config(format!("no address for {label}")))?;
        let bind: SocketAddr = if target.is_ipv4() {
            "0.0.0.0:0".parse().expect("literal address")
        } else {
            "[::]:0".parse().expect("literal address")
        };
        let socket = UdpSocket::bind(bind).map_err(|e| Error::io("udp socket", e))?;
        Ok(Self { socket, target })
    }

    pub fn target(&self) -> SocketAddr {
        self.target
    }
}

impl EventSink for OscSender {
    fn deliver(&mut self, event: &MusicEvent, drone_note: u8) -> std::io::Result<()> {
        self.socket
            .send_to(&encode_osc(event, drone_note), self.target)
            .map(|_| ())
    }
}
