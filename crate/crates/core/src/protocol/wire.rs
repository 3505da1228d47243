//! Message types and length-prefixed framing.
//!
//! A frame is a 4-byte big-endian payload length followed by that many bytes
//! of UTF-8 JSON. Payloads are envelopes `{"type": ..., "body": ...}`.
//!
//! None of the message types has a field that can hold a key, and every
//! struct rejects unknown fields, so a key cannot ride along in a request.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::ising::{IsingProblem, SampleSet, Spins};
use crate::samplers::AnnealParams;
use crate::{Error, Result};

/// Upper bound on a single frame, 256 MiB.
pub const MAX_FRAME_LEN: u32 = 256 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    pub problem: IsingProblem,
    pub params: AnnealParams,
    /// Initial state for every read (reverse annealing), already encoded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverse_init: Option<Spins>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombineRequest {
    pub first: IsingProblem,
    pub second: IsingProblem,
    pub params: AnnealParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveResponse {
    pub sampleset: SampleSet,
    pub solver_info: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub code: u16,
    pub message: String,
}

pub mod codes {
    /// Frame or JSON could not be parsed.
    pub const MALFORMED: u16 = 400;
    /// Well-formed request the solver cannot run.
    pub const INVALID: u16 = 422;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "lowercase")]
pub enum Request {
    Solve(SolveRequest),
    Combine(CombineRequest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "lowercase")]
pub enum Response {
    Solve(SolveResponse),
    Combine(SolveResponse),
    Error(ErrorBody),
}

impl Response {
    pub fn error(code: u16, message: impl Into<String>) -> Self {
        Response::Error(ErrorBody { code, message: message.into() })
    }
}

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> Result<()> {
    let len = u32::try_from(payload.len())
        .ok()
        .filter(|&n| n <= MAX_FRAME_LEN)
        .ok_or_else(|| Error::Protocol(format!("frame of {} bytes exceeds limit", payload.len())))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame. Returns `None` on a clean end of stream before the
/// length prefix.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(len);
    if len > MAX_FRAME_LEN {
        return Err(Error::Protocol(format!("frame of {len} bytes exceeds limit")));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)?;
    Ok(Some(payload))
}
