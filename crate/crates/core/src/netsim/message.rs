//! Wire messages and their canonical byte layout.
//!
//! Layout (all numerics little-endian, lists length-prefixed with `u32`):
//!
//! ```text
//! u8  schema tag (SCHEMA_VERSION)
//! u8  kind (0 = Beacon, 1 = Digest, 2 = Flood)
//! u32 sender
//! u32 origin
//! u64 origin_iteration
//! u32 hop_count
//! payload:
//!   Beacon: vec position, f64 fiedler, u64 pi_iteration
//!   Digest: u32 count, count × (u32 id, vec offset)
//!   Flood:  u64 round_id, f64 x, f64 x2, f64 xlx
//! vec := u32 len, len × f64
//! ```

use crate::estimator::FloodPayload;
use crate::{Error, Result, RobotId, Vector};

pub const SCHEMA_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    Beacon,
    Digest,
    Flood,
}

impl MessageKind {
    pub fn tag(self) -> u8 {
        match self {
            MessageKind::Beacon => 0,
            MessageKind::Digest => 1,
            MessageKind::Flood => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Beacon => "beacon",
            MessageKind::Digest => "digest",
            MessageKind::Flood => "flood",
        }
    }
}

/// One entry of a 2-hop digest: a neighbor of the sender and its offset
/// from the sender.
#[derive(Clone, Debug, PartialEq)]
pub struct DigestEntry {
    pub id: RobotId,
    pub offset: Vector,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// Sender's position and current Fiedler-vector entry.
    Beacon {
        position: Vector,
        fiedler: f64,
        pi_iteration: u64,
    },
    /// Sender's 1-hop list.
    Digest { entries: Vec<DigestEntry> },
    /// Mean-correction sums of one originator, relayed hop by hop.
    Flood(FloodPayload),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub sender: RobotId,
    pub origin: RobotId,
    pub origin_iteration: u64,
    pub hop_count: u32,
    pub payload: Payload,
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self.payload {
            Payload::Beacon { .. } => MessageKind::Beacon,
            Payload::Digest { .. } => MessageKind::Digest,
            Payload::Flood(_) => MessageKind::Flood,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        out.push(SCHEMA_VERSION);
        out.push(self.kind().tag());
        put_u32(&mut out, self.sender as u32);
        put_u32(&mut out, self.origin as u32);
        out.extend_from_slice(&self.origin_iteration.to_le_bytes());
        put_u32(&mut out, self.hop_count);
        match &self.payload {
            Payload::Beacon {
                position,
                fiedler,
                pi_iteration,
            } => {
                put_vec(&mut out, position);
                out.extend_from_slice(&fiedler.to_le_bytes());
                out.extend_from_slice(&pi_iteration.to_le_bytes());
            }
            Payload::Digest { entries } => {
                put_u32(&mut out, entries.len() as u32);
                for e in entries {
                    put_u32(&mut out, e.id as u32);
                    put_vec(&mut out, &e.offset);
                }
            }
            Payload::Flood(f) => {
                out.extend_from_slice(&f.round_id.to_le_bytes());
                out.extend_from_slice(&f.x.to_le_bytes());
                out.extend_from_slice(&f.x2.to_le_bytes());
                out.extend_from_slice(&f.xlx.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let schema = r.u8()?;
        if schema != SCHEMA_VERSION {
            return Err(Error::Decode(format!("unsupported schema tag {schema}")));
        }
        let kind = r.u8()?;
        let sender = r.u32()? as RobotId;
        let origin = r.u32()? as RobotId;
        let origin_iteration = r.u64()?;
        let hop_count = r.u32()?;
        let payload = match kind {
            0 => Payload::Beacon {
                position: r.vec()?,
                fiedler: r.f64()?,
                pi_iteration: r.u64()?,
            },
            1 => {
                let count = r.u32()? as usize;
                let mut entries = Vec::with_capacity(count.min(1024));
                for _ in 0..count {
                    entries.push(DigestEntry {
                        id: r.u32()? as RobotId,
                        offset: r.vec()?,
                    });
                }
                Payload::Digest { entries }
            }
            2 => Payload::Flood(FloodPayload {
                round_id: r.u64()?,
                x: r.f64()?,
                x2: r.f64()?,
                xlx: r.f64()?,
            }),
            other => return Err(Error::Decode(format!("unknown kind tag {other}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::Decode(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Message {
            sender,
            origin,
            origin_iteration,
            hop_count,
            payload,
        })
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_vec(out: &mut Vec<u8>, v: &Vector) {
    put_u32(out, v.len() as u32);
    for c in v.iter() {
        out.extend_from_slice(&c.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Decode(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn vec(&mut self) -> Result<Vector> {
        let len = self.u32()? as usize;
        if len > 16 {
            return Err(Error::Decode(format!("vector length {len} too large")));
        }
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push(self.f64()?);
        }
        Ok(Vector::from_vec(v))
    }
}
