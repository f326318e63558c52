//! Stream status and stream command payloads.
//!
//! StreamStatus payload, 4 little-endian words (32 bytes):
//!
//! | word | bits    | field                                          |
//! |------|---------|------------------------------------------------|
//! | 0    | [7:0]   | status code                                    |
//! | 0    | [31:16] | seq (resync: confirmed next data seq)          |
//! | 1    | [63:0]  | device buffer capacity in bytes                |
//! | 2    | [63:0]  | cumulative bytes retired (played or discarded) |
//! | 3    | [63:0]  | tick (resync: first tick data is accepted at)  |
//!
//! StreamCmd payload, 2 little-endian words (16 bytes):
//!
//! | word | bits    | field                          |
//! |------|---------|--------------------------------|
//! | 0    | [7:0]   | opcode                         |
//! | 0    | [31:16] | seq (resync: next data seq)    |
//! | 1    | [63:0]  | timestamp (resync: floor tick) |
//!
//! All other bits are zero on encode and ignored on decode.

use thiserror::Error;

use crate::chdr::{ChdrPacket, CodecError, PacketType};

pub const STATUS_PAYLOAD_BYTES: usize = 32;
pub const CMD_PAYLOAD_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayloadError {
    #[error("expected a {expected:?} packet, got {got:?}")]
    WrongPacketType { expected: PacketType, got: PacketType },
    #[error("payload is {got} bytes, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("unknown status code {0}")]
    UnknownStatus(u8),
    #[error("unknown command opcode {0}")]
    UnknownOpcode(u8),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatusCode {
    Ok = 0,
    SeqError = 1,
    HaltAck = 2,
    FlushAck = 3,
    ResyncAck = 4,
}

impl StatusCode {
    pub fn from_code(code: u8) -> Result<Self, PayloadError> {
        Ok(match code {
            0 => StatusCode::Ok,
            1 => StatusCode::SeqError,
            2 => StatusCode::HaltAck,
            3 => StatusCode::FlushAck,
            4 => StatusCode::ResyncAck,
            other => return Err(PayloadError::UnknownStatus(other)),
        })
    }

    /// Whether this status answers one of the three recovery requests.
    pub fn is_recovery_ack(self) -> bool {
        matches!(self, StatusCode::HaltAck | StatusCode::FlushAck | StatusCode::ResyncAck)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamStatus {
    pub code: StatusCode,
    pub seq: u16,
    pub capacity_bytes: u64,
    pub acked_bytes: u64,
    pub tick: u64,
}

impl StreamStatus {
    pub fn to_payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(STATUS_PAYLOAD_BYTES);
        let w0 = self.code as u64 | (self.seq as u64) << 16;
        for w in [w0, self.capacity_bytes, self.acked_bytes, self.tick] {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_payload(p: &[u8]) -> Result<Self, PayloadError> {
        let w = words::<4>(p)?;
        Ok(StreamStatus {
            code: StatusCode::from_code(w[0] as u8)?,
            seq: (w[0] >> 16) as u16,
            capacity_bytes: w[1],
            acked_bytes: w[2],
            tick: w[3],
        })
    }

    pub fn to_packet(&self, seq: u16, epid: u16) -> ChdrPacket {
        ChdrPacket::new(PacketType::StreamStatus, seq, epid, None, self.to_payload())
            .expect("status packet fits")
    }

    pub fn from_packet(pkt: &ChdrPacket) -> Result<Self, PayloadError> {
        expect_type(pkt, PacketType::StreamStatus)?;
        Self::from_payload(&pkt.payload)
    }
}

#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmdOpcode {
    /// Recovery request 1: acknowledge the error and halt.
    ErrorAck = 1,
    /// Recovery request 2: drop everything buffered.
    Flush = 2,
    /// Recovery request 3: restart at a new seq and timestamp floor.
    Resync = 3,
}

impl CmdOpcode {
    pub fn from_code(code: u8) -> Result<Self, PayloadError> {
        Ok(match code {
            1 => CmdOpcode::ErrorAck,
            2 => CmdOpcode::Flush,
            3 => CmdOpcode::Resync,
            other => return Err(PayloadError::UnknownOpcode(other)),
        })
    }

    /// Status code that answers this request.
    pub fn response(self) -> StatusCode {
        match self {
            CmdOpcode::ErrorAck => StatusCode::HaltAck,
            CmdOpcode::Flush => StatusCode::FlushAck,
            CmdOpcode::Resync => StatusCode::ResyncAck,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamCmd {
    pub op: CmdOpcode,
    pub seq: u16,
    pub timestamp: u64,
}

impl StreamCmd {
    pub fn to_payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CMD_PAYLOAD_BYTES);
        out.extend_from_slice(&(self.op as u64 | (self.seq as u64) << 16).to_le_bytes());
        out.extend_from_slice(&self.timestamp.to_le_bytes());
        out
    }

    pub fn from_payload(p: &[u8]) -> Result<Self, PayloadError> {
        let w = words::<2>(p)?;
        Ok(StreamCmd {
            op: CmdOpcode::from_code(w[0] as u8)?,
            seq: (w[0] >> 16) as u16,
            timestamp: w[1],
        })
    }

    pub fn to_packet(&self, seq: u16, epid: u16) -> ChdrPacket {
        ChdrPacket::new(PacketType::StreamCmd, seq, epid, None, self.to_payload())
            .expect("command packet fits")
    }

    pub fn from_packet(pkt: &ChdrPacket) -> Result<Self, PayloadError> {
        expect_type(pkt, PacketType::StreamCmd)?;
        Self::from_payload(&pkt.payload)
    }
}

fn expect_type(pkt: &ChdrPacket, expected: PacketType) -> Result<(), PayloadError> {
    if pkt.header.pkt_type != expected {
        return Err(PayloadError::WrongPacketType { expected, got: pkt.header.pkt_type });
    }
    Ok(())
}

fn words<const N: usize>(p: &[u8]) -> Result<[u64; N], PayloadError> {
    if p.len() != N * 8 {
        return Err(PayloadError::WrongLength { expected: N * 8, got: p.len() });
    }
    let mut w = [0u64; N];
    for (i, c) in p.chunks_exact(8).enumerate() {
        w[i] = u64::from_le_bytes(c.try_into().unwrap());
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_status_packet() {
        let s = StreamStatus {
            code: StatusCode::Ok,
            seq: 0,
            capacity_bytes: 65536,
            acked_bytes: 4096,
            tick: 0x1234,
        };
        let bytes = s.to_packet(5, 3).encode().unwrap();
        let expected: Vec<u8> = vec![
            0x03, 0x00, 0x28, 0x00, 0x05, 0x00, 0x20, 0x00, // header 0x0020_0005_0028_0003
            0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, // code 0, seq 0
            0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, // capacity
            0x00, 0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, // acked
            0x34, 0x12, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, // tick
        ];
        assert_eq!(bytes, expected);
        let pkt = ChdrPacket::decode(&expected).unwrap();
        assert_eq!(StreamStatus::from_packet(&pkt).unwrap(), s);
    }

    #[test]
    fn golden_resync_ack_payload() {
        let s = StreamStatus {
            code: StatusCode::ResyncAck,
            seq: 0xBEEF,
            capacity_bytes: 1,
            acked_bytes: 2,
            tick: 3,
        };
        let p = s.to_payload();
        assert_eq!(&p[..8], &[0x04, 0x00, 0xEF, 0xBE, 0, 0, 0, 0]);
        assert_eq!(StreamStatus::from_payload(&p).unwrap(), s);
    }

    #[test]
    fn golden_cmd_packet() {
        let c = StreamCmd { op: CmdOpcode::Resync, seq: 0x0102, timestamp: 0x1000 };
        let bytes = c.to_packet(0, 1).encode().unwrap();
        let expected: Vec<u8> = vec![
            0x01, 0x00, 0x18, 0x00, 0x00, 0x00, 0x40, 0x00, // header 0x0040_0000_0018_0001
            0x03, 0x00, 0x02, 0x01, 0x00, 0x00, 0x00, 0x00, // opcode 3, seq 0x0102
            0x00, 0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, // timestamp
        ];
        assert_eq!(bytes, expected);
        let pkt = ChdrPacket::decode(&expected).unwrap();
        assert_eq!(StreamCmd::from_packet(&pkt).unwrap(), c);
    }

    #[test]
    fn rejects_malformed_payloads() {
        assert!(matches!(StreamStatus::from_payload(&[0; 24]), Err(PayloadError::WrongLength { .. })));
        let mut p = [0u8; 32];
        p[0] = 9;
        assert_eq!(StreamStatus::from_payload(&p), Err(PayloadError::UnknownStatus(9)));
        assert_eq!(StreamCmd::from_payload(&[0; 16]), Err(PayloadError::UnknownOpcode(0)));
        let status_pkt = StreamStatus {
            code: StatusCode::Ok,
            seq: 0,
            capacity_bytes: 0,
            acked_bytes: 0,
            tick: 0,
        }
        .to_packet(0, 0);
        assert!(matches!(StreamCmd::from_packet(&status_pkt), Err(PayloadError::WrongPacketType { .. })));
    }
}
