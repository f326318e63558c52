//! CHDR packet codec.
//!
//! Wire layout: one little-endian 64-bit header word, an optional
//! little-endian 64-bit timestamp (only for `DataWithTs`), optional metadata
//! words (skipped on decode, never generated) and the payload. Sample
//! payloads are sc16.

mod capture;
mod header;
mod packet;
pub mod sc16;

use thiserror::Error;

pub use capture::{CaptureReader, CaptureWriter};
pub use header::{
    decode_header, encode_header, ChdrHeader, PacketType, HEADER_BYTES, NUM_MDATA_MAX,
    TIMESTAMP_BYTES, VC_MAX,
};
pub use packet::{data_packet, data_packet_len, encode_data_packet, ChdrPacket, SampleBlock};
pub use sc16::{samples_to_wire, wire_to_samples};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("field {field} = {value} does not fit in {bits} bits")]
    FieldOverflow { field: &'static str, value: u64, bits: u32 },
    #[error("invalid packet type code {0:#05b}")]
    InvalidPktType(u8),
    #[error("sample payload of {0} bytes is not a whole number of sc16 samples")]
    OddLength(usize),
    #[error("buffer truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("header length {header} does not match buffer length {actual}")]
    LengthMismatch { header: usize, actual: usize },
    #[error("header length {length} below minimum {min}")]
    LengthTooSmall { length: usize, min: usize },
    #[error("timestamp presence does not match packet type {0:?}")]
    TimestampMismatch(PacketType),
    #[error("metadata words are not generated")]
    MetadataUnsupported,
    #[error("empty sample block")]
    EmptyBlock,
    #[error("{0:?} packet carries no samples")]
    NotData(PacketType),
}
