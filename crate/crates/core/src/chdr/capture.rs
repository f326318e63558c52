//! Offline captures: CHDR packets stored back to back, each delimited by its
//! own `length` field.

use super::header::{decode_header, HEADER_BYTES};
use super::packet::ChdrPacket;
use super::CodecError;

/// Iterates over the packets of a capture buffer.
///
/// Stops after the first error; a trailing partial packet yields
/// [`CodecError::Truncated`].
pub struct CaptureReader<'a> {
    buf: &'a [u8],
    offset: usize,
    failed: bool,
}

impl<'a> CaptureReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        CaptureReader { buf, offset: 0, failed: false }
    }

    /// Byte offset of the next packet.
    pub fn offset(&self) -> usize {
        self.offset
    }
}

impl Iterator for CaptureReader<'_> {
    type Item = Result<ChdrPacket, CodecError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.offset == self.buf.len() {
            return None;
        }
        let rest = &self.buf[self.offset..];
        let result = (|| {
            if rest.len() < HEADER_BYTES {
                return Err(CodecError::Truncated { needed: HEADER_BYTES, available: rest.len() });
            }
            let header = decode_header(u64::from_le_bytes(rest[..8].try_into().unwrap()))?;
            let len = header.length as usize;
            if len < HEADER_BYTES {
                return Err(CodecError::LengthTooSmall { length: len, min: HEADER_BYTES });
            }
            if rest.len() < len {
                return Err(CodecError::Truncated { needed: len, available: rest.len() });
            }
            let pkt = ChdrPacket::decode(&rest[..len])?;
            Ok((pkt, len))
        })();
        match result {
            Ok((pkt, len)) => {
                self.offset += len;
                Some(Ok(pkt))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Appends packets to an in-memory capture.
#[derive(Debug, Default, Clone)]
pub struct CaptureWriter {
    bytes: Vec<u8>,
    packets: usize,
}

impl CaptureWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records an already encoded packet.
    pub fn record(&mut self, wire: &[u8]) {
        self.bytes.extend_from_slice(wire);
        self.packets += 1;
    }

    pub fn packets(&self) -> usize {
        self.packets
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chdr::{encode_data_packet, SampleBlock};

    #[test]
    fn reads_back_to_back_packets() {
        let mut w = CaptureWriter::new();
        for seq in 0..3u16 {
            w.record(&encode_data_packet(&SampleBlock::zeros(8, seq as u64 * 8), seq, 1, true).unwrap());
        }
        let pkts: Vec<_> = CaptureReader::new(w.as_bytes()).collect::<Result<_, _>>().unwrap();
        assert_eq!(pkts.len(), 3);
        assert_eq!(pkts[2].header.seq_num, 2);
        assert_eq!(pkts[2].timestamp, Some(16));
    }

    #[test]
    fn truncated_capture_reports_error() {
        let bytes = encode_data_packet(&SampleBlock::zeros(8, 0), 0, 1, true).unwrap();
        let mut cap = bytes.clone();
        cap.extend_from_slice(&bytes[..20]);
        let items: Vec<_> = CaptureReader::new(&cap).collect();
        assert_eq!(items.len(), 2);
        assert!(items[0].is_ok());
        assert!(matches!(items[1], Err(CodecError::Truncated { .. })));
    }
}
