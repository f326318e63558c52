use num_complex::Complex64;

use super::header::{decode_header, encode_header, ChdrHeader, PacketType, HEADER_BYTES, TIMESTAMP_BYTES};
use super::sc16::{self, BYTES_PER_SAMPLE};
use super::CodecError;

/// A block of baseband samples anchored at an absolute sample tick.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    pub samples: Vec<Complex64>,
    pub start_tick: u64,
}

impl SampleBlock {
    pub fn new(samples: Vec<Complex64>, start_tick: u64) -> Self {
        SampleBlock { samples, start_tick }
    }

    pub fn zeros(len: usize, start_tick: u64) -> Self {
        SampleBlock { samples: vec![Complex64::new(0.0, 0.0); len], start_tick }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// First tick after the block.
    pub fn end_tick(&self) -> u64 {
        self.start_tick + self.samples.len() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChdrPacket {
    pub header: ChdrHeader,
    pub timestamp: Option<u64>,
    pub payload: Vec<u8>,
}

impl ChdrPacket {
    /// Builds a packet and fills in `header.length`. Metadata is never generated.
    pub fn new(
        pkt_type: PacketType,
        seq_num: u16,
        dst_epid: u16,
        timestamp: Option<u64>,
        payload: Vec<u8>,
    ) -> Result<Self, CodecError> {
        if timestamp.is_some() != pkt_type.has_timestamp() {
            return Err(CodecError::TimestampMismatch(pkt_type));
        }
        let length = wire_length(timestamp.is_some(), payload.len())?;
        Ok(ChdrPacket {
            header: ChdrHeader { pkt_type, seq_num, dst_epid, length, ..Default::default() },
            timestamp,
            payload,
        })
    }

    pub fn with_eob(mut self, eob: bool) -> Self {
        self.header.eob = eob;
        self
    }

    pub fn pkt_type(&self) -> PacketType {
        self.header.pkt_type
    }

    pub fn wire_len(&self) -> usize {
        self.header.length as usize
    }

    pub fn encode(&self) -> Result<Vec<u8>, CodecError> {
        let mut out = Vec::with_capacity(self.header.length as usize);
        self.encode_into(&mut out)?;
        Ok(out)
    }

    /// Appends the wire form to `out`.
    pub fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        if self.timestamp.is_some() != self.header.pkt_type.has_timestamp() {
            return Err(CodecError::TimestampMismatch(self.header.pkt_type));
        }
        if self.header.num_mdata != 0 {
            return Err(CodecError::MetadataUnsupported);
        }
        let expected = wire_length(self.timestamp.is_some(), self.payload.len())?;
        if expected != self.header.length {
            return Err(CodecError::LengthMismatch {
                header: self.header.length as usize,
                actual: expected as usize,
            });
        }
        out.extend_from_slice(&encode_header(&self.header)?.to_le_bytes());
        if let Some(ts) = self.timestamp {
            out.extend_from_slice(&ts.to_le_bytes());
        }
        out.extend_from_slice(&self.payload);
        Ok(())
    }

    /// Parses exactly one packet; `buf` must be exactly `header.length` bytes.
    ///
    /// Metadata words are skipped. The returned header describes the packet as
    /// this codec would re-emit it (`num_mdata` = 0, `length` recomputed).
    pub fn decode(buf: &[u8]) -> Result<Self, CodecError> {
        let mut header = decode_header(read_u64(buf, 0)?)?;
        let length = header.length as usize;
        if length != buf.len() {
            return Err(CodecError::LengthMismatch { header: length, actual: buf.len() });
        }
        if length < header.min_length() {
            return Err(CodecError::LengthTooSmall { length, min: header.min_length() });
        }
        let mut offset = HEADER_BYTES;
        let timestamp = if header.pkt_type.has_timestamp() {
            let ts = read_u64(buf, offset)?;
            offset += TIMESTAMP_BYTES;
            Some(ts)
        } else {
            None
        };
        offset += 8 * header.num_mdata as usize;
        let payload = buf[offset..].to_vec();
        if header.num_mdata != 0 {
            header.num_mdata = 0;
            header.length = wire_length(timestamp.is_some(), payload.len())?;
        }
        Ok(ChdrPacket { header, timestamp, payload })
    }

    /// Interprets the payload of a data packet as sc16 samples.
    pub fn to_block(&self) -> Result<SampleBlock, CodecError> {
        if !self.header.pkt_type.is_data() {
            return Err(CodecError::NotData(self.header.pkt_type));
        }
        Ok(SampleBlock {
            samples: sc16::wire_to_samples(&self.payload)?,
            start_tick: self.timestamp.unwrap_or(0),
        })
    }
}

fn wire_length(with_ts: bool, payload: usize) -> Result<u16, CodecError> {
    let total = HEADER_BYTES + if with_ts { TIMESTAMP_BYTES } else { 0 } + payload;
    u16::try_from(total).map_err(|_| CodecError::FieldOverflow {
        field: "length",
        value: total as u64,
        bits: 16,
    })
}

fn read_u64(buf: &[u8], offset: usize) -> Result<u64, CodecError> {
    buf.get(offset..offset + 8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
        .ok_or(CodecError::Truncated { needed: offset + 8, available: buf.len() })
}

/// Total wire length of a data packet carrying `samples` samples.
pub fn data_packet_len(samples: usize, with_ts: bool) -> usize {
    HEADER_BYTES + if with_ts { TIMESTAMP_BYTES } else { 0 } + samples * BYTES_PER_SAMPLE
}

/// Wraps a sample block in a data packet.
pub fn data_packet(
    block: &SampleBlock,
    seq: u16,
    epid: u16,
    with_ts: bool,
) -> Result<ChdrPacket, CodecError> {
    if block.is_empty() {
        return Err(CodecError::EmptyBlock);
    }
    let (pkt_type, ts) = if with_ts {
        (PacketType::DataWithTs, Some(block.start_tick))
    } else {
        (PacketType::DataNoTs, None)
    };
    // Check the length before quantizing a payload that cannot be sent.
    wire_length(with_ts, block.len() * BYTES_PER_SAMPLE)?;
    ChdrPacket::new(pkt_type, seq, epid, ts, sc16::samples_to_wire(&block.samples))
}

pub fn encode_data_packet(
    block: &SampleBlock,
    seq: u16,
    epid: u16,
    with_ts: bool,
) -> Result<Vec<u8>, CodecError> {
    data_packet(block, seq, epid, with_ts)?.encode()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spp_512_with_timestamp_is_2064_bytes() {
        let block = SampleBlock::zeros(512, 1000);
        let bytes = encode_data_packet(&block, 0, 0, true).unwrap();
        assert_eq!(bytes.len(), 2064);
        let pkt = ChdrPacket::decode(&bytes).unwrap();
        assert_eq!(pkt.header.length, 2064);
        assert_eq!(pkt.timestamp, Some(1000));
    }

    #[test]
    fn single_zero_sample_without_timestamp() {
        let bytes = encode_data_packet(&SampleBlock::zeros(1, 0), 0, 0, false).unwrap();
        assert_eq!(bytes.len(), 12);
        assert_eq!(&bytes[8..], &[0, 0, 0, 0]);
        let pkt = ChdrPacket::decode(&bytes).unwrap();
        assert_eq!(pkt.header.pkt_type, PacketType::DataNoTs);
        assert_eq!(pkt.header.length, 12);
    }

    #[test]
    fn golden_data_packet_bytes() {
        let block = SampleBlock::new(vec![c(1.0, 0.0), c(-1.0, 0.5)], 0x0102_0304_0506_0708);
        let bytes = encode_data_packet(&block, 1, 2, true).unwrap();
        let expected: Vec<u8> = vec![
            // header 0x00E0_0001_0018_0002, little-endian
            0x02, 0x00, 0x18, 0x00, 0x01, 0x00, 0xE0, 0x00,
            // timestamp
            0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01,
            // (32767, 0), (-32767, 16384)
            0xff, 0x7f, 0x00, 0x00, 0x01, 0x80, 0x00, 0x40,
        ];
        assert_eq!(bytes, expected);
        assert_eq!(ChdrPacket::decode(&expected).unwrap().encode().unwrap(), expected);
    }

    #[test]
    fn empty_and_oversized_blocks() {
        assert_eq!(encode_data_packet(&SampleBlock::zeros(0, 0), 0, 0, true), Err(CodecError::EmptyBlock));
        // (65535 - 16) / 4 = 16379 samples is the largest timestamped payload
        assert!(encode_data_packet(&SampleBlock::zeros(16379, 0), 0, 0, true).is_ok());
        assert!(matches!(
            encode_data_packet(&SampleBlock::zeros(16380, 0), 0, 0, true),
            Err(CodecError::FieldOverflow { field: "length", .. })
        ));
    }

    #[test]
    fn rejects_length_inconsistency() {
        let mut bytes = encode_data_packet(&SampleBlock::zeros(4, 0), 0, 0, true).unwrap();
        bytes.push(0);
        assert!(matches!(ChdrPacket::decode(&bytes), Err(CodecError::LengthMismatch { .. })));
        bytes.truncate(bytes.len() - 2);
        assert!(matches!(ChdrPacket::decode(&bytes), Err(CodecError::LengthMismatch { .. })));
        assert!(matches!(ChdrPacket::decode(&[0u8; 5]), Err(CodecError::Truncated { .. })));
    }

    #[test]
    fn timestamped_packet_shorter_than_16_bytes() {
        // DataWithTs header claiming length 8
        let word: u64 = (0x7 << 53) | (8 << 16);
        assert!(matches!(
            ChdrPacket::decode(&word.to_le_bytes()),
            Err(CodecError::LengthTooSmall { length: 8, min: 16 })
        ));
    }

    #[test]
    fn metadata_is_skipped() {
        // DataNoTs, one metadata word, one sample
        let word: u64 = (0x6 << 53) | (1 << 48) | (20 << 16);
        let mut buf = word.to_le_bytes().to_vec();
        buf.extend_from_slice(&[0xaa; 8]);
        buf.extend_from_slice(&[1, 0, 2, 0]);
        let pkt = ChdrPacket::decode(&buf).unwrap();
        assert_eq!(pkt.payload, vec![1, 0, 2, 0]);
        assert_eq!(pkt.header.num_mdata, 0);
        assert_eq!(pkt.header.length, 12);
    }

    #[test]
    fn constructor_enforces_timestamp_presence() {
        assert!(ChdrPacket::new(PacketType::DataWithTs, 0, 0, None, vec![]).is_err());
        assert!(ChdrPacket::new(PacketType::StreamStatus, 0, 0, Some(1), vec![]).is_err());
    }

    fn arb_type() -> impl Strategy<Value = PacketType> {
        prop_oneof![
            Just(PacketType::Management),
            Just(PacketType::StreamStatus),
            Just(PacketType::StreamCmd),
            Just(PacketType::Control),
            Just(PacketType::DataNoTs),
            Just(PacketType::DataWithTs),
        ]
    }

    proptest! {
        #[test]
        fn packet_roundtrip(
            ty in arb_type(),
            seq: u16,
            epid: u16,
            ts: u64,
            eob: bool,
            payload in proptest::collection::vec(any::<u8>(), 0..256),
        ) {
            let ts = ty.has_timestamp().then_some(ts);
            let pkt = ChdrPacket::new(ty, seq, epid, ts, payload).unwrap().with_eob(eob);
            let bytes = pkt.encode().unwrap();
            prop_assert_eq!(bytes.len(), pkt.wire_len());
            prop_assert_eq!(ChdrPacket::decode(&bytes).unwrap(), pkt);
        }
    }
}
