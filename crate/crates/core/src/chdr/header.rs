//! 64-bit CHDR header word.
//!
//! | bits    | field      |
//! |---------|------------|
//! | [63:58] | vc         |
//! | [57]    | eob        |
//! | [56]    | eov        |
//! | [55:53] | pkt_type   |
//! | [52:48] | num_mdata  |
//! | [47:32] | seq_num    |
//! | [31:16] | length     |
//! | [15:0]  | dst_epid   |

use super::CodecError;

const VC_SHIFT: u32 = 58;
const EOB_SHIFT: u32 = 57;
const EOV_SHIFT: u32 = 56;
const TYPE_SHIFT: u32 = 53;
const MDATA_SHIFT: u32 = 48;
const SEQ_SHIFT: u32 = 32;
const LEN_SHIFT: u32 = 16;

pub const VC_MAX: u8 = 0x3f;
pub const NUM_MDATA_MAX: u8 = 0x1f;

/// Size of the header word on the wire.
pub const HEADER_BYTES: usize = 8;
/// Size of the optional timestamp word on the wire.
pub const TIMESTAMP_BYTES: usize = 8;

#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PacketType {
    Management = 0x0,
    StreamStatus = 0x1,
    StreamCmd = 0x2,
    Control = 0x4,
    DataNoTs = 0x6,
    DataWithTs = 0x7,
}

impl PacketType {
    pub fn from_code(code: u8) -> Result<Self, CodecError> {
        Ok(match code {
            0x0 => PacketType::Management,
            0x1 => PacketType::StreamStatus,
            0x2 => PacketType::StreamCmd,
            0x4 => PacketType::Control,
            0x6 => PacketType::DataNoTs,
            0x7 => PacketType::DataWithTs,
            other => return Err(CodecError::InvalidPktType(other)),
        })
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn is_data(self) -> bool {
        matches!(self, PacketType::DataNoTs | PacketType::DataWithTs)
    }

    pub fn has_timestamp(self) -> bool {
        self == PacketType::DataWithTs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChdrHeader {
    /// Virtual channel, 6 bits.
    pub vc: u8,
    pub eob: bool,
    pub eov: bool,
    pub pkt_type: PacketType,
    /// Number of 64-bit metadata words, 5 bits.
    pub num_mdata: u8,
    pub seq_num: u16,
    /// Total packet length in bytes, header included.
    pub length: u16,
    pub dst_epid: u16,
}

impl Default for ChdrHeader {
    fn default() -> Self {
        ChdrHeader {
            vc: 0,
            eob: false,
            eov: false,
            pkt_type: PacketType::Management,
            num_mdata: 0,
            seq_num: 0,
            length: 0,
            dst_epid: 0,
        }
    }
}

impl ChdrHeader {
    /// Smallest `length` value this header may legally carry.
    pub fn min_length(&self) -> usize {
        let ts = if self.pkt_type.has_timestamp() { TIMESTAMP_BYTES } else { 0 };
        HEADER_BYTES + ts + 8 * self.num_mdata as usize
    }
}

/// Packs a header into its 64-bit word.
pub fn encode_header(h: &ChdrHeader) -> Result<u64, CodecError> {
    if h.vc > VC_MAX {
        return Err(CodecError::FieldOverflow { field: "vc", value: h.vc as u64, bits: 6 });
    }
    if h.num_mdata > NUM_MDATA_MAX {
        return Err(CodecError::FieldOverflow {
            field: "num_mdata",
            value: h.num_mdata as u64,
            bits: 5,
        });
    }
    Ok(((h.vc as u64) << VC_SHIFT)
        | ((h.eob as u64) << EOB_SHIFT)
        | ((h.eov as u64) << EOV_SHIFT)
        | ((h.pkt_type.code() as u64) << TYPE_SHIFT)
        | ((h.num_mdata as u64) << MDATA_SHIFT)
        | ((h.seq_num as u64) << SEQ_SHIFT)
        | ((h.length as u64) << LEN_SHIFT)
        | h.dst_epid as u64)
}

/// Unpacks a 64-bit header word. Only the packet type can be invalid.
pub fn decode_header(w: u64) -> Result<ChdrHeader, CodecError> {
    Ok(ChdrHeader {
        vc: ((w >> VC_SHIFT) & VC_MAX as u64) as u8,
        eob: (w >> EOB_SHIFT) & 1 == 1,
        eov: (w >> EOV_SHIFT) & 1 == 1,
        pkt_type: PacketType::from_code(((w >> TYPE_SHIFT) & 0x7) as u8)?,
        num_mdata: ((w >> MDATA_SHIFT) & NUM_MDATA_MAX as u64) as u8,
        seq_num: (w >> SEQ_SHIFT) as u16,
        length: (w >> LEN_SHIFT) as u16,
        dst_epid: w as u16,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_word_is_management() {
        let h = decode_header(0).unwrap();
        assert_eq!(h, ChdrHeader::default());
        assert_eq!(encode_header(&h).unwrap(), 0);
    }

    #[test]
    fn data_with_ts_example() {
        let h = ChdrHeader {
            pkt_type: PacketType::DataWithTs,
            seq_num: 1,
            length: 24,
            dst_epid: 2,
            ..Default::default()
        };
        assert_eq!(encode_header(&h).unwrap(), 0x00E0_0001_0018_0002);
        assert_eq!(decode_header(0x00E0_0001_0018_0002).unwrap(), h);
    }

    #[test]
    fn stream_status_example() {
        let h = ChdrHeader { pkt_type: PacketType::StreamStatus, length: 8, ..Default::default() };
        assert_eq!(encode_header(&h).unwrap(), 0x0020_0000_0008_0000);
    }

    #[test]
    fn unassigned_type_codes() {
        for code in [0b011u64, 0b101] {
            assert_eq!(
                decode_header(code << 53),
                Err(CodecError::InvalidPktType(code as u8))
            );
        }
    }

    #[test]
    fn overflowing_fields() {
        let h = ChdrHeader { vc: 64, ..Default::default() };
        assert!(matches!(encode_header(&h), Err(CodecError::FieldOverflow { field: "vc", .. })));
        let h = ChdrHeader { num_mdata: 32, ..Default::default() };
        assert!(matches!(
            encode_header(&h),
            Err(CodecError::FieldOverflow { field: "num_mdata", .. })
        ));
    }

    #[test]
    fn flags_land_on_their_bits() {
        let h = ChdrHeader { vc: 0x3f, eob: true, eov: true, ..Default::default() };
        assert_eq!(encode_header(&h).unwrap(), 0xFF00_0000_0000_0000);
    }
}
