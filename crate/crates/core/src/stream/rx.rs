use crate::chdr::{ChdrPacket, SampleBlock};

use super::StreamError;

/// A discontinuity in the Rx sequence: `missing` packets were lost after seq `after`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapReport {
    pub after: u16,
    pub missing: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxBlock {
    pub block: SampleBlock,
    pub seq: u16,
    pub gap: Option<GapReport>,
}

/// Host side of one Rx stream. The first data packet sets the sequence baseline.
#[derive(Debug, Clone, Default)]
pub struct RxStream {
    expected_seq: u16,
    started: bool,
    gap_count: u64,
    packets: u64,
}

impl RxStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn started(&self) -> bool {
        self.started
    }

    pub fn expected_seq(&self) -> u16 {
        self.expected_seq
    }

    /// Total number of packets missing so far.
    pub fn gap_count(&self) -> u64 {
        self.gap_count
    }

    pub fn packets(&self) -> u64 {
        self.packets
    }

    pub fn rx_poll(&mut self, pkt: &ChdrPacket) -> Result<RxBlock, StreamError> {
        if !pkt.header.pkt_type.is_data() {
            return Err(StreamError::BadPacketType(pkt.header.pkt_type));
        }
        let seq = pkt.header.seq_num;
        let mut gap = None;
        if self.started {
            let distance = seq.wrapping_sub(self.expected_seq);
            if distance >= 0x8000 {
                return Err(StreamError::StaleSequence { expected: self.expected_seq, got: seq });
            }
            if distance != 0 {
                self.gap_count += distance as u64;
                gap = Some(GapReport { after: self.expected_seq.wrapping_sub(1), missing: distance });
            }
        }
        let block = pkt.to_block()?;
        self.started = true;
        self.expected_seq = seq.wrapping_add(1);
        self.packets += 1;
        Ok(RxBlock { block, seq, gap })
    }
}
