use crate::chdr::{data_packet, data_packet_len, ChdrPacket, SampleBlock};
use crate::transport::Tick;

use super::flow::FlowControl;
use super::payload::{CmdOpcode, StatusCode, StreamCmd, StreamStatus};
use super::StreamError;

/// Host-side Tx stream state.
///
/// Recovery from a sequence error always walks
/// `ErrorDetected -> AwaitFlushAck -> AwaitResyncAck -> Streaming`, one
/// request/response exchange per arrow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxState {
    Idle,
    Streaming,
    /// Error acknowledged to the device, waiting for its halt ack.
    ErrorDetected,
    AwaitFlushAck,
    AwaitResyncAck,
}

impl TxState {
    pub fn is_recovering(self) -> bool {
        matches!(self, TxState::ErrorDetected | TxState::AwaitFlushAck | TxState::AwaitResyncAck)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxConfig {
    pub dst_epid: u16,
    pub capacity_bytes: u64,
    /// Samples per packet; sets the block grid used to pick the resumption tick.
    pub spp: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TxStats {
    pub packets_sent: u64,
    /// Sends refused for lack of credits.
    pub credit_denials: u64,
    /// Pending blocks dropped because a newer block replaced them.
    pub superseded: u64,
    /// Blocks dropped because they fell before the resumption tick or
    /// arrived while recovering.
    pub skipped: u64,
    pub error_episodes: u64,
    pub recovery_requests: u64,
    pub max_in_flight: u64,
    pub max_pending: usize,
}

#[derive(Debug, Clone)]
struct Pending {
    block: SampleBlock,
    eob: bool,
}

/// Host side of one Tx stream: emits timestamped data packets under credit
/// flow control and drives the three-exchange sequence-error recovery.
///
/// At most one block is ever held back (the one currently denied credits);
/// there is no other Tx queue.
#[derive(Debug, Clone)]
pub struct TxStream {
    cfg: TxConfig,
    state: TxState,
    next_seq: u16,
    cmd_seq: u16,
    credits: FlowControl,
    resumption_tick: Tick,
    grid_phase: Option<u64>,
    pending: Option<Pending>,
    stats: TxStats,
}

impl TxStream {
    pub fn new(cfg: TxConfig) -> Self {
        assert!(cfg.spp > 0, "spp must be positive");
        TxStream {
            cfg,
            state: TxState::Idle,
            next_seq: 0,
            cmd_seq: 0,
            credits: FlowControl::new(cfg.capacity_bytes),
            resumption_tick: 0,
            grid_phase: None,
            pending: None,
            stats: TxStats::default(),
        }
    }

    pub fn start(&mut self) {
        if self.state == TxState::Idle {
            self.state = TxState::Streaming;
        }
    }

    pub fn state(&self) -> TxState {
        self.state
    }

    pub fn next_seq(&self) -> u16 {
        self.next_seq
    }

    pub fn credits(&self) -> &FlowControl {
        &self.credits
    }

    pub fn resumption_tick(&self) -> Tick {
        self.resumption_tick
    }

    pub fn pending_depth(&self) -> usize {
        self.pending.is_some() as usize
    }

    pub fn stats(&self) -> TxStats {
        self.stats
    }

    /// Submits one block. Emits at most one packet; a block that cannot be
    /// sent for lack of credits is held until [`poll_pending`](Self::poll_pending)
    /// or the next submission, replacing any older held block.
    pub fn tx_send_block(&mut self, block: SampleBlock) -> Result<Option<ChdrPacket>, StreamError> {
        self.submit(block, false)
    }

    /// Like [`tx_send_block`](Self::tx_send_block) but marks the end of the
    /// burst; the stream returns to `Idle` once that packet is out.
    pub fn tx_end_burst(&mut self, block: SampleBlock) -> Result<Option<ChdrPacket>, StreamError> {
        self.submit(block, true)
    }

    fn submit(&mut self, block: SampleBlock, eob: bool) -> Result<Option<ChdrPacket>, StreamError> {
        if self.state != TxState::Streaming {
            return Err(StreamError::NotStreaming(self.state));
        }
        if block.is_empty() {
            return Err(StreamError::Codec(crate::chdr::CodecError::EmptyBlock));
        }
        self.grid_phase.get_or_insert(block.start_tick % self.cfg.spp as u64);
        if block.start_tick < self.resumption_tick {
            self.stats.skipped += 1;
            return Ok(None);
        }
        let incoming = Pending { block, eob };
        if let Some(held) = self.pending.take() {
            if self.fits(&held.block) {
                let pkt = self.emit(held)?;
                self.hold(incoming);
                return Ok(Some(pkt));
            }
            self.stats.superseded += 1;
        }
        if self.fits(&incoming.block) {
            return self.emit(incoming).map(Some);
        }
        self.stats.credit_denials += 1;
        self.hold(incoming);
        Ok(None)
    }

    /// Retries the held block after credits were returned.
    pub fn poll_pending(&mut self) -> Result<Option<ChdrPacket>, StreamError> {
        if self.state != TxState::Streaming {
            return Ok(None);
        }
        match self.pending.take() {
            Some(p) if p.block.start_tick < self.resumption_tick => {
                self.stats.skipped += 1;
                Ok(None)
            }
            Some(p) if self.fits(&p.block) => self.emit(p).map(Some),
            other => {
                self.pending = other;
                Ok(None)
            }
        }
    }

    fn hold(&mut self, p: Pending) {
        self.pending = Some(p);
        self.stats.max_pending = self.stats.max_pending.max(1);
    }

    fn fits(&self, block: &SampleBlock) -> bool {
        self.credits.can_send(data_packet_len(block.len(), true) as u64)
    }

    fn emit(&mut self, p: Pending) -> Result<ChdrPacket, StreamError> {
        let pkt = data_packet(&p.block, self.next_seq, self.cfg.dst_epid, true)?.with_eob(p.eob);
        self.credits.on_sent(pkt.wire_len() as u64);
        self.next_seq = self.next_seq.wrapping_add(1);
        self.stats.packets_sent += 1;
        self.stats.max_in_flight = self.stats.max_in_flight.max(self.credits.in_flight());
        if p.eob {
            self.state = TxState::Idle;
        }
        Ok(pkt)
    }

    /// Handles a StreamStatus from the device. Returns the next recovery
    /// request when one is due.
    pub fn on_stream_status(
        &mut self,
        status: &StreamStatus,
        now: Tick,
    ) -> Result<Option<ChdrPacket>, StreamError> {
        self.credits.on_ack(status.acked_bytes);
        match status.code {
            StatusCode::Ok => Ok(None),
            StatusCode::SeqError => {
                if self.state != TxState::Streaming {
                    // already recovering (or not streaming): nothing new to do
                    return Ok(None);
                }
                self.state = TxState::ErrorDetected;
                self.stats.error_episodes += 1;
                if self.pending.take().is_some() {
                    self.stats.skipped += 1;
                }
                Ok(Some(self.request(CmdOpcode::ErrorAck, 0, now)))
            }
            _ if self.state.is_recovering() => self.recovery_step(status, now),
            code => Err(StreamError::UnexpectedStatus { code, state: self.state }),
        }
    }

    /// Advances the recovery handshake by one exchange.
    pub fn recovery_step(
        &mut self,
        response: &StreamStatus,
        now: Tick,
    ) -> Result<Option<ChdrPacket>, StreamError> {
        let violation = StreamError::ProtocolViolation { state: self.state, got: response.code };
        match (self.state, response.code) {
            (TxState::ErrorDetected, StatusCode::HaltAck) => {
                self.state = TxState::AwaitFlushAck;
                Ok(Some(self.request(CmdOpcode::Flush, 0, now)))
            }
            (TxState::AwaitFlushAck, StatusCode::FlushAck) => {
                self.state = TxState::AwaitResyncAck;
                Ok(Some(self.request(CmdOpcode::Resync, self.next_seq, now)))
            }
            (TxState::AwaitResyncAck, StatusCode::ResyncAck) => {
                self.state = TxState::Streaming;
                self.next_seq = response.seq;
                self.resumption_tick = self.next_boundary(now.max(response.tick));
                Ok(None)
            }
            _ => Err(violation),
        }
    }

    fn request(&mut self, op: CmdOpcode, seq: u16, now: Tick) -> ChdrPacket {
        self.stats.recovery_requests += 1;
        let pkt = StreamCmd { op, seq, timestamp: now }.to_packet(self.cmd_seq, self.cfg.dst_epid);
        self.cmd_seq = self.cmd_seq.wrapping_add(1);
        pkt
    }

    /// First block boundary at or after `t`.
    fn next_boundary(&self, t: Tick) -> Tick {
        let spp = self.cfg.spp as u64;
        match self.grid_phase {
            Some(phase) => t + (phase + spp - t % spp) % spp,
            None => t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chdr::PacketType;
    use num_complex::Complex64;

    const SPP: usize = 16;

    fn pkt_bytes() -> u64 {
        data_packet_len(SPP, true) as u64
    }

    fn stream(capacity_packets: u64) -> TxStream {
        let mut tx = TxStream::new(TxConfig {
            dst_epid: 7,
            capacity_bytes: capacity_packets * pkt_bytes(),
            spp: SPP,
        });
        tx.start();
        tx
    }

    fn block(i: u64) -> SampleBlock {
        SampleBlock::new(vec![Complex64::new(0.5, -0.5); SPP], i * SPP as u64)
    }

    fn status(code: StatusCode, acked: u64) -> StreamStatus {
        StreamStatus { code, seq: 0, capacity_bytes: 0, acked_bytes: acked, tick: 0 }
    }

    #[test]
    fn sequence_numbers_increment() {
        let mut tx = stream(100);
        for i in 0..3 {
            let p = tx.tx_send_block(block(i)).unwrap().unwrap();
            assert_eq!(p.header.seq_num, i as u16);
            assert_eq!(p.header.pkt_type, PacketType::DataWithTs);
            assert_eq!(p.timestamp, Some(i * SPP as u64));
            assert_eq!(p.header.dst_epid, 7);
        }
    }

    #[test]
    fn credit_exhaustion() {
        let mut tx = stream(10);
        for i in 0..10 {
            assert!(tx.tx_send_block(block(i)).unwrap().is_some());
        }
        assert!(tx.tx_send_block(block(10)).unwrap().is_none());
        assert_eq!(tx.pending_depth(), 1);
        tx.on_stream_status(&status(StatusCode::Ok, pkt_bytes()), 0).unwrap();
        let p = tx.poll_pending().unwrap().unwrap();
        assert_eq!(p.timestamp, Some(10 * SPP as u64));
        assert_eq!(tx.pending_depth(), 0);
    }

    #[test]
    fn newer_block_supersedes_held_one() {
        let mut tx = stream(1);
        tx.tx_send_block(block(0)).unwrap().unwrap();
        assert!(tx.tx_send_block(block(1)).unwrap().is_none());
        assert!(tx.tx_send_block(block(2)).unwrap().is_none());
        assert_eq!(tx.pending_depth(), 1);
        assert_eq!(tx.stats().superseded, 1);
        tx.on_stream_status(&status(StatusCode::Ok, pkt_bytes()), 0).unwrap();
        // held block goes out first, the new one is held in its place
        let p = tx.tx_send_block(block(3)).unwrap().unwrap();
        assert_eq!(p.timestamp, Some(2 * SPP as u64));
        assert_eq!(tx.pending_depth(), 1);
    }

    #[test]
    fn seq_wraps() {
        let mut tx = stream(u64::MAX / pkt_bytes());
        tx.next_seq = 65535;
        assert_eq!(tx.tx_send_block(block(0)).unwrap().unwrap().header.seq_num, 65535);
        assert_eq!(tx.tx_send_block(block(1)).unwrap().unwrap().header.seq_num, 0);
    }

    #[test]
    fn not_streaming() {
        let mut tx = TxStream::new(TxConfig { dst_epid: 0, capacity_bytes: 1 << 20, spp: SPP });
        assert_eq!(tx.tx_send_block(block(0)), Err(StreamError::NotStreaming(TxState::Idle)));
        tx.start();
        tx.tx_end_burst(block(0)).unwrap().unwrap();
        assert_eq!(tx.state(), TxState::Idle);
    }

    #[test]
    fn recovery_walks_three_exchanges() {
        let mut tx = stream(100);
        for i in 0..4 {
            tx.tx_send_block(block(i)).unwrap();
        }
        let req1 = tx.on_stream_status(&status(StatusCode::SeqError, 0), 100).unwrap().unwrap();
        assert_eq!(tx.state(), TxState::ErrorDetected);
        assert_eq!(StreamCmd::from_packet(&req1).unwrap().op, CmdOpcode::ErrorAck);
        assert!(matches!(tx.tx_send_block(block(5)), Err(StreamError::NotStreaming(_))));

        // duplicate error reports are ignored
        assert!(tx.on_stream_status(&status(StatusCode::SeqError, 0), 101).unwrap().is_none());

        let req2 = tx.on_stream_status(&status(StatusCode::HaltAck, 0), 110).unwrap().unwrap();
        assert_eq!(StreamCmd::from_packet(&req2).unwrap().op, CmdOpcode::Flush);
        assert_eq!(tx.state(), TxState::AwaitFlushAck);
        let req3 = tx.on_stream_status(&status(StatusCode::FlushAck, 0), 120).unwrap().unwrap();
        let cmd3 = StreamCmd::from_packet(&req3).unwrap();
        assert_eq!(cmd3.op, CmdOpcode::Resync);
        assert_eq!(cmd3.seq, 4);
        assert_eq!(cmd3.timestamp, 120);

        let ack = StreamStatus { seq: 4, tick: 120, ..status(StatusCode::ResyncAck, 0) };
        assert!(tx.on_stream_status(&ack, 130).unwrap().is_none());
        assert_eq!(tx.state(), TxState::Streaming);
        assert_eq!(tx.stats().recovery_requests, 3);
        assert_eq!(tx.stats().error_episodes, 1);
        // resumption snaps to the block grid
        assert_eq!(tx.resumption_tick(), 144);
        assert!(tx.tx_send_block(block(8)).unwrap().is_none());
        assert_eq!(tx.tx_send_block(block(9)).unwrap().unwrap().header.seq_num, 4);
    }

    #[test]
    fn out_of_order_response_is_a_violation() {
        let mut tx = stream(100);
        tx.on_stream_status(&status(StatusCode::SeqError, 0), 0).unwrap();
        assert_eq!(
            tx.on_stream_status(&status(StatusCode::FlushAck, 0), 1),
            Err(StreamError::ProtocolViolation { state: TxState::ErrorDetected, got: StatusCode::FlushAck })
        );
    }

    #[test]
    fn recovery_ack_while_streaming_is_unexpected() {
        let mut tx = stream(100);
        assert_eq!(
            tx.on_stream_status(&status(StatusCode::HaltAck, 0), 0),
            Err(StreamError::UnexpectedStatus { code: StatusCode::HaltAck, state: TxState::Streaming })
        );
    }
}
