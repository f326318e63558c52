//! Virtual-clock model of a streaming radio endpoint.
//!
//! The device packetizes its analog input into timestamped Rx packets,
//! plays Tx packets out at their timestamps, and enters a sequence-error
//! state when a Tx packet is lost or late. While in that state every data
//! packet is discarded and the output is zero until the host completes the
//! three-exchange recovery handshake.
//!
//! Timestamps refer to analog-plane ticks: Rx packet `k` carries the tick of
//! its first input sample, and a Tx sample stamped `t` appears on the output
//! tap at `t + dac_delay`.

mod taps;

use std::collections::{BTreeMap, VecDeque};

use num_complex::Complex64;
use thiserror::Error;

use crate::chdr::{self, data_packet, ChdrPacket, CodecError, PacketType, SampleBlock};
use crate::stream::{CmdOpcode, PayloadError, StatusCode, StreamCmd, StreamStatus};
use crate::transport::Tick;

pub use taps::{read_complex64, write_complex64, AnalogTaps};

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceConfig {
    pub sample_rate: f64,
    /// Samples per Rx packet.
    pub spp: usize,
    /// Tx buffer size reported to the host for flow control.
    pub capacity_bytes: u64,
    pub adc_delay: Tick,
    pub dac_delay: Tick,
    /// One status per this many retired Tx packets.
    pub status_cadence: u64,
    /// Endpoint id the device addresses its packets to.
    pub host_epid: u16,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig {
            sample_rate: 100e6,
            spp: 512,
            capacity_bytes: 64 * chdr::data_packet_len(512, true) as u64,
            adc_delay: 0,
            dac_delay: 0,
            status_cadence: 16,
            host_epid: 0,
        }
    }
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.spp == 0 {
            return Err(DeviceError::Config("spp must be positive".into()));
        }
        if self.spp * chdr::sc16::BYTES_PER_SAMPLE + 16 > u16::MAX as usize {
            return Err(DeviceError::Config(format!("spp {} exceeds the packet length limit", self.spp)));
        }
        if self.status_cadence == 0 {
            return Err(DeviceError::Config("status cadence must be positive".into()));
        }
        if !(self.sample_rate > 0.0) {
            return Err(DeviceError::Config("sample rate must be positive".into()));
        }
        Ok(())
    }

    /// Packetization delay in ticks.
    pub fn packetization(&self) -> Tick {
        self.spp as Tick
    }
}

/// Tx faults applied on arrival, keyed by the zero-based ordinal of the Tx
/// data packet at the device.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultPlan {
    pub delay_tx: BTreeMap<u64, Tick>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecoveryStage {
    AwaitErrorAck,
    AwaitFlush,
    AwaitResync,
}

impl RecoveryStage {
    fn expects(self) -> CmdOpcode {
        match self {
            RecoveryStage::AwaitErrorAck => CmdOpcode::ErrorAck,
            RecoveryStage::AwaitFlush => CmdOpcode::Flush,
            RecoveryStage::AwaitResync => CmdOpcode::Resync,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceTxState {
    /// No burst in progress.
    Idle,
    /// Resynchronized, waiting for the first packet; underruns are not errors yet.
    Armed,
    Streaming,
    Error(RecoveryStage),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCause {
    /// Output ran dry mid-burst.
    Underrun,
    /// Packet arrived after its timestamp.
    Late,
    /// Packet sequence number did not match.
    SeqMismatch,
}

/// One sequence-error episode as seen from the device.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapEpisode {
    pub cause: ErrorCause,
    pub detected_at: Tick,
    /// First DAC tick zero-filled because of this episode.
    pub first_missed: Option<Tick>,
    /// Tick the resync request completed the handshake.
    pub recovered_at: Option<Tick>,
    /// First DAC tick playing data again.
    pub resumed_at: Option<Tick>,
    pub recovery_requests: u32,
}

impl GapEpisode {
    /// Zero-filled ticks, once the output has resumed.
    pub fn gap_len(&self) -> Option<Tick> {
        Some(self.resumed_at? - self.first_missed?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeviceStats {
    pub rx_packets: u64,
    pub tx_accepted: u64,
    pub tx_discarded: u64,
    /// Discarded silently because they predate the last resync.
    pub tx_stale: u64,
    pub statuses: u64,
    pub adc_clipped: u64,
    pub max_buffered_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("recovery request {got:?} does not match device state {state:?}")]
    ProtocolViolation { state: DeviceTxState, got: CmdOpcode },
    #[error("{0:?} packet is not handled by the device")]
    Unsupported(PacketType),
    #[error("invalid device config: {0}")]
    Config(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Payload(#[from] PayloadError),
}

#[derive(Debug)]
struct Scheduled {
    start: Tick,
    samples: Vec<Complex64>,
    bytes: u64,
    eob: bool,
}

impl Scheduled {
    fn end(&self) -> Tick {
        self.start + self.samples.len() as Tick
    }
}

#[derive(Debug)]
pub struct DeviceSim {
    cfg: DeviceConfig,
    now: Tick,
    input: Vec<Complex64>,
    taps: AnalogTaps,
    rx_acc: Vec<Complex64>,
    rx_seq: u16,
    status_seq: u16,
    /// Packets ready at a tick, ordered by (tick, emission order).
    outbox: BTreeMap<(Tick, u64), Vec<u8>>,
    outbox_seq: u64,
    tx_state: DeviceTxState,
    /// Set once the current burst has played its first sample.
    playing: bool,
    expected_seq: Option<u16>,
    resync_floor: Tick,
    schedule: VecDeque<Scheduled>,
    buffered_bytes: u64,
    retired_bytes: u64,
    retired_packets: u64,
    tx_ordinal: u64,
    faults: FaultPlan,
    delayed: BTreeMap<(Tick, u64), ChdrPacket>,
    episodes: Vec<GapEpisode>,
    stats: DeviceStats,
}

impl DeviceSim {
    pub fn new(cfg: DeviceConfig) -> Result<Self, DeviceError> {
        cfg.validate()?;
        Ok(DeviceSim {
            rx_acc: Vec::with_capacity(cfg.spp),
            cfg,
            now: 0,
            input: Vec::new(),
            taps: AnalogTaps::default(),
            rx_seq: 0,
            status_seq: 0,
            outbox: BTreeMap::new(),
            outbox_seq: 0,
            tx_state: DeviceTxState::Idle,
            playing: false,
            expected_seq: None,
            resync_floor: 0,
            schedule: VecDeque::new(),
            buffered_bytes: 0,
            retired_bytes: 0,
            retired_packets: 0,
            tx_ordinal: 0,
            faults: FaultPlan::default(),
            delayed: BTreeMap::new(),
            episodes: Vec::new(),
            stats: DeviceStats::default(),
        })
    }

    pub fn config(&self) -> &DeviceConfig {
        &self.cfg
    }

    /// Analog input signal, indexed by tick; zero beyond its end.
    pub fn set_input(&mut self, input: Vec<Complex64>) {
        self.input = input;
    }

    pub fn set_faults(&mut self, faults: FaultPlan) {
        self.faults = faults;
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn tx_state(&self) -> DeviceTxState {
        self.tx_state
    }

    pub fn taps(&self) -> &AnalogTaps {
        &self.taps
    }

    pub fn into_taps(self) -> AnalogTaps {
        self.taps
    }

    pub fn episodes(&self) -> &[GapEpisode] {
        &self.episodes
    }

    pub fn stats(&self) -> DeviceStats {
        self.stats
    }

    /// Bytes accepted but not yet played out.
    pub fn buffered_bytes(&self) -> u64 {
        self.buffered_bytes
    }

    /// Runs the converters up to (not including) tick `to` and returns every
    /// packet that became ready by `to`, in order.
    pub fn advance(&mut self, to: Tick) -> Vec<Vec<u8>> {
        assert!(to >= self.now, "device clock moved backwards");
        loop {
            self.release_delayed();
            if self.now == to {
                break;
            }
            self.adc_tick();
            self.dac_tick();
            self.now += 1;
        }
        let later = self.outbox.split_off(&(to + 1, 0));
        let ready = std::mem::replace(&mut self.outbox, later);
        ready.into_values().collect()
    }

    /// Earliest tick at which a queued packet becomes ready.
    pub fn next_ready(&self) -> Option<Tick> {
        self.outbox.keys().next().map(|k| k.0)
    }

    fn adc_tick(&mut self) {
        let t = self.now;
        let x = self.input.get(t as usize).copied().unwrap_or_default();
        if x.re.abs() > 1.0 || x.im.abs() > 1.0 {
            self.stats.adc_clipped += 1;
        }
        self.taps.input_trace.push(x);
        self.rx_acc.push(x);
        if self.rx_acc.len() == self.cfg.spp {
            let start = t + 1 - self.cfg.spp as Tick;
            let block = SampleBlock::new(std::mem::take(&mut self.rx_acc), start);
            let pkt = data_packet(&block, self.rx_seq, self.cfg.host_epid, true)
                .expect("validated spp fits a packet");
            self.rx_seq = self.rx_seq.wrapping_add(1);
            self.stats.rx_packets += 1;
            let ready = start + self.cfg.spp as Tick + self.cfg.adc_delay;
            self.push_out(ready, pkt.encode().expect("device packets encode"));
            self.rx_acc.reserve(self.cfg.spp);
        }
    }

    fn dac_tick(&mut self) {
        let t = self.now;
        let mut sample = None;
        let mut retire = None;
        if let Some(front) = self.schedule.front() {
            if front.start <= t {
                sample = Some(front.samples[(t - front.start) as usize]);
                if t + 1 == front.end() {
                    retire = self.schedule.pop_front();
                }
            }
        }
        let out_tick = (t + self.cfg.dac_delay) as usize;
        if self.taps.output_trace.len() <= out_tick {
            self.taps.output_trace.resize(out_tick + 1, Complex64::default());
        }
        match sample {
            Some(s) => {
                self.taps.output_trace[out_tick] = s;
                if self.tx_state == DeviceTxState::Streaming {
                    self.playing = true;
                }
                if let Some(ep) = self.episodes.last_mut() {
                    if ep.resumed_at.is_none() && ep.recovered_at.is_some() {
                        ep.resumed_at = Some(t);
                    }
                }
            }
            None => {
                if self.tx_state == DeviceTxState::Streaming && self.playing {
                    let status = self.enter_error(ErrorCause::Underrun, t);
                    let bytes = self.encode_status(status);
                    self.push_out(t + 1, bytes);
                }
                if let Some(ep) = self.episodes.last_mut() {
                    if ep.first_missed.is_none() && self.tx_state != DeviceTxState::Idle {
                        ep.first_missed = Some(t);
                    }
                }
            }
        }
        if let Some(done) = retire {
            if done.eob && self.tx_state == DeviceTxState::Streaming && self.schedule.is_empty() {
                self.tx_state = DeviceTxState::Idle;
                self.playing = false;
            }
            self.buffered_bytes -= done.bytes;
            if self.retire_bytes(done.bytes) {
                let status = self.status(self.cadence_code(), 0, t + 1);
                let bytes = self.encode_status(status);
                self.push_out(t + 1, bytes);
            }
        }
    }

    fn release_delayed(&mut self) {
        while let Some(entry) = self.delayed.first_entry() {
            if entry.key().0 > self.now {
                break;
            }
            let pkt = entry.remove();
            if let Some(status) = self.accept_data(&pkt) {
                let bytes = self.encode_status(status);
                self.push_out(self.now, bytes);
            }
        }
    }

    /// Handles one encoded packet from the host, returning encoded replies to
    /// send back immediately.
    pub fn receive(&mut self, bytes: &[u8]) -> Result<Vec<Vec<u8>>, DeviceError> {
        let pkt = ChdrPacket::decode(bytes)?;
        match pkt.header.pkt_type {
            PacketType::DataWithTs | PacketType::DataNoTs => Ok(self
                .on_tx_packet(&pkt)
                .map(|s| vec![self.encode_status(s)])
                .unwrap_or_default()),
            PacketType::StreamCmd => {
                let resp = self.handle_recovery(&pkt)?;
                Ok(vec![resp.encode()?])
            }
            other => Err(DeviceError::Unsupported(other)),
        }
    }

    /// Accepts or discards a Tx data packet arriving at the current tick.
    pub fn on_tx_packet(&mut self, pkt: &ChdrPacket) -> Option<StreamStatus> {
        let ordinal = self.tx_ordinal;
        self.tx_ordinal += 1;
        if let Some(&extra) = self.faults.delay_tx.get(&ordinal) {
            if extra > 0 {
                self.delayed.insert((self.now + extra, ordinal), pkt.clone());
                return None;
            }
        }
        self.accept_data(pkt)
    }

    fn accept_data(&mut self, pkt: &ChdrPacket) -> Option<StreamStatus> {
        let bytes = pkt.wire_len() as u64;
        let samples = match pkt.to_block() {
            Ok(b) => b.samples,
            Err(_) => return self.discard(bytes),
        };
        if matches!(self.tx_state, DeviceTxState::Error(_)) {
            return self.discard(bytes);
        }
        // A data packet without a timestamp plays right away.
        let ts = pkt.timestamp.unwrap_or(self.now);
        if ts < self.resync_floor {
            self.stats.tx_stale += 1;
            return self.discard(bytes);
        }
        let seq = pkt.header.seq_num;
        let cause = if self.expected_seq.is_some_and(|e| e != seq) {
            Some(ErrorCause::SeqMismatch)
        } else if ts < self.now || self.schedule.back().is_some_and(|b| ts < b.end()) {
            Some(ErrorCause::Late)
        } else {
            None
        };
        if let Some(cause) = cause {
            self.stats.tx_discarded += 1;
            // the error status carries the updated ack count
            self.retire_bytes(bytes);
            return Some(self.enter_error(cause, self.now));
        }
        self.expected_seq = Some(seq.wrapping_add(1));
        self.schedule.push_back(Scheduled { start: ts, samples, bytes, eob: pkt.header.eob });
        self.buffered_bytes += bytes;
        self.stats.max_buffered_bytes = self.stats.max_buffered_bytes.max(self.buffered_bytes);
        self.stats.tx_accepted += 1;
        if matches!(self.tx_state, DeviceTxState::Idle | DeviceTxState::Armed) {
            self.tx_state = DeviceTxState::Streaming;
        }
        None
    }

    fn discard(&mut self, bytes: u64) -> Option<StreamStatus> {
        self.stats.tx_discarded += 1;
        self.retire_bytes(bytes).then(|| self.status(self.cadence_code(), 0, self.now))
    }

    /// Cadence statuses repeat the error until the host acknowledges it, so a
    /// lost error report does not leave the device stuck.
    fn cadence_code(&self) -> StatusCode {
        match self.tx_state {
            DeviceTxState::Error(RecoveryStage::AwaitErrorAck) => StatusCode::SeqError,
            _ => StatusCode::Ok,
        }
    }

    /// Enters the error state and returns the seq-error status to report.
    fn enter_error(&mut self, cause: ErrorCause, detected_at: Tick) -> StreamStatus {
        self.tx_state = DeviceTxState::Error(RecoveryStage::AwaitErrorAck);
        self.playing = false;
        self.episodes.push(GapEpisode {
            cause,
            detected_at,
            first_missed: None,
            recovered_at: None,
            resumed_at: None,
            recovery_requests: 0,
        });
        self.status(StatusCode::SeqError, 0, detected_at)
    }

    /// Books bytes that left the Tx buffer. Returns true when a cadence
    /// status is due.
    fn retire_bytes(&mut self, bytes: u64) -> bool {
        self.retired_bytes += bytes;
        self.retired_packets += 1;
        self.retired_packets % self.cfg.status_cadence == 0
    }

    /// Serves one recovery request.
    pub fn handle_recovery(&mut self, request: &ChdrPacket) -> Result<ChdrPacket, DeviceError> {
        let cmd = StreamCmd::from_packet(request)?;
        let stage = match self.tx_state {
            DeviceTxState::Error(stage) if stage.expects() == cmd.op => stage,
            state => return Err(DeviceError::ProtocolViolation { state, got: cmd.op }),
        };
        if let Some(ep) = self.episodes.last_mut() {
            ep.recovery_requests += 1;
        }
        let (seq, tick) = match stage {
            RecoveryStage::AwaitErrorAck => {
                self.tx_state = DeviceTxState::Error(RecoveryStage::AwaitFlush);
                (0, self.now)
            }
            RecoveryStage::AwaitFlush => {
                let flushed: Vec<Scheduled> = self.schedule.drain(..).collect();
                for s in flushed {
                    self.buffered_bytes -= s.bytes;
                    self.retire_bytes(s.bytes);
                }
                self.tx_state = DeviceTxState::Error(RecoveryStage::AwaitResync);
                (0, self.now)
            }
            RecoveryStage::AwaitResync => {
                self.tx_state = DeviceTxState::Armed;
                self.expected_seq = Some(cmd.seq);
                self.resync_floor = cmd.timestamp.max(self.now);
                if let Some(ep) = self.episodes.last_mut() {
                    ep.recovered_at = Some(self.now);
                }
                (cmd.seq, self.resync_floor)
            }
        };
        let status = self.status(cmd.op.response(), seq, tick);
        Ok(self.status_packet(status))
    }

    fn status(&mut self, code: StatusCode, seq: u16, tick: Tick) -> StreamStatus {
        self.stats.statuses += 1;
        StreamStatus {
            code,
            seq,
            capacity_bytes: self.cfg.capacity_bytes,
            acked_bytes: self.retired_bytes,
            tick,
        }
    }

    fn status_packet(&mut self, status: StreamStatus) -> ChdrPacket {
        let pkt = status.to_packet(self.status_seq, self.cfg.host_epid);
        self.status_seq = self.status_seq.wrapping_add(1);
        pkt
    }

    fn encode_status(&mut self, status: StreamStatus) -> Vec<u8> {
        self.status_packet(status).encode().expect("status packets encode")
    }

    fn push_out(&mut self, ready: Tick, bytes: Vec<u8>) {
        self.outbox.insert((ready, self.outbox_seq), bytes);
        self.outbox_seq += 1;
    }
}
