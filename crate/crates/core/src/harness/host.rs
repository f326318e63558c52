use std::collections::{BTreeMap, VecDeque};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chdr::{ChdrPacket, PacketType, SampleBlock};
use crate::stream::{RxStream, StreamError, StreamStatus, TxConfig, TxStats, TxStream};
use crate::transport::Tick;
use crate::upols::{from_c64, to_c64, MimoEmulator, OpCounters, Real, UpolsConvolver, UpolsError};

use super::config::{Mode, Precision, ProcessingModel, ScenarioConfig};
use super::HarnessError;

/// One block step of the host's signal processing, all ports at once.
pub trait BlockEngine: Send {
    fn process(&mut self, xs: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>, UpolsError>;
    fn counters(&self) -> OpCounters;
}

struct PassEngine {
    blocks: u64,
}

impl BlockEngine for PassEngine {
    fn process(&mut self, xs: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>, UpolsError> {
        self.blocks += 1;
        Ok(xs.to_vec())
    }

    fn counters(&self) -> OpCounters {
        OpCounters { blocks: self.blocks, ..Default::default() }
    }
}

fn cast<T: Real>(x: &[Complex64]) -> Vec<num_complex::Complex<T>> {
    x.iter().map(|c| from_c64(*c)).collect()
}

struct SisoEngine<T: Real>(UpolsConvolver<T>);

impl<T: Real> BlockEngine for SisoEngine<T> {
    fn process(&mut self, xs: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>, UpolsError> {
        let y = self.0.process_block(&cast(&xs[0]))?;
        Ok(vec![y.into_iter().map(to_c64).collect()])
    }

    fn counters(&self) -> OpCounters {
        self.0.counters()
    }
}

struct MimoEngine<T: Real>(MimoEmulator<T>);

impl<T: Real> BlockEngine for MimoEngine<T> {
    fn process(&mut self, xs: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>, UpolsError> {
        let xs: Vec<_> = xs.iter().map(|x| cast(x)).collect();
        let ys = self.0.mimo_process(&xs)?;
        Ok(ys.into_iter().map(|y| y.into_iter().map(to_c64).collect()).collect())
    }

    fn counters(&self) -> OpCounters {
        self.0.counters()
    }
}

fn lti_engine<T: Real + 'static>(cfg: &ScenarioConfig) -> Result<Box<dyn BlockEngine>, HarnessError> {
    let cir = cfg.cir.as_ref().expect("validated");
    let b = cfg.spp();
    Ok(if cfg.ports == 1 {
        Box::new(SisoEngine(UpolsConvolver::<T>::new(&cast(cir.get(0, 0)), b)?))
    } else {
        Box::new(MimoEngine(MimoEmulator::<T>::new(&cir.to_precision::<T>(), b)?))
    })
}

pub fn engine_for(cfg: &ScenarioConfig) -> Result<Box<dyn BlockEngine>, HarnessError> {
    match (cfg.mode, cfg.precision) {
        (Mode::PassThrough, _) => Ok(Box::new(PassEngine { blocks: 0 })),
        (Mode::LtiEmulation, Precision::Single) => lti_engine::<f32>(cfg),
        (Mode::LtiEmulation, Precision::Double) => lti_engine::<f64>(cfg),
    }
}

struct Port {
    rx: RxStream,
    tx: TxStream,
}

struct Gather {
    blocks: Vec<Option<Vec<Complex64>>>,
    arrival: Tick,
}

struct Job {
    ready: Tick,
    rx_ts: Tick,
    last: bool,
    outputs: Vec<Vec<Complex64>>,
}

/// Host side of the loop: Rx streams in, engine, Tx streams out.
///
/// Processing is sequential: a block ready at `arrival` finishes at
/// `max(arrival, previous finish) + d` with `d` drawn from the processing
/// model. Its output is stamped `rx_ts + tx_offset`.
pub struct HostPipeline {
    ports: Vec<Port>,
    engine: Box<dyn BlockEngine>,
    spp: Tick,
    tx_offset: Tick,
    processing: ProcessingModel,
    rng: ChaCha8Rng,
    gather: BTreeMap<Tick, Gather>,
    queue: VecDeque<Job>,
    last_ready: Tick,
    blocks_total: u64,
    blocks_queued: u64,
    delays: Vec<Tick>,
    dropped_in_recovery: u64,
    zero_filled: u64,
}

pub const TX_EPID: u16 = 1;

impl HostPipeline {
    pub fn new(cfg: &ScenarioConfig, tx_offset: Tick, blocks_total: u64, seed: u64) -> Result<Self, HarnessError> {
        let ports = (0..cfg.ports)
            .map(|_| {
                let mut tx = TxStream::new(TxConfig {
                    dst_epid: TX_EPID,
                    capacity_bytes: cfg.device.capacity_bytes,
                    spp: cfg.spp(),
                });
                tx.start();
                Port { rx: RxStream::new(), tx }
            })
            .collect();
        Ok(HostPipeline {
            ports,
            engine: engine_for(cfg)?,
            spp: cfg.spp() as Tick,
            tx_offset,
            processing: cfg.processing,
            rng: ChaCha8Rng::seed_from_u64(seed),
            gather: BTreeMap::new(),
            queue: VecDeque::new(),
            last_ready: 0,
            blocks_total,
            blocks_queued: 0,
            delays: Vec::new(),
            dropped_in_recovery: 0,
            zero_filled: 0,
        })
    }

    /// Handles one packet from `port`'s device. Returns packets to send back
    /// to that device right away (recovery commands, released credit holds).
    pub fn on_uplink(&mut self, port: usize, bytes: &[u8], now: Tick) -> Result<Vec<Vec<u8>>, HarnessError> {
        let pkt = ChdrPacket::decode(bytes)?;
        let mut replies = Vec::new();
        match pkt.header.pkt_type {
            PacketType::StreamStatus => {
                let status = StreamStatus::from_packet(&pkt)?;
                let tx = &mut self.ports[port].tx;
                if let Some(cmd) = tx.on_stream_status(&status, now)? {
                    replies.push(cmd.encode()?);
                }
                if let Some(data) = tx.poll_pending()? {
                    replies.push(data.encode()?);
                }
            }
            PacketType::DataWithTs | PacketType::DataNoTs => {
                let rx = self.ports[port].rx.rx_poll(&pkt)?;
                if let Some(gap) = rx.gap {
                    for m in (1..=gap.missing as Tick).rev() {
                        let ts = rx.block.start_tick.saturating_sub(m * self.spp);
                        self.zero_filled += 1;
                        self.collect(port, SampleBlock::zeros(self.spp as usize, ts), now)?;
                    }
                }
                self.collect(port, rx.block, now)?;
            }
            other => return Err(HarnessError::Stream(StreamError::BadPacketType(other))),
        }
        Ok(replies)
    }

    fn collect(&mut self, port: usize, block: SampleBlock, now: Tick) -> Result<(), HarnessError> {
        let index = block.start_tick / self.spp;
        if index >= self.blocks_total {
            return Ok(());
        }
        let n = self.ports.len();
        let g = self
            .gather
            .entry(block.start_tick)
            .or_insert_with(|| Gather { blocks: vec![None; n], arrival: 0 });
        g.blocks[port] = Some(block.samples);
        g.arrival = g.arrival.max(now);
        if g.blocks.iter().all(Option::is_some) {
            let g = self.gather.remove(&block.start_tick).unwrap();
            let xs: Vec<Vec<Complex64>> = g.blocks.into_iter().map(Option::unwrap).collect();
            let outputs = self.engine.process(&xs)?;
            let ready = g.arrival.max(self.last_ready) + self.processing.sample(&mut self.rng);
            self.last_ready = ready;
            self.delays.push(ready - g.arrival);
            self.blocks_queued += 1;
            self.queue.push_back(Job {
                ready,
                rx_ts: block.start_tick,
                last: index + 1 == self.blocks_total,
                outputs,
            });
        }
        Ok(())
    }

    /// Tx packets whose processing has finished by `now`, as `(port, bytes)`.
    pub fn drain(&mut self, now: Tick) -> Result<Vec<(usize, Vec<u8>)>, HarnessError> {
        let mut out = Vec::new();
        while self.queue.front().is_some_and(|j| j.ready <= now) {
            let job = self.queue.pop_front().unwrap();
            for (p, samples) in job.outputs.into_iter().enumerate() {
                let block = SampleBlock::new(samples, job.rx_ts + self.tx_offset);
                let tx = &mut self.ports[p].tx;
                let sent = if job.last { tx.tx_end_burst(block) } else { tx.tx_send_block(block) };
                match sent {
                    Ok(Some(pkt)) => out.push((p, pkt.encode()?)),
                    Ok(None) => {}
                    Err(StreamError::NotStreaming(_)) => self.dropped_in_recovery += 1,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Ok(out)
    }

    pub fn next_ready(&self) -> Option<Tick> {
        self.queue.front().map(|j| j.ready)
    }

    pub fn finished(&self) -> bool {
        self.blocks_queued == self.blocks_total && self.queue.is_empty()
    }

    /// Per-packet host delays (finish minus arrival), in ticks.
    pub fn delays(&self) -> &[Tick] {
        &self.delays
    }

    pub fn counters(&self) -> OpCounters {
        self.engine.counters()
    }

    pub fn tx_stats(&self) -> Vec<TxStats> {
        self.ports.iter().map(|p| p.tx.stats()).collect()
    }

    pub fn rx_gaps(&self) -> u64 {
        self.ports.iter().map(|p| p.rx.gap_count()).sum()
    }

    pub fn pending_depth(&self) -> usize {
        self.ports.iter().map(|p| p.tx.pending_depth()).max().unwrap_or(0)
    }

    pub fn dropped_in_recovery(&self) -> u64 {
        self.dropped_in_recovery
    }

    pub fn zero_filled(&self) -> u64 {
        self.zero_filled
    }
}
