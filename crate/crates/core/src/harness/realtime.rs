//! Wall-clock measurements. Results depend on the host machine and are not
//! deterministic; nothing here runs on the virtual clock.

use std::net::{Ipv4Addr, SocketAddr};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chdr::{data_packet, ChdrPacket, PacketType, SampleBlock};
use crate::transport::{Transport, UdpTransport};
use crate::upols::{ChannelMatrix, OpCounters};

use super::config::{Mode, Precision, ScenarioConfig};
use super::histogram::{histogram, DelayHistogram};
use super::host::engine_for;
use super::HarnessError;

fn random_cir(rng: &mut ChaCha8Rng, ports: usize, len: usize) -> ChannelMatrix {
    ChannelMatrix {
        taps: (0..ports)
            .map(|_| {
                (0..ports)
                    .map(|_| (0..len).map(|_| Complex64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1))).collect())
                    .collect()
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub block_len: usize,
    pub cir_len: usize,
    pub ports: usize,
    pub blocks: u64,
    pub counters: OpCounters,
    pub elapsed: Duration,
}

impl BenchReport {
    pub fn ns_per_block(&self) -> f64 {
        self.elapsed.as_nanos() as f64 / self.blocks.max(1) as f64
    }

    /// Sustained throughput per port, in samples per second.
    pub fn samples_per_sec(&self) -> f64 {
        (self.blocks * self.block_len as u64) as f64 / self.elapsed.as_secs_f64().max(1e-12)
    }

    pub fn to_text(&self) -> String {
        let k = &self.counters;
        format!(
            "upols bench   B={} L={} ports={}x{} blocks={}\n\
             time          {:.0} ns/block, {:.1} MS/s per port\n\
             transforms    fwd={} inv={} per_block={:.2} macs/block={}\n",
            self.block_len,
            self.cir_len,
            self.ports,
            self.ports,
            self.blocks,
            self.ns_per_block(),
            self.samples_per_sec() / 1e6,
            k.forward_transforms,
            k.inverse_transforms,
            k.transforms() as f64 / k.blocks.max(1) as f64,
            k.spectral_macs / k.blocks.max(1),
        )
    }
}

/// Times the UPOLS engine on random data.
pub fn bench_upols(
    block_len: usize,
    cir_len: usize,
    ports: usize,
    blocks: u64,
    precision: Precision,
    seed: u64,
) -> Result<BenchReport, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = ScenarioConfig {
        mode: Mode::LtiEmulation,
        ports,
        cir: Some(random_cir(&mut rng, ports, cir_len)),
        precision,
        ..Default::default()
    };
    cfg.device.spp = block_len;
    cfg.validate()?;
    let mut engine = engine_for(&cfg)?;
    let input: Vec<Vec<Complex64>> = (0..ports)
        .map(|_| (0..block_len).map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).collect())
        .collect();
    let start = Instant::now();
    for _ in 0..blocks {
        std::hint::black_box(engine.process(std::hint::black_box(&input))?);
    }
    Ok(BenchReport { block_len, cir_len, ports, blocks, counters: engine.counters(), elapsed: start.elapsed() })
}

#[derive(Debug, Clone)]
pub struct RealtimeConfig {
    pub packets: usize,
    pub spp: usize,
    pub mode: Mode,
    /// SISO CIR for `Mode::LtiEmulation`.
    pub cir: Option<Vec<Complex64>>,
    pub bin_width_us: f64,
    /// Give up on a packet after this long without a reply.
    pub timeout: Duration,
}

impl Default for RealtimeConfig {
    fn default() -> Self {
        RealtimeConfig {
            packets: 10_000,
            spp: 256,
            mode: Mode::PassThrough,
            cir: None,
            bin_width_us: super::DEFAULT_BIN_WIDTH_US,
            timeout: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RealtimeReport {
    /// Host receive-to-send time per packet, monotonic clock.
    pub histogram: DelayHistogram,
    pub round_trip: DelayHistogram,
    pub lost: usize,
}

/// Ping-pong over loopback UDP: a device thread sends one Rx packet at a
/// time, a busy-polling host thread processes it and sends the Tx packet
/// back.
pub fn run_udp_loopback(cfg: &RealtimeConfig) -> Result<RealtimeReport, HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io(e.to_string());
    let any = SocketAddr::from((Ipv4Addr::LOCALHOST, 0));
    let mut host_sock = UdpTransport::bind(any, any).map_err(io)?;
    let mut dev_sock = UdpTransport::bind(any, host_sock.local_addr().map_err(io)?).map_err(io)?;
    host_sock.set_peer(dev_sock.local_addr().map_err(io)?);

    let mut scenario = ScenarioConfig {
        mode: cfg.mode,
        cir: cfg.cir.clone().map(ChannelMatrix::siso),
        precision: Precision::Single,
        ..Default::default()
    };
    scenario.device.spp = cfg.spp;
    scenario.validate()?;
    let mut engine = engine_for(&scenario)?;

    let stop = Arc::new(AtomicBool::new(false));
    let host_stop = stop.clone();
    let host = std::thread::spawn(move || -> Result<Vec<f64>, HarnessError> {
        let mut delays = Vec::new();
        let mut seq = 0u16;
        while !host_stop.load(Ordering::Relaxed) {
            let Some(bytes) = host_sock.poll(0) else {
                std::hint::spin_loop();
                continue;
            };
            let t0 = Instant::now();
            let pkt = ChdrPacket::decode(&bytes)?;
            if !matches!(pkt.pkt_type(), PacketType::DataWithTs) {
                continue;
            }
            let block = pkt.to_block()?;
            let y = engine.process(&[block.samples])?.swap_remove(0);
            let out = data_packet(&SampleBlock::new(y, block.start_tick), seq, 1, true)?.encode()?;
            seq = seq.wrapping_add(1);
            host_sock.send(&out, 0);
            delays.push(t0.elapsed().as_secs_f64() * 1e6);
        }
        Ok(delays)
    });

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rtts = Vec::with_capacity(cfg.packets);
    let mut lost = 0;
    for k in 0..cfg.packets {
        let samples = (0..cfg.spp).map(|_| Complex64::new(rng.gen_range(-0.5..0.5), 0.0)).collect();
        let pkt = data_packet(&SampleBlock::new(samples, (k * cfg.spp) as u64), k as u16, 0, true)?.encode()?;
        let t0 = Instant::now();
        dev_sock.send(&pkt, 0);
        loop {
            if dev_sock.poll(0).is_some() {
                rtts.push(t0.elapsed().as_secs_f64() * 1e6);
                break;
            }
            if t0.elapsed() > cfg.timeout {
                lost += 1;
                break;
            }
            std::hint::spin_loop();
        }
    }
    stop.store(true, Ordering::Relaxed);
    let delays = host.join().map_err(|_| HarnessError::Io("host thread panicked".into()))??;
    Ok(RealtimeReport {
        histogram: histogram(&delays, cfg.bin_width_us)?,
        round_trip: histogram(&rtts, cfg.bin_width_us)?,
        lost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_counts_transforms() {
        let r = bench_upols(64, 128, 2, 10, Precision::Single, 1).unwrap();
        assert_eq!(r.counters.blocks, 10);
        assert_eq!(r.counters.transforms(), 40);
        assert!(r.to_text().contains("per_block=4.00"));
    }

    #[test]
    fn loopback_round_trips() {
        let cfg = RealtimeConfig { packets: 50, spp: 64, ..Default::default() };
        let r = run_udp_loopback(&cfg).unwrap();
        assert_eq!(r.round_trip.total as usize + r.lost, 50);
        assert!(r.histogram.total >= r.round_trip.total);
    }
}
