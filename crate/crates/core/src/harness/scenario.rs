use num_complex::Complex64;

use crate::device::{AnalogTaps, DeviceSim, FaultPlan};
use crate::transport::{SimNet, SimNetConfig, Tick, Transport};
use crate::upols::ChannelMatrix;

use super::config::{Mode, ScenarioConfig};
use super::host::HostPipeline;
use super::latency::LatencyModel;
use super::metrology::{self, channel_error_db, convolve, estimate_channel, zadoff_chu};
use super::report::{ChannelCheck, PortEpisode, ScenarioReport};
use super::{histogram, HarnessError};

/// Per-link RNG streams are split off the scenario seed.
fn link_seed(seed: u64, port: usize, down: bool) -> u64 {
    seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(2 * port as u64 + down as u64 + 1))
}

fn net(base: &SimNetConfig, seed: u64) -> SimNet {
    SimNet::new(SimNetConfig { seed, ..base.clone() })
}

/// Input for every port: port `i` sends one priming period plus the averaged
/// periods in its own time slot and is silent otherwise.
fn excitation_inputs(cfg: &ScenarioConfig, period: &[Complex64], total: usize) -> Vec<Vec<Complex64>> {
    let span = cfg.sounding_span();
    (0..cfg.ports)
        .map(|i| {
            let mut x = vec![Complex64::default(); total];
            for (k, s) in x.iter_mut().enumerate().skip(i * span).take(span) {
                *s = period[(k - i * span) % period.len()];
            }
            x
        })
        .collect()
}

fn identity(ports: usize) -> ChannelMatrix {
    let one = vec![Complex64::new(1.0, 0.0)];
    let zero = vec![Complex64::default()];
    ChannelMatrix {
        taps: (0..ports)
            .map(|j| (0..ports).map(|i| if i == j { one.clone() } else { zero.clone() }).collect())
            .collect(),
    }
}

/// Runs one scenario on the virtual clock.
///
/// Every tick, in this order: the devices advance and hand their ready
/// packets to the uplinks; then uplink deliveries, finished host work and
/// downlink deliveries are exchanged until nothing moves within the tick.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport, HarnessError> {
    cfg.validate()?;
    let model = LatencyModel::from_config(cfg);
    let spp = cfg.spp();
    let period = zadoff_chu(cfg.excitation_len(), cfg.excitation.root, cfg.excitation.amplitude);
    let blocks_total = match cfg.duration_blocks {
        0 => (cfg.ports * cfg.sounding_span()).div_ceil(spp) + 1,
        n => n,
    };
    let total_ticks = blocks_total * spp;
    let inputs = excitation_inputs(cfg, &period, total_ticks);

    let mut devices = Vec::with_capacity(cfg.ports);
    let mut ups = Vec::with_capacity(cfg.ports);
    let mut downs = Vec::with_capacity(cfg.ports);
    for (p, x) in inputs.iter().enumerate() {
        let mut dev = DeviceSim::new(cfg.device.clone())?;
        dev.set_input(x.clone());
        if p == 0 {
            dev.set_faults(FaultPlan { delay_tx: cfg.late_packets.iter().copied().collect() });
        }
        devices.push(dev);
        ups.push(net(&cfg.uplink, link_seed(cfg.seed, p, false)));
        downs.push(net(&cfg.downlink, link_seed(cfg.seed, p, true)));
    }
    let mut host = HostPipeline::new(cfg, model.tx_offset(), blocks_total as u64, cfg.seed)?;

    let end: Tick = total_ticks as Tick + model.tx_offset() + model.dac_delay + 1;
    for t in 0..=end {
        for (dev, up) in devices.iter_mut().zip(ups.iter_mut()) {
            for pkt in dev.advance(t) {
                up.send(&pkt, t);
            }
        }
        loop {
            let mut moved = false;
            for p in 0..cfg.ports {
                while let Some(bytes) = ups[p].poll(t) {
                    moved = true;
                    for reply in host.on_uplink(p, &bytes, t)? {
                        downs[p].send(&reply, t);
                    }
                }
            }
            for (p, bytes) in host.drain(t)? {
                moved = true;
                downs[p].send(&bytes, t);
            }
            for p in 0..cfg.ports {
                while let Some(bytes) = downs[p].poll(t) {
                    moved = true;
                    for reply in devices[p].receive(&bytes)? {
                        ups[p].send(&reply, t);
                    }
                }
            }
            if !moved {
                break;
            }
        }
    }

    let episodes: Vec<PortEpisode> = devices
        .iter()
        .enumerate()
        .flat_map(|(port, d)| d.episodes().iter().map(move |e| PortEpisode { port, episode: *e }))
        .collect();
    let device_stats = devices.iter().map(DeviceSim::stats).collect();
    let taps: Vec<AnalogTaps> = devices.into_iter().map(DeviceSim::into_taps).collect();

    let truth = match (cfg.mode, &cfg.cir) {
        (Mode::LtiEmulation, Some(cir)) => cir.clone(),
        _ => identity(cfg.ports),
    };
    let reference: Vec<Complex64> = (0..cfg.ports)
        .map(|i| convolve(&taps[i].input_trace, truth.get(0, i)))
        .fold(vec![Complex64::default(); taps[0].input_trace.len()], |acc, y| {
            acc.iter().zip(&y).map(|(a, b)| a + b).collect()
        });
    let a2a = metrology::measure_lag(&reference, &taps[0].output_trace, cfg.device.sample_rate);
    let align = a2a.as_ref().map_or(model.predicted_a2a(), |m| m.lag_ticks) as usize;

    let n = period.len();
    let span = cfg.sounding_span();
    let mut channel = Vec::new();
    for i in 0..cfg.ports {
        let start = i * span + n + align;
        for (j, tap) in taps.iter().enumerate() {
            let mut seg = vec![Complex64::default(); cfg.excitation.periods * n];
            for (k, s) in seg.iter_mut().enumerate() {
                *s = tap.output_trace.get(start + k).copied().unwrap_or_default();
            }
            let h = truth.get(j, i);
            let est = estimate_channel(&period, &seg, truth.len())?;
            channel.push(ChannelCheck { output: j, input: i, error_db: channel_error_db(&est, h) });
        }
    }

    let to_us = |t: Tick| model.to_us(t);
    let delays_us: Vec<f64> = host.delays().iter().map(|&d| to_us(d)).collect();
    let hist = histogram::histogram(&delays_us, cfg.bin_width_us)?;

    Ok(ScenarioReport {
        mode: cfg.mode,
        ports: cfg.ports,
        spp,
        seed: cfg.seed,
        model,
        a2a: a2a.ok(),
        histogram: hist,
        episodes,
        recovery_exchanges: host.tx_stats().iter().map(|s| s.recovery_requests).sum(),
        rtt_ticks: cfg.uplink.latency + cfg.downlink.latency,
        channel,
        counters: host.counters(),
        tx: host.tx_stats(),
        device: device_stats,
        rx_gaps: host.rx_gaps(),
        zero_filled: host.zero_filled(),
        dropped_in_recovery: host.dropped_in_recovery(),
        taps,
    })
}
