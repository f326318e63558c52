use std::fmt::Write as _;

use crate::device::{AnalogTaps, DeviceStats, GapEpisode};
use crate::stream::TxStats;
use crate::transport::Tick;
use crate::upols::OpCounters;

use super::config::Mode;
use super::histogram::DelayHistogram;
use super::latency::LatencyModel;
use super::metrology::A2aMeasurement;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCheck {
    pub output: usize,
    pub input: usize,
    pub error_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortEpisode {
    pub port: usize,
    pub episode: GapEpisode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub mode: Mode,
    pub ports: usize,
    pub spp: usize,
    pub seed: u64,
    pub model: LatencyModel,
    /// `None` when the output carried no detectable copy of the input.
    pub a2a: Option<A2aMeasurement>,
    pub histogram: DelayHistogram,
    pub episodes: Vec<PortEpisode>,
    /// Recovery requests sent by the host, over all ports.
    pub recovery_exchanges: u64,
    pub rtt_ticks: Tick,
    pub channel: Vec<ChannelCheck>,
    pub counters: OpCounters,
    pub tx: Vec<TxStats>,
    pub device: Vec<DeviceStats>,
    pub rx_gaps: u64,
    pub zero_filled: u64,
    pub dropped_in_recovery: u64,
    /// Raw analog traces, one per port. Not part of the text or CSV output.
    pub taps: Vec<AnalogTaps>,
}

impl ScenarioReport {
    pub fn predicted_a2a_ticks(&self) -> Tick {
        self.model.predicted_a2a()
    }

    pub fn predicted_a2a_us(&self) -> f64 {
        self.model.to_us(self.predicted_a2a_ticks())
    }

    pub fn measured_a2a_us(&self) -> Option<f64> {
        self.a2a.map(|m| m.latency_us)
    }

    /// Measured minus predicted, in ticks.
    pub fn a2a_error_ticks(&self) -> Option<i64> {
        self.a2a.map(|m| m.lag_ticks as i64 - self.predicted_a2a_ticks() as i64)
    }

    pub fn worst_channel_error_db(&self) -> f64 {
        self.channel.iter().map(|c| c.error_db).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn transforms_per_block(&self) -> f64 {
        match self.counters.blocks {
            0 => 0.0,
            b => self.counters.transforms() as f64 / b as f64,
        }
    }

    /// True when every output sample inside every gap episode is zero.
    pub fn gaps_zero_filled(&self) -> bool {
        self.episodes.iter().all(|pe| {
            let e = &pe.episode;
            let (Some(from), Some(to)) = (e.first_missed, e.resumed_at) else { return true };
            let dac = self.model.dac_delay;
            (from..to).all(|t| self.taps[pe.port].output_at(t + dac).norm() == 0.0)
        })
    }

    pub fn to_text(&self) -> String {
        let us = |t: Tick| self.model.to_us(t);
        let mut s = String::new();
        writeln!(s, "scenario      {} ports={} spp={} fs={} Hz seed={}", self.mode.name(), self.ports, self.spp, self.model.sample_rate_hz, self.seed).unwrap();
        writeln!(s, "latency model").unwrap();
        for (name, t) in self.model.components() {
            writeln!(s, "  {name:<14}{:>10.3} us  ({t} ticks)", us(t)).unwrap();
        }
        writeln!(s, "  {:<14}{:>10.3} us  ({} ticks)", "predicted a2a", self.predicted_a2a_us(), self.predicted_a2a_ticks()).unwrap();
        match self.a2a {
            Some(m) => writeln!(
                s,
                "measured a2a  {:.3} us ({} ticks, error {} ticks, peak {:.4})",
                m.latency_us,
                m.lag_ticks,
                self.a2a_error_ticks().unwrap(),
                m.normalized_peak
            ),
            None => writeln!(s, "measured a2a  no signal"),
        }
        .unwrap();
        let h = &self.histogram;
        writeln!(
            s,
            "packet delay  n={} min={:.3} p50={:.3} p99={:.3} p99.99={:.3} max={:.3} us (bin {:.3} us)",
            h.total, h.min_us, h.p50_us, h.p99_us, h.p9999_us, h.max_us, h.bin_width_us
        )
        .unwrap();
        writeln!(s, "gap episodes  {} (recovery exchanges {}, rtt {:.3} us)", self.episodes.len(), self.recovery_exchanges, us(self.rtt_ticks)).unwrap();
        for pe in &self.episodes {
            let e = &pe.episode;
            let opt = |v: Option<Tick>| v.map_or("-".to_string(), |t| t.to_string());
            writeln!(
                s,
                "  port {} {:?} detected={} first_missed={} recovered={} resumed={} gap={} ticks",
                pe.port,
                e.cause,
                e.detected_at,
                opt(e.first_missed),
                opt(e.recovered_at),
                opt(e.resumed_at),
                opt(e.gap_len())
            )
            .unwrap();
        }
        for c in &self.channel {
            writeln!(s, "channel       h[{}][{}] error {:.2} dB", c.output, c.input, c.error_db).unwrap();
        }
        let k = &self.counters;
        writeln!(
            s,
            "engine        blocks={} fwd={} inv={} per_block={:.2} macs={}",
            k.blocks, k.forward_transforms, k.inverse_transforms, self.transforms_per_block(), k.spectral_macs
        )
        .unwrap();
        for (p, (tx, dev)) in self.tx.iter().zip(&self.device).enumerate() {
            writeln!(
                s,
                "port {p}        tx_sent={} denied={} superseded={} skipped={} max_in_flight={} | dev accepted={} discarded={} stale={} clipped={}",
                tx.packets_sent, tx.credit_denials, tx.superseded, tx.skipped, tx.max_in_flight,
                dev.tx_accepted, dev.tx_discarded, dev.tx_stale, dev.adc_clipped
            )
            .unwrap();
        }
        writeln!(s, "rx gaps       {} (zero-filled blocks {}, blocks dropped in recovery {})", self.rx_gaps, self.zero_filled, self.dropped_in_recovery).unwrap();
        s
    }

    /// `metric,value,unit` rows.
    pub fn to_csv(&self) -> String {
        let us = |t: Tick| self.model.to_us(t);
        let mut rows: Vec<(String, String, &str)> = vec![
            ("mode".into(), self.mode.name().into(), ""),
            ("ports".into(), self.ports.to_string(), "count"),
            ("spp".into(), self.spp.to_string(), "samples"),
            ("sample_rate".into(), self.model.sample_rate_hz.to_string(), "Hz"),
            ("seed".into(), self.seed.to_string(), ""),
        ];
        for (name, t) in self.model.components() {
            rows.push((name.into(), format!("{:.3}", us(t)), "us"));
        }
        rows.push(("predicted_a2a".into(), format!("{:.3}", self.predicted_a2a_us()), "us"));
        match self.a2a {
            Some(m) => {
                rows.push(("measured_a2a".into(), format!("{:.3}", m.latency_us), "us"));
                rows.push(("a2a_error".into(), self.a2a_error_ticks().unwrap().to_string(), "ticks"));
            }
            None => rows.push(("measured_a2a".into(), "nan".into(), "us")),
        }
        let h = &self.histogram;
        for (name, v) in [("delay_min", h.min_us), ("delay_p50", h.p50_us), ("delay_p99", h.p99_us), ("delay_p9999", h.p9999_us), ("delay_max", h.max_us)] {
            rows.push((name.into(), format!("{v:.3}"), "us"));
        }
        rows.push(("packets".into(), h.total.to_string(), "count"));
        rows.push(("gap_episodes".into(), self.episodes.len().to_string(), "count"));
        rows.push(("recovery_exchanges".into(), self.recovery_exchanges.to_string(), "count"));
        let longest = self.episodes.iter().filter_map(|e| e.episode.gap_len()).max().unwrap_or(0);
        rows.push(("max_gap".into(), format!("{:.3}", us(longest)), "us"));
        rows.push(("rtt".into(), format!("{:.3}", us(self.rtt_ticks)), "us"));
        for c in &self.channel {
            rows.push((format!("channel_error_{}_{}", c.output, c.input), format!("{:.2}", c.error_db), "dB"));
        }
        rows.push(("transforms_per_block".into(), format!("{:.2}", self.transforms_per_block()), "count"));
        rows.push(("spectral_macs".into(), self.counters.spectral_macs.to_string(), "count"));
        rows.push(("rx_gaps".into(), self.rx_gaps.to_string(), "count"));

        let mut s = String::from("metric,value,unit\n");
        for (m, v, u) in rows {
            writeln!(s, "{m},{v},{u}").unwrap();
        }
        s
    }
}
