use crate::transport::Tick;

use super::config::ScenarioConfig;

/// Named contributions to the analog-to-analog latency, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyModel {
    pub sample_rate_hz: u64,
    /// Filling one packet: `spp` samples.
    pub packetization: Tick,
    pub adc_delay: Tick,
    pub transport_rx: Tick,
    /// Nominal host processing budget per packet.
    pub processing: Tick,
    pub transport_tx: Tick,
    pub lead_margin: Tick,
    pub dac_delay: Tick,
}

impl LatencyModel {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        LatencyModel {
            sample_rate_hz: cfg.device.sample_rate.round() as u64,
            packetization: cfg.device.packetization(),
            adc_delay: cfg.device.adc_delay,
            transport_rx: cfg.uplink.latency,
            processing: cfg.processing.base,
            transport_tx: cfg.downlink.latency,
            lead_margin: cfg.lead_margin,
            dac_delay: cfg.device.dac_delay,
        }
    }

    /// Offset from an Rx packet timestamp to the Tx timestamp of its output.
    pub fn tx_offset(&self) -> Tick {
        self.packetization + self.adc_delay + self.transport_rx + self.processing + self.transport_tx + self.lead_margin
    }

    pub fn predicted_a2a(&self) -> Tick {
        self.tx_offset() + self.dac_delay
    }

    pub fn to_us(&self, ticks: Tick) -> f64 {
        ticks as f64 * 1e6 / self.sample_rate_hz as f64
    }

    /// `(name, ticks)` in signal-path order.
    pub fn components(&self) -> [(&'static str, Tick); 7] {
        [
            ("packetization", self.packetization),
            ("adc_delay", self.adc_delay),
            ("transport_rx", self.transport_rx),
            ("processing", self.processing),
            ("transport_tx", self.transport_tx),
            ("lead_margin", self.lead_margin),
            ("dac_delay", self.dac_delay),
        ]
    }
}
