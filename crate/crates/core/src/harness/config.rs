use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::device::DeviceConfig;
use crate::transport::{SimNetConfig, Tick};
use crate::upols::ChannelMatrix;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Received samples go straight back out.
    PassThrough,
    /// Received samples are filtered by the configured CIR matrix.
    LtiEmulation,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::PassThrough => "passthrough",
            Mode::LtiEmulation => "lti",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "passthrough" | "pass-through" | "pass" => Ok(Mode::PassThrough),
            "lti" | "lti-emulation" => Ok(Mode::LtiEmulation),
            _ => Err(HarnessError::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Single,
    Double,
}

impl std::str::FromStr for Precision {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" | "f32" => Ok(Precision::Single),
            "double" | "f64" => Ok(Precision::Double),
            _ => Err(HarnessError::Config(format!("unknown precision {s:?}"))),
        }
    }
}

/// Host per-packet processing time, in ticks.
///
/// Each packet takes `base` plus a uniform draw from `0..=jitter_max`; with
/// probability `outlier_prob` it takes `outlier` instead.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProcessingModel {
    pub base: Tick,
    pub jitter_max: Tick,
    pub outlier_prob: f64,
    pub outlier: Tick,
}

impl ProcessingModel {
    pub fn fixed(base: Tick) -> Self {
        ProcessingModel { base, ..Default::default() }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Tick {
        if self.outlier_prob > 0.0 && rng.gen_bool(self.outlier_prob.min(1.0)) {
            return self.outlier;
        }
        let jitter = if self.jitter_max > 0 { rng.gen_range(0..=self.jitter_max) } else { 0 };
        self.base + jitter
    }

    /// Largest delay the model can produce.
    pub fn worst_case(&self) -> Tick {
        let regular = self.base + self.jitter_max;
        if self.outlier_prob > 0.0 {
            regular.max(self.outlier)
        } else {
            regular
        }
    }
}

/// Sounding signal: one priming period followed by `periods` averaged ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationConfig {
    /// Sequence length; 0 picks `max(4·L, 2048)`.
    pub len: usize,
    pub periods: usize,
    pub amplitude: f64,
    pub root: u64,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        ExcitationConfig { len: 0, periods: 4, amplitude: 0.2, root: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mode: Mode,
    /// 1 (SISO) or 2 (2×2 MIMO, one device per port on a shared clock).
    pub ports: usize,
    /// Sample rate, samples per packet and device-side parameters.
    pub device: DeviceConfig,
    /// Required when `mode` is `LtiEmulation`; must be `ports × ports`.
    pub cir: Option<ChannelMatrix>,
    pub uplink: SimNetConfig,
    pub downlink: SimNetConfig,
    pub processing: ProcessingModel,
    /// Headroom added to every Tx timestamp.
    pub lead_margin: Tick,
    /// Extra delay (ticks) applied to the Tx packet with the given ordinal.
    pub late_packets: Vec<(u64, Tick)>,
    pub excitation: ExcitationConfig,
    pub precision: Precision,
    /// Blocks to stream; 0 sizes the run to the excitation.
    pub duration_blocks: usize,
    pub seed: u64,
    pub bin_width_us: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            mode: Mode::PassThrough,
            ports: 1,
            device: DeviceConfig::default(),
            cir: None,
            uplink: SimNetConfig::default(),
            downlink: SimNetConfig::default(),
            processing: ProcessingModel::default(),
            lead_margin: 0,
            late_packets: Vec::new(),
            excitation: ExcitationConfig::default(),
            precision: Precision::Single,
            duration_blocks: 0,
            seed: 0,
            bin_width_us: super::histogram::DEFAULT_BIN_WIDTH_US,
        }
    }
}

impl ScenarioConfig {
    pub fn spp(&self) -> usize {
        self.device.spp
    }

    pub fn cir_len(&self) -> usize {
        self.cir.as_ref().map_or(1, ChannelMatrix::len)
    }

    pub fn excitation_len(&self) -> usize {
        match self.excitation.len {
            0 => (4 * self.cir_len()).max(2048),
            n => n,
        }
    }

    /// Samples of excitation one input port needs.
    pub fn sounding_span(&self) -> usize {
        (self.excitation.periods + 1) * self.excitation_len()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        self.device.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(1..=2).contains(&self.ports) {
            return bad(format!("ports must be 1 or 2, got {}", self.ports));
        }
        if self.excitation.periods == 0 {
            return bad("excitation needs at least one averaged period".into());
        }
        if !(self.excitation.amplitude > 0.0 && self.excitation.amplitude <= 1.0) {
            return bad(format!("excitation amplitude {} outside (0, 1]", self.excitation.amplitude));
        }
        if self.excitation_len() < self.cir_len() {
            return bad(format!(
                "excitation of {} samples is shorter than the {}-tap CIR",
                self.excitation_len(),
                self.cir_len()
            ));
        }
        if !(self.bin_width_us > 0.0) {
            return bad(format!("histogram bin width must be positive, got {}", self.bin_width_us));
        }
        if !(0.0..=1.0).contains(&self.processing.outlier_prob) {
            return bad(format!("outlier probability {} outside [0, 1]", self.processing.outlier_prob));
        }
        match (self.mode, &self.cir) {
            (Mode::LtiEmulation, None) => return bad("lti mode needs a CIR".into()),
            (Mode::LtiEmulation, Some(cir)) => {
                if cir.n_in() != self.ports || cir.n_out() != self.ports {
                    return bad(format!(
                        "CIR is {}x{} but the scenario has {} port(s)",
                        cir.n_out(),
                        cir.n_in(),
                        self.ports
                    ));
                }
                if cir.is_empty() {
                    return bad("CIR has no taps".into());
                }
            }
            (Mode::PassThrough, Some(_)) => return bad("pass-through mode takes no CIR".into()),
            (Mode::PassThrough, None) => {}
        }
        Ok(())
    }
}
