//! Scenario runner and metrology.
//!
//! A scenario wires one simulated device per port to a [`HostPipeline`]
//! through simulated links and steps everything on the virtual clock. The
//! device input is a Zadoff-Chu sounding sequence; the report compares the
//! measured analog-to-analog latency with [`LatencyModel`] and the channel
//! estimated from the output taps with the emulated one.

mod config;
mod histogram;
mod host;
mod latency;
pub mod metrology;
pub mod realtime;
mod report;
mod scenario;

use thiserror::Error;

pub use config::{ExcitationConfig, Mode, Precision, ProcessingModel, ScenarioConfig};
pub use histogram::{histogram, DelayHistogram, DEFAULT_BIN_WIDTH_US};
pub use host::{engine_for, BlockEngine, HostPipeline};
pub use latency::LatencyModel;
pub use metrology::{estimate_channel, measure_a2a, A2aMeasurement};
pub use report::{ChannelCheck, PortEpisode, ScenarioReport};
pub use scenario::run_scenario;

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("no input to summarize")]
    EmptyInput,
    #[error("no signal: correlation peak {peak:.3} below threshold")]
    NoSignal { peak: f64 },
    #[error("excitation spectrum has nulls (min/mean power {min_over_mean:.2e})")]
    IllConditioned { min_over_mean: f64 },
    #[error(transparent)]
    Codec(#[from] crate::chdr::CodecError),
    #[error(transparent)]
    Payload(#[from] crate::stream::PayloadError),
    #[error(transparent)]
    Stream(#[from] crate::stream::StreamError),
    #[error(transparent)]
    Device(#[from] crate::device::DeviceError),
    #[error(transparent)]
    Upols(#[from] crate::upols::UpolsError),
    #[error("io: {0}")]
    Io(String),
}
