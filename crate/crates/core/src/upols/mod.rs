//! Uniformly partitioned overlap-save convolution.
//!
//! Blocks of `B` samples are filtered with `2B`-point transforms. The impulse
//! response is cut into `P = ceil(L / B)` segments whose spectra multiply the
//! matching entries of a frequency-domain delay line holding the last `P`
//! input spectra. Filters can be swapped whole between blocks.

pub mod cir;
mod convolver;
mod fdl;
mod filter;
mod handoff;
mod mimo;
mod spectral;

use num_complex::{Complex, Complex64};
use thiserror::Error;

pub use cir::{ChannelMatrix, CirError};
pub use convolver::UpolsConvolver;
pub use fdl::Fdl;
pub use filter::{partition_filter, PartitionedFilter};
pub use handoff::FilterHandoff;
pub use mimo::MimoEmulator;
pub use spectral::OpCounters;

/// Sample precision the engine runs in (`f32` or `f64`).
pub trait Real: rustfft::FftNum + num_traits::Float {}

impl<T: rustfft::FftNum + num_traits::Float> Real for T {}

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum UpolsError {
    #[error("block of {got} samples, engine expects {expected}")]
    BlockSizeMismatch { expected: usize, got: usize },
    #[error("{got} ports supplied, engine has {expected}")]
    PortCountMismatch { expected: usize, got: usize },
    #[error("impulse response is empty")]
    EmptyFilter,
    #[error("block length must be at least 1")]
    ZeroBlockLen,
}

pub fn from_c64<T: Real>(c: Complex64) -> Complex<T> {
    Complex::new(T::from_f64(c.re).unwrap(), T::from_f64(c.im).unwrap())
}

pub fn to_c64<T: Real>(c: Complex<T>) -> Complex64 {
    Complex64::new(c.re.to_f64().unwrap(), c.im.to_f64().unwrap())
}
