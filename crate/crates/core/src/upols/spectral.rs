use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{Real, UpolsError};

/// Operation counters. Transforms are `2B`-point; a spectral MAC is one
/// complex multiply-accumulate in the partition sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub forward_transforms: u64,
    pub inverse_transforms: u64,
    pub spectral_macs: u64,
    pub blocks: u64,
}

impl OpCounters {
    pub fn transforms(&self) -> u64 {
        self.forward_transforms + self.inverse_transforms
    }

    /// Counts accumulated since `earlier`.
    pub fn since(&self, earlier: &OpCounters) -> OpCounters {
        OpCounters {
            forward_transforms: self.forward_transforms - earlier.forward_transforms,
            inverse_transforms: self.inverse_transforms - earlier.inverse_transforms,
            spectral_macs: self.spectral_macs - earlier.spectral_macs,
            blocks: self.blocks - earlier.blocks,
        }
    }
}

/// Counted `2B`-point forward/inverse transforms with shared scratch space.
pub(crate) struct Spectral<T: Real> {
    block_len: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    pub(crate) counters: OpCounters,
}

impl<T: Real> std::fmt::Debug for Spectral<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("block_len", &self.block_len)
            .field("counters", &self.counters)
            .finish()
    }
}

impl<T: Real> Spectral<T> {
    pub(crate) fn new(block_len: usize) -> Result<Self, UpolsError> {
        if block_len == 0 {
            return Err(UpolsError::ZeroBlockLen);
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(2 * block_len);
        let inv = planner.plan_fft_inverse(2 * block_len);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Ok(Spectral {
            block_len,
            fwd,
            inv,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
            counters: OpCounters::default(),
        })
    }

    pub(crate) fn block_len(&self) -> usize {
        self.block_len
    }

    pub(crate) fn forward(&mut self, buf: &mut [Complex<T>]) {
        self.counters.forward_transforms += 1;
        self.forward_uncounted(buf);
    }

    /// Filter preparation, kept out of the per-block counts.
    pub(crate) fn forward_uncounted(&mut self, buf: &mut [Complex<T>]) {
        self.fwd.process_with_scratch(buf, &mut self.scratch);
    }

    pub(crate) fn inverse(&mut self, buf: &mut [Complex<T>]) {
        self.counters.inverse_transforms += 1;
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }
}
