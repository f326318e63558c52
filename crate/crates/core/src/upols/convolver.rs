use std::sync::Arc;

use num_complex::Complex;

use super::fdl::Fdl;
use super::filter::PartitionedFilter;
use super::handoff::FilterHandoff;
use super::spectral::{OpCounters, Spectral};
use super::{Real, UpolsError};

/// Single-channel UPOLS convolver.
#[derive(Debug)]
pub struct UpolsConvolver<T: Real> {
    spectral: Spectral<T>,
    filter: PartitionedFilter<T>,
    fdl: Fdl<T>,
    prev: Vec<Complex<T>>,
    window: Vec<Complex<T>>,
    acc: Vec<Complex<T>>,
    handoff: Option<Arc<FilterHandoff<T>>>,
}

impl<T: Real> UpolsConvolver<T> {
    pub fn new(h: &[Complex<T>], block_len: usize) -> Result<Self, UpolsError> {
        Self::with_capacity(h, block_len, 1)
    }

    /// Reserves Fdl history for filters of up to `max_partitions` partitions,
    /// so later swaps to longer filters see the full input history.
    pub fn with_capacity(h: &[Complex<T>], block_len: usize, max_partitions: usize) -> Result<Self, UpolsError> {
        let mut spectral = Spectral::new(block_len)?;
        let filter = PartitionedFilter::with_spectral(h, &mut spectral)?;
        let zero = Complex::new(T::zero(), T::zero());
        Ok(UpolsConvolver {
            fdl: Fdl::new(filter.partitions().max(max_partitions), 2 * block_len),
            filter,
            spectral,
            prev: vec![zero; block_len],
            window: vec![zero; 2 * block_len],
            acc: vec![zero; 2 * block_len],
            handoff: None,
        })
    }

    pub fn block_len(&self) -> usize {
        self.spectral.block_len()
    }

    pub fn partitions(&self) -> usize {
        self.filter.partitions()
    }

    pub fn fdl_len(&self) -> usize {
        self.fdl.len()
    }

    pub fn filter(&self) -> &PartitionedFilter<T> {
        &self.filter
    }

    pub fn counters(&self) -> OpCounters {
        self.spectral.counters
    }

    /// Replaces the whole filter; the next processed block uses it.
    pub fn set_filter(&mut self, h_new: &[Complex<T>]) -> Result<(), UpolsError> {
        let filter = PartitionedFilter::with_spectral(h_new, &mut self.spectral)?;
        self.install(filter)
    }

    pub fn install(&mut self, filter: PartitionedFilter<T>) -> Result<(), UpolsError> {
        if filter.block_len() != self.block_len() {
            return Err(UpolsError::BlockSizeMismatch { expected: self.block_len(), got: filter.block_len() });
        }
        self.fdl.grow(filter.partitions());
        self.filter = filter;
        Ok(())
    }

    /// Shares a slot through which another context can queue filters.
    pub fn handoff(&mut self) -> Arc<FilterHandoff<T>> {
        self.handoff.get_or_insert_with(|| Arc::new(FilterHandoff::new(self.spectral.block_len()))).clone()
    }

    pub fn process_block(&mut self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>, UpolsError> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.block_len()];
        self.process_block_into(x, &mut out)?;
        Ok(out)
    }

    pub fn process_block_into(&mut self, x: &[Complex<T>], out: &mut [Complex<T>]) -> Result<(), UpolsError> {
        let b = self.block_len();
        if x.len() != b {
            return Err(UpolsError::BlockSizeMismatch { expected: b, got: x.len() });
        }
        if out.len() != b {
            return Err(UpolsError::BlockSizeMismatch { expected: b, got: out.len() });
        }
        if let Some(f) = self.handoff.as_ref().and_then(|h| h.try_take()) {
            self.install(f)?;
        }

        self.window[..b].copy_from_slice(&self.prev);
        self.window[b..].copy_from_slice(x);
        self.prev.copy_from_slice(x);
        self.spectral.forward(&mut self.window);
        self.fdl.push(&self.window);

        let zero = Complex::new(T::zero(), T::zero());
        self.acc.fill(zero);
        for (p, h) in self.filter.spectra().iter().enumerate() {
            for ((a, xs), hs) in self.acc.iter_mut().zip(self.fdl.get(p)).zip(h) {
                *a = *a + *xs * *hs;
            }
        }
        self.spectral.counters.spectral_macs += (self.filter.partitions() * 2 * b) as u64;
        self.spectral.inverse(&mut self.acc);
        self.spectral.counters.blocks += 1;

        let scale = T::one() / T::from_usize(2 * b).unwrap();
        for (o, a) in out.iter_mut().zip(&self.acc[b..]) {
            *o = *a * scale;
        }
        Ok(())
    }
}
