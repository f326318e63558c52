use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use num_complex::Complex;

use super::filter::PartitionedFilter;
use super::{Real, UpolsError};

/// Single-slot mailbox for filters prepared outside the processing context.
///
/// At most one filter is pending and a newer offer replaces it. The
/// processing side only ever uses `try_lock`, so it never waits on a writer.
#[derive(Debug)]
pub struct FilterHandoff<T> {
    block_len: usize,
    slot: Mutex<Option<PartitionedFilter<T>>>,
    pending: AtomicBool,
}

impl<T: Real> FilterHandoff<T> {
    pub fn new(block_len: usize) -> Self {
        FilterHandoff { block_len, slot: Mutex::new(None), pending: AtomicBool::new(false) }
    }

    /// Partitions `h` on the caller's thread and queues it.
    pub fn offer(&self, h: &[Complex<T>]) -> Result<(), UpolsError> {
        let filter = PartitionedFilter::new(h, self.block_len)?;
        self.offer_partitioned(filter);
        Ok(())
    }

    pub fn offer_partitioned(&self, filter: PartitionedFilter<T>) {
        let mut slot = self.slot.lock().unwrap_or_else(|e| e.into_inner());
        *slot = Some(filter);
        self.pending.store(true, Ordering::Release);
    }

    pub fn is_pending(&self) -> bool {
        self.pending.load(Ordering::Acquire)
    }

    /// Non-blocking take. Returns `None` when nothing is queued or a writer
    /// currently holds the slot; the filter is then picked up a block later.
    pub fn try_take(&self) -> Option<PartitionedFilter<T>> {
        if !self.pending.load(Ordering::Acquire) {
            return None;
        }
        let mut slot = self.slot.try_lock().ok()?;
        self.pending.store(false, Ordering::Release);
        slot.take()
    }
}
