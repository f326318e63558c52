use num_complex::Complex;

use super::Real;

/// Frequency-domain delay line: a ring of past input-block spectra.
///
/// `get(p)` is the spectrum pushed `p` blocks ago (`get(0)` is the newest).
#[derive(Debug, Clone, PartialEq)]
pub struct Fdl<T> {
    slots: Vec<Vec<Complex<T>>>,
    head: usize,
}

impl<T: Real> Fdl<T> {
    pub fn new(partitions: usize, spectrum_len: usize) -> Self {
        assert!(partitions > 0);
        Fdl { slots: vec![vec![Complex::new(T::zero(), T::zero()); spectrum_len]; partitions], head: 0 }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Overwrites the oldest slot with `spectrum`, which becomes `get(0)`.
    pub fn push(&mut self, spectrum: &[Complex<T>]) {
        self.head = (self.head + self.slots.len() - 1) % self.slots.len();
        self.slots[self.head].copy_from_slice(spectrum);
    }

    pub fn get(&self, p: usize) -> &[Complex<T>] {
        &self.slots[(self.head + p) % self.slots.len()]
    }

    /// Extends to `partitions` slots. Existing history keeps its age; the new,
    /// older slots start out as zeros.
    pub fn grow(&mut self, partitions: usize) {
        if partitions <= self.slots.len() {
            return;
        }
        let spectrum_len = self.slots[0].len();
        let mut slots: Vec<_> = (0..self.slots.len()).map(|p| self.get(p).to_vec()).collect();
        slots.resize(partitions, vec![Complex::new(T::zero(), T::zero()); spectrum_len]);
        self.slots = slots;
        self.head = 0;
    }
}
