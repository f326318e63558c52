use num_complex::Complex;

use super::spectral::Spectral;
use super::{Real, UpolsError};

/// Frequency-domain partitions of an impulse response.
///
/// Partition `p` is the unnormalized `2B`-point transform of
/// `[h[pB .. (p+1)B], 0 ...]`; there are `ceil(L / B)` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedFilter<T> {
    block_len: usize,
    spectra: Vec<Vec<Complex<T>>>,
    source: Vec<Complex<T>>,
}

impl<T: Real> PartitionedFilter<T> {
    pub fn new(h: &[Complex<T>], block_len: usize) -> Result<Self, UpolsError> {
        let mut spectral = Spectral::new(block_len)?;
        Self::with_spectral(h, &mut spectral)
    }

    pub(crate) fn with_spectral(h: &[Complex<T>], spectral: &mut Spectral<T>) -> Result<Self, UpolsError> {
        if h.is_empty() {
            return Err(UpolsError::EmptyFilter);
        }
        let block_len = spectral.block_len();
        let spectra = h
            .chunks(block_len)
            .map(|seg| {
                let mut buf = vec![Complex::new(T::zero(), T::zero()); 2 * block_len];
                buf[..seg.len()].copy_from_slice(seg);
                spectral.forward_uncounted(&mut buf);
                buf
            })
            .collect();
        Ok(PartitionedFilter { block_len, spectra, source: h.to_vec() })
    }

    /// Zero-pads the impulse response to `partitions · B` taps worth of spectra.
    pub(crate) fn pad_to(&mut self, partitions: usize) {
        let zeros = vec![Complex::new(T::zero(), T::zero()); 2 * self.block_len];
        while self.spectra.len() < partitions {
            self.spectra.push(zeros.clone());
        }
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn partitions(&self) -> usize {
        self.spectra.len()
    }

    pub fn spectrum(&self, p: usize) -> &[Complex<T>] {
        &self.spectra[p]
    }

    pub fn spectra(&self) -> &[Vec<Complex<T>>] {
        &self.spectra
    }

    /// The impulse response the partitions were built from.
    pub fn source(&self) -> &[Complex<T>] {
        &self.source
    }
}

/// Splits `h` into `ceil(L / B)` frequency-domain partitions.
pub fn partition_filter<T: Real>(h: &[Complex<T>], block_len: usize) -> Result<PartitionedFilter<T>, UpolsError> {
    PartitionedFilter::new(h, block_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn delta(len: usize, at: usize) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); len];
        h[at] = Complex64::new(1.0, 0.0);
        h
    }

    #[test]
    fn l512_b256_gives_two_partitions() {
        let f = partition_filter(&vec![Complex64::new(0.1, 0.0); 512], 256).unwrap();
        assert_eq!(f.partitions(), 2);
        assert_eq!(f.spectrum(0).len(), 512);
    }

    #[test]
    fn unit_impulse_has_flat_spectrum() {
        let f = partition_filter(&delta(1, 0), 256).unwrap();
        assert_eq!(f.partitions(), 1);
        assert_eq!(f.spectrum(0).len(), 512);
        assert!(f.spectrum(0).iter().all(|c| (*c - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn ceiling_partition_count() {
        let f = partition_filter(&delta(257, 256), 256).unwrap();
        assert_eq!(f.partitions(), 2);
        // second segment is a single unit sample at its start: flat spectrum again
        assert!(f.spectrum(1).iter().all(|c| (*c - Complex64::new(1.0, 0.0)).norm() < 1e-12));
        assert!(f.spectrum(0).iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn rejects_empty_and_zero_block() {
        assert_eq!(partition_filter::<f64>(&[], 4), Err(UpolsError::EmptyFilter));
        assert_eq!(partition_filter(&delta(1, 0), 0), Err(UpolsError::ZeroBlockLen));
    }
}
