use num_complex::Complex;

use super::fdl::Fdl;
use super::filter::PartitionedFilter;
use super::spectral::{OpCounters, Spectral};
use super::{Real, UpolsError};

/// `n_out × n_in` UPOLS channel emulator.
///
/// One forward transform per input port and one inverse per output port per
/// block; every channel reuses the input spectra already in the port's Fdl.
#[derive(Debug)]
pub struct MimoEmulator<T: Real> {
    n_in: usize,
    n_out: usize,
    spectral: Spectral<T>,
    /// `filters[j][i]` maps input `i` to output `j`.
    filters: Vec<Vec<PartitionedFilter<T>>>,
    partitions: usize,
    fdls: Vec<Fdl<T>>,
    prev: Vec<Vec<Complex<T>>>,
    window: Vec<Complex<T>>,
    acc: Vec<Complex<T>>,
}

impl<T: Real> MimoEmulator<T> {
    /// `cirs[j][i]` is the impulse response from input `i` to output `j`.
    pub fn new(cirs: &[Vec<Vec<Complex<T>>>], block_len: usize) -> Result<Self, UpolsError> {
        let mut spectral = Spectral::new(block_len)?;
        let (n_out, n_in) = shape(cirs)?;
        let (filters, partitions) = partition_matrix(cirs, &mut spectral)?;
        let zero = Complex::new(T::zero(), T::zero());
        Ok(MimoEmulator {
            n_in,
            n_out,
            spectral,
            filters,
            partitions,
            fdls: (0..n_in).map(|_| Fdl::new(partitions, 2 * block_len)).collect(),
            prev: vec![vec![zero; block_len]; n_in],
            window: vec![zero; 2 * block_len],
            acc: vec![zero; 2 * block_len],
        })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn block_len(&self) -> usize {
        self.spectral.block_len()
    }

    pub fn partitions(&self) -> usize {
        self.partitions
    }

    pub fn counters(&self) -> OpCounters {
        self.spectral.counters
    }

    pub fn filter(&self, out: usize, input: usize) -> &PartitionedFilter<T> {
        &self.filters[out][input]
    }

    /// Replaces the whole filter matrix at the next block boundary. The port
    /// counts must stay the same.
    pub fn set_filters(&mut self, cirs: &[Vec<Vec<Complex<T>>>]) -> Result<(), UpolsError> {
        let (n_out, n_in) = shape(cirs)?;
        if (n_out, n_in) != (self.n_out, self.n_in) {
            return Err(UpolsError::PortCountMismatch { expected: self.n_out * self.n_in, got: n_out * n_in });
        }
        let (filters, partitions) = partition_matrix(cirs, &mut self.spectral)?;
        for fdl in &mut self.fdls {
            fdl.grow(partitions);
        }
        self.filters = filters;
        self.partitions = partitions;
        Ok(())
    }

    pub fn mimo_process(&mut self, xs: &[Vec<Complex<T>>]) -> Result<Vec<Vec<Complex<T>>>, UpolsError> {
        let b = self.block_len();
        let mut out = vec![vec![Complex::new(T::zero(), T::zero()); b]; self.n_out];
        self.mimo_process_into(xs, &mut out)?;
        Ok(out)
    }

    pub fn mimo_process_into(&mut self, xs: &[Vec<Complex<T>>], out: &mut [Vec<Complex<T>>]) -> Result<(), UpolsError> {
        let b = self.block_len();
        if xs.len() != self.n_in {
            return Err(UpolsError::PortCountMismatch { expected: self.n_in, got: xs.len() });
        }
        if out.len() != self.n_out {
            return Err(UpolsError::PortCountMismatch { expected: self.n_out, got: out.len() });
        }
        if let Some(bad) = xs.iter().chain(out.iter()).find(|v| v.len() != b) {
            return Err(UpolsError::BlockSizeMismatch { expected: b, got: bad.len() });
        }

        for (i, x) in xs.iter().enumerate() {
            self.window[..b].copy_from_slice(&self.prev[i]);
            self.window[b..].copy_from_slice(x);
            self.prev[i].copy_from_slice(x);
            self.spectral.forward(&mut self.window);
            self.fdls[i].push(&self.window);
        }

        let zero = Complex::new(T::zero(), T::zero());
        let scale = T::one() / T::from_usize(2 * b).unwrap();
        for (j, y) in out.iter_mut().enumerate() {
            self.acc.fill(zero);
            for (i, fdl) in self.fdls.iter().enumerate() {
                for (p, h) in self.filters[j][i].spectra().iter().enumerate() {
                    for ((a, xs), hs) in self.acc.iter_mut().zip(fdl.get(p)).zip(h) {
                        *a = *a + *xs * *hs;
                    }
                }
            }
            self.spectral.inverse(&mut self.acc);
            for (o, a) in y.iter_mut().zip(&self.acc[b..]) {
                *o = *a * scale;
            }
        }
        self.spectral.counters.spectral_macs += (self.n_out * self.n_in * self.partitions * 2 * b) as u64;
        self.spectral.counters.blocks += 1;
        Ok(())
    }
}

fn shape<T>(cirs: &[Vec<Vec<Complex<T>>>]) -> Result<(usize, usize), UpolsError> {
    let n_out = cirs.len();
    let n_in = cirs.first().map_or(0, Vec::len);
    if n_out == 0 || n_in == 0 {
        return Err(UpolsError::PortCountMismatch { expected: 1, got: 0 });
    }
    if let Some(row) = cirs.iter().find(|row| row.len() != n_in) {
        return Err(UpolsError::PortCountMismatch { expected: n_in, got: row.len() });
    }
    Ok((n_out, n_in))
}

fn partition_matrix<T: Real>(
    cirs: &[Vec<Vec<Complex<T>>>],
    spectral: &mut Spectral<T>,
) -> Result<(Vec<Vec<PartitionedFilter<T>>>, usize), UpolsError> {
    let mut filters = cirs
        .iter()
        .map(|row| row.iter().map(|h| PartitionedFilter::with_spectral(h, spectral)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let partitions = filters.iter().flatten().map(PartitionedFilter::partitions).max().unwrap_or(1);
    for f in filters.iter_mut().flatten() {
        f.pad_to(partitions);
    }
    Ok((filters, partitions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn block(seed: usize, b: usize) -> Vec<Complex64> {
        (0..b).map(|i| Complex64::new(((seed * 31 + i) % 17) as f64 * 0.05, ((seed + i * 7) % 5) as f64 * -0.1)).collect()
    }

    #[test]
    fn two_by_two_uses_four_transforms_per_block() {
        let cirs = vec![vec![vec![c(1.0); 10], vec![c(0.5); 3]], vec![vec![c(0.2)], vec![c(-1.0); 7]]];
        let mut emu = MimoEmulator::new(&cirs, 8).unwrap();
        assert_eq!(emu.partitions(), 2);
        for k in 0..5 {
            let before = emu.counters();
            emu.mimo_process(&[block(k, 8), block(k + 9, 8)]).unwrap();
            let d = emu.counters().since(&before);
            assert_eq!((d.forward_transforms, d.inverse_transforms), (2, 2));
        }
    }

    #[test]
    fn diagonal_deltas_pass_through() {
        let cirs = vec![vec![vec![c(1.0)], vec![c(0.0)]], vec![vec![c(0.0)], vec![c(1.0)]]];
        let mut emu = MimoEmulator::new(&cirs, 4).unwrap();
        let xs = vec![block(1, 4), block(2, 4)];
        let ys = emu.mimo_process(&xs).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            for (a, b) in x.iter().zip(y) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn port_count_checked() {
        let cirs = vec![vec![vec![c(1.0)], vec![c(1.0)]]];
        let mut emu = MimoEmulator::new(&cirs, 4).unwrap();
        assert_eq!(emu.n_out(), 1);
        assert_eq!(
            emu.mimo_process(&[block(0, 4)]),
            Err(UpolsError::PortCountMismatch { expected: 2, got: 1 })
        );
        assert!(emu.set_filters(&[vec![vec![c(1.0)]]]).is_err());
        let ragged = vec![vec![vec![c(1.0)], vec![c(1.0)]], vec![vec![c(1.0)]]];
        assert!(MimoEmulator::new(&ragged, 4).is_err());
    }
}
