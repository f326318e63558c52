use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::device::AnalogTaps;
use crate::transport::Tick;

use super::HarnessError;

/// Correlation peaks below this fraction of the Cauchy-Schwarz bound count
/// as no signal.
pub const PEAK_THRESHOLD: f64 = 0.1;

/// Zadoff-Chu sequence of length `n` and root `u` (coprime with `n`), scaled
/// to `amplitude`. Constant magnitude in both time and frequency.
pub fn zadoff_chu(n: usize, root: u64, amplitude: f64) -> Vec<Complex64> {
    let (n64, q) = (n as u64, n as u64 % 2);
    (0..n64)
        .map(|k| {
            // phase index reduced mod 2n keeps the argument small for long sequences
            let m = (root % (2 * n64)) * ((k * (k + q)) % (2 * n64)) % (2 * n64);
            Complex64::from_polar(amplitude, -PI * m as f64 / n64 as f64)
        })
        .collect()
}

fn fft(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse { planner.plan_fft_inverse(buf.len()) } else { planner.plan_fft_forward(buf.len()) };
    plan.process(buf);
}

/// `r[lag] = Σ_n out[n + lag] · conj(reference[n])` for `lag` in `0..out.len()`.
pub fn xcorr(reference: &[Complex64], out: &[Complex64]) -> Vec<Complex64> {
    let n = (reference.len() + out.len()).next_power_of_two();
    let mut a = vec![Complex64::default(); n];
    let mut b = vec![Complex64::default(); n];
    a[..out.len()].copy_from_slice(out);
    b[..reference.len()].copy_from_slice(reference);
    fft(&mut a, false);
    fft(&mut b, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    fft(&mut a, true);
    let scale = 1.0 / n as f64;
    a.truncate(out.len());
    a.iter_mut().for_each(|c| *c *= scale);
    a
}

/// Linear convolution truncated to `x.len()`, computed by FFT.
pub fn convolve(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    if x.is_empty() || h.is_empty() {
        return vec![Complex64::default(); x.len()];
    }
    let n = (x.len() + h.len()).next_power_of_two();
    let mut a = vec![Complex64::default(); n];
    let mut b = vec![Complex64::default(); n];
    a[..x.len()].copy_from_slice(x);
    b[..h.len()].copy_from_slice(h);
    fft(&mut a, false);
    fft(&mut b, false);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    fft(&mut a, true);
    let scale = 1.0 / n as f64;
    a.truncate(x.len());
    a.iter_mut().for_each(|c| *c *= scale);
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A2aMeasurement {
    pub lag_ticks: Tick,
    pub latency_us: f64,
    /// Peak magnitude over `‖reference‖ · ‖output‖`.
    pub normalized_peak: f64,
}

/// Lag at which `output` best matches `reference`, non-negative lags only.
pub fn measure_lag(reference: &[Complex64], output: &[Complex64], sample_rate: f64) -> Result<A2aMeasurement, HarnessError> {
    let energy = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let bound = energy(reference) * energy(output);
    if bound == 0.0 {
        return Err(HarnessError::NoSignal { peak: 0.0 });
    }
    let r = xcorr(reference, output);
    let (lag, peak) = r
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.norm()))
        // first maximum wins on ties
        .fold((0, f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best });
    let normalized_peak = peak / bound;
    if normalized_peak < PEAK_THRESHOLD {
        return Err(HarnessError::NoSignal { peak: normalized_peak });
    }
    Ok(A2aMeasurement { lag_ticks: lag as Tick, latency_us: lag as f64 * 1e6 / sample_rate, normalized_peak })
}

/// Analog-to-analog latency between the input and output taps.
pub fn measure_a2a(taps: &AnalogTaps, sample_rate: f64) -> Result<A2aMeasurement, HarnessError> {
    measure_lag(&taps.input_trace, &taps.output_trace, sample_rate)
}

/// Estimates an `taps`-long impulse response by regularized spectral division.
///
/// `output` holds whole periods of the steady-state response to the periodic
/// `excitation` (one period); the per-period estimates are averaged.
pub fn estimate_channel(excitation: &[Complex64], output: &[Complex64], taps: usize) -> Result<Vec<Complex64>, HarnessError> {
    let n = excitation.len();
    if n == 0 || output.len() < n || taps == 0 || taps > n {
        return Err(HarnessError::Config(format!(
            "channel estimate needs a non-empty period of at least {taps} samples and one full output period"
        )));
    }
    let mut x = excitation.to_vec();
    fft(&mut x, false);
    let power: Vec<f64> = x.iter().map(|c| c.norm_sqr()).collect();
    let mean = power.iter().sum::<f64>() / n as f64;
    let min = power.iter().cloned().fold(f64::INFINITY, f64::min);
    if mean == 0.0 || min < 1e-6 * mean {
        return Err(HarnessError::IllConditioned { min_over_mean: if mean == 0.0 { 0.0 } else { min / mean } });
    }
    let eps = 1e-12 * mean;
    let periods = output.len() / n;
    let mut acc = vec![Complex64::default(); n];
    for seg in output.chunks_exact(n) {
        let mut y = seg.to_vec();
        fft(&mut y, false);
        for ((a, yk), (xk, pk)) in acc.iter_mut().zip(&y).zip(x.iter().zip(&power)) {
            *a += yk * xk.conj() / (pk + eps);
        }
    }
    fft(&mut acc, true);
    let scale = 1.0 / (n * periods) as f64;
    Ok(acc[..taps].iter().map(|c| c * scale).collect())
}

/// `20·log10(‖ĥ − h‖ / ‖h‖)`, zero-padding the shorter vector.
pub fn channel_error_db(estimate: &[Complex64], truth: &[Complex64]) -> f64 {
    let len = estimate.len().max(truth.len());
    let at = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or_default();
    let err: f64 = (0..len).map(|i| (at(estimate, i) - at(truth, i)).norm_sqr()).sum();
    let sig: f64 = truth.iter().map(|c| c.norm_sqr()).sum();
    10.0 * (err / sig).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shifted(x: &[Complex64], by: usize, len: usize) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); len];
        for (i, v) in x.iter().enumerate() {
            if i + by < len {
                y[i + by] = *v;
            }
        }
        y
    }

    #[test]
    fn zc_has_flat_spectrum() {
        for &(n, u) in &[(2048usize, 1u64), (2048, 7), (139, 5)] {
            let mut x = zadoff_chu(n, u, 0.2);
            assert!(x.iter().all(|c| (c.norm() - 0.2).abs() < 1e-12));
            fft(&mut x, false);
            let want = 0.2 * (n as f64).sqrt();
            assert!(x.iter().all(|c| (c.norm() - want).abs() < 1e-9 * want), "n={n} u={u}");
        }
    }

    #[test]
    fn synthetic_shifts() {
        let x = zadoff_chu(2048, 1, 0.2);
        for &(shift, us) in &[(0usize, 0.0), (2520, 25.2), (3100, 31.0)] {
            let y = shifted(&x, shift, 8192);
            let m = measure_lag(&x, &y, 100e6).unwrap();
            assert_eq!(m.lag_ticks, shift as Tick);
            assert!((m.latency_us - us).abs() < 1e-9);
            assert!(m.normalized_peak > 0.99);
        }
    }

    #[test]
    fn silence_is_no_signal() {
        let x = zadoff_chu(256, 1, 0.2);
        let taps = AnalogTaps { input_trace: x, output_trace: vec![Complex64::default(); 1024] };
        assert!(matches!(measure_a2a(&taps, 100e6), Err(HarnessError::NoSignal { .. })));
    }

    #[test]
    fn convolve_matches_direct() {
        let x: Vec<Complex64> = (0..50).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let h = vec![Complex64::new(0.5, 0.1), Complex64::new(0.0, -1.0), Complex64::new(2.0, 0.0)];
        let y = convolve(&x, &h);
        for t in 0..x.len() {
            let want: Complex64 = (0..h.len().min(t + 1)).map(|k| h[k] * x[t - k]).sum();
            assert!((y[t] - want).norm() < 1e-9);
        }
    }

    #[test]
    fn circular_estimate_recovers_taps() {
        let n = 256;
        let x = zadoff_chu(n, 3, 0.2);
        let h = vec![Complex64::new(0.8, 0.0), Complex64::new(0.0, 0.5), Complex64::new(-0.3, 0.1)];
        let periodic: Vec<Complex64> = x.iter().cycle().take(3 * n).cloned().collect();
        let y = convolve(&periodic, &h);
        let est = estimate_channel(&x, &y[n..], 8).unwrap();
        assert!(channel_error_db(&est, &h) < -200.0);
    }

    #[test]
    fn nulls_are_ill_conditioned() {
        let mut x = vec![Complex64::default(); 64];
        x[0] = Complex64::new(1.0, 0.0);
        x[1] = Complex64::new(1.0, 0.0);
        // 1 + z^-1 has a null at Nyquist
        assert!(matches!(estimate_channel(&x, &x, 4), Err(HarnessError::IllConditioned { .. })));
    }
}
