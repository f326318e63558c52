use std::fmt::Write as _;

use super::HarnessError;

/// Matches the granularity of the published delay histogram.
pub const DEFAULT_BIN_WIDTH_US: f64 = 0.087;

/// Fixed-width histogram of per-packet delays, bins starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayHistogram {
    pub bin_width_us: f64,
    pub counts: Vec<u64>,
    pub total: u64,
    pub min_us: f64,
    pub max_us: f64,
    pub p50_us: f64,
    pub p99_us: f64,
    pub p9999_us: f64,
}

impl DelayHistogram {
    pub fn bin_start(&self, i: usize) -> f64 {
        i as f64 * self.bin_width_us
    }

    /// Worst observed delay.
    pub fn worst_case_us(&self) -> f64 {
        self.max_us
    }

    /// `bin_start_us,count`, one row per bin up to the last occupied one.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_start_us,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(s, "{:.3},{c}", self.bin_start(i)).unwrap();
        }
        s
    }
}

fn bin_index(v: f64, width: f64) -> usize {
    // the epsilon keeps values sitting on a bin edge (0.3 / 0.1) in the upper bin
    (v / width + 1e-9).floor() as usize
}

/// Nearest-rank percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

pub fn histogram(delays_us: &[f64], bin_width_us: f64) -> Result<DelayHistogram, HarnessError> {
    if delays_us.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    if !(bin_width_us > 0.0) {
        return Err(HarnessError::Config(format!("bin width must be positive, got {bin_width_us}")));
    }
    if let Some(bad) = delays_us.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(HarnessError::Config(format!("delay {bad} is not a finite non-negative value")));
    }
    let mut sorted = delays_us.to_vec();
    sorted.sort_by(f64::total_cmp);
    let max = *sorted.last().unwrap();
    let mut counts = vec![0u64; bin_index(max, bin_width_us) + 1];
    for &d in delays_us {
        counts[bin_index(d, bin_width_us)] += 1;
    }
    Ok(DelayHistogram {
        bin_width_us,
        counts,
        total: delays_us.len() as u64,
        min_us: sorted[0],
        max_us: max,
        p50_us: percentile(&sorted, 0.50),
        p99_us: percentile(&sorted, 0.99),
        p9999_us: percentile(&sorted, 0.9999),
    })
}
