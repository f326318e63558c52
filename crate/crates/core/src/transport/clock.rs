/// Simulation time in sample periods.
pub type Tick = u64;

/// Sample-tick time base shared by every simulated entity of a scenario.
///
/// Two devices driven from one clock are tick-aligned, which stands in for a
/// shared 10 MHz reference and 1 PPS.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualClock {
    now: Tick,
    sample_rate: f64,
}

impl VirtualClock {
    pub fn new(sample_rate: f64) -> Self {
        assert!(sample_rate > 0.0, "sample rate must be positive");
        VirtualClock { now: 0, sample_rate }
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Moves the clock forward. Time never runs backwards.
    pub fn advance_to(&mut self, t: Tick) {
        assert!(t >= self.now, "virtual clock moved backwards: {} -> {}", self.now, t);
        self.now = t;
    }

    pub fn tick(&mut self) -> Tick {
        self.now += 1;
        self.now
    }

    pub fn ticks_to_us(&self, ticks: Tick) -> f64 {
        ticks as f64 / self.sample_rate * 1e6
    }

    pub fn ticks_to_us_f(&self, ticks: f64) -> f64 {
        ticks / self.sample_rate * 1e6
    }

    /// Rounds to the nearest tick.
    pub fn us_to_ticks(&self, us: f64) -> Tick {
        (us * 1e-6 * self.sample_rate).round().max(0.0) as Tick
    }
}
