use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Tick, Transport};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimNetConfig {
    /// Fixed one-way delay in ticks.
    pub latency: Tick,
    /// Extra delay drawn uniformly from `0..=jitter_max` per packet.
    pub jitter_max: Tick,
    pub seed: u64,
    /// Zero-based send ordinals that are silently lost.
    pub drop_plan: BTreeSet<u64>,
    /// When false, jittered packets still leave in send order.
    pub reorder: bool,
}

impl SimNetConfig {
    pub fn with_latency(latency: Tick) -> Self {
        SimNetConfig { latency, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimNetStats {
    pub sent: u64,
    pub dropped: u64,
    pub delivered: u64,
}

#[derive(Debug)]
struct InFlight {
    deliver_at: Tick,
    ordinal: u64,
    bytes: Vec<u8>,
}

impl PartialEq for InFlight {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for InFlight {}
impl PartialOrd for InFlight {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for InFlight {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}
impl InFlight {
    fn key(&self) -> (Tick, u64) {
        (self.deliver_at, self.ordinal)
    }
}

/// Deterministic one-way link on the virtual clock.
///
/// `(config, seed, send trace)` fully determines the delivery trace.
#[derive(Debug)]
pub struct SimNet {
    cfg: SimNetConfig,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<InFlight>>,
    last_deliver_at: Tick,
    stats: SimNetStats,
}

impl SimNet {
    pub fn new(cfg: SimNetConfig) -> Self {
        SimNet {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            queue: BinaryHeap::new(),
            last_deliver_at: 0,
            stats: SimNetStats::default(),
        }
    }

    pub fn config(&self) -> &SimNetConfig {
        &self.cfg
    }

    pub fn stats(&self) -> SimNetStats {
        self.stats
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    /// Delivery tick of the next queued packet.
    pub fn next_delivery(&self) -> Option<Tick> {
        self.queue.peek().map(|Reverse(p)| p.deliver_at)
    }
}

impl Transport for SimNet {
    fn send(&mut self, pkt: &[u8], at: Tick) {
        let ordinal = self.stats.sent;
        self.stats.sent += 1;
        let jitter = if self.cfg.jitter_max > 0 {
            self.rng.gen_range(0..=self.cfg.jitter_max)
        } else {
            0
        };
        if self.cfg.drop_plan.contains(&ordinal) {
            self.stats.dropped += 1;
            return;
        }
        let mut deliver_at = at + self.cfg.latency + jitter;
        if !self.cfg.reorder {
            deliver_at = deliver_at.max(self.last_deliver_at);
        }
        self.last_deliver_at = self.last_deliver_at.max(deliver_at);
        self.queue.push(Reverse(InFlight { deliver_at, ordinal, bytes: pkt.to_vec() }));
    }

    fn poll(&mut self, at: Tick) -> Option<Vec<u8>> {
        match self.queue.peek() {
            Some(Reverse(p)) if p.deliver_at <= at => {
                self.stats.delivered += 1;
                self.queue.pop().map(|Reverse(p)| p.bytes)
            }
            _ => None,
        }
    }
}
