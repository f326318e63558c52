#![allow(dead_code)]

use std::collections::VecDeque;

use chdr_rt::chdr::{data_packet, SampleBlock};
use chdr_rt::stream::{RxStream, StatusCode, StreamStatus, TxConfig, TxStream};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// y[t] = Σ_k h[k] x[t-k], truncated to x.len().
pub fn direct(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    (0..x.len())
        .map(|t| (0..h.len().min(t + 1)).map(|k| h[k] * x[t - k]).sum())
        .collect()
}

pub fn rel_rms(got: &[Complex64], want: &[Complex64]) -> f64 {
    let err: f64 = got.iter().zip(want).map(|(a, b)| (a - b).norm_sqr()).sum();
    let sig: f64 = want.iter().map(|b| b.norm_sqr()).sum();
    (err / sig).sqrt()
}

/// Unit-energy complex Gaussian taps.
pub fn random_cir(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    let mut h: Vec<Complex64> = (0..len)
        .map(|_| {
            let (u1, u2): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
            Complex64::from_polar((-2.0 * u1.ln()).sqrt(), 2.0 * std::f64::consts::PI * u2)
        })
        .collect();
    let norm = h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    h.iter_mut().for_each(|c| *c /= norm);
    h
}

#[derive(Debug, Default)]
pub struct FlowTrace {
    pub capacity: u64,
    pub submitted: u64,
    pub emitted: u64,
    /// Peak of the device-side byte count kept by the trace itself.
    pub max_buffered: u64,
    pub max_pending: usize,
}

/// Drives a TxStream with random submissions, retirements, stale and
/// duplicated acknowledgements. Buffered bytes are tracked from the emitted
/// packets, independently of the stream's own ledger.
pub fn flow_trace(seed: u64, submissions: u64) -> FlowTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spp = 64;
    let capacity = rng.gen_range(1..12) * 272 + rng.gen_range(0..272);
    let mut tx = TxStream::new(TxConfig { dst_epid: 1, capacity_bytes: capacity, spp });
    tx.start();
    let mut buffered: VecDeque<u64> = VecDeque::new();
    let mut retired = 0u64;
    let mut acks_sent: Vec<u64> = vec![0];
    let mut t = FlowTrace { capacity, ..Default::default() };
    let mut tick = 0u64;

    let record = |pkt: Option<chdr_rt::chdr::ChdrPacket>, buffered: &mut VecDeque<u64>, t: &mut FlowTrace| {
        if let Some(p) = pkt {
            buffered.push_back(p.encode().unwrap().len() as u64);
            t.emitted += 1;
        }
        t.max_buffered = t.max_buffered.max(buffered.iter().sum());
    };

    while t.submitted < submissions {
        match rng.gen_range(0..10) {
            0..=5 => {
                let len = rng.gen_range(1..=2 * spp);
                let pkt = tx.tx_send_block(SampleBlock::zeros(len, tick)).unwrap();
                tick += len as u64;
                t.submitted += 1;
                record(pkt, &mut buffered, &mut t);
            }
            6..=8 => {
                for _ in 0..rng.gen_range(0..=buffered.len()) {
                    retired += buffered.pop_front().unwrap();
                }
                acks_sent.push(retired);
                let status = StreamStatus { code: StatusCode::Ok, seq: 0, capacity_bytes: capacity, acked_bytes: retired, tick };
                tx.on_stream_status(&status, tick).unwrap();
                let pkt = tx.poll_pending().unwrap();
                record(pkt, &mut buffered, &mut t);
            }
            _ => {
                // an old acknowledgement arriving late
                let stale = acks_sent[rng.gen_range(0..acks_sent.len())];
                let status = StreamStatus { code: StatusCode::Ok, seq: 0, capacity_bytes: capacity, acked_bytes: stale, tick };
                tx.on_stream_status(&status, tick).unwrap();
            }
        }
        t.max_pending = t.max_pending.max(tx.pending_depth());
    }
    t
}

/// Sends `n` packets starting at a random sequence number, dropping a random
/// subset that excludes the first and last. Returns (dropped, gap_count).
pub fn rx_drop_trial(rng: &mut ChaCha8Rng) -> (u64, u64) {
    let n = rng.gen_range(2..200u64);
    let p = rng.gen_range(0.0..0.9);
    let start: u16 = rng.gen();
    let mut rx = RxStream::new();
    let mut dropped = 0;
    let mut reported = 0u64;
    for k in 0..n {
        if k != 0 && k != n - 1 && rng.gen_bool(p) {
            dropped += 1;
            continue;
        }
        let seq = start.wrapping_add(k as u16);
        let pkt = data_packet(&SampleBlock::zeros(4, 4 * k), seq, 0, true).unwrap();
        let b = rx.rx_poll(&pkt).unwrap();
        if let Some(g) = b.gap {
            assert_eq!(g.after.wrapping_add(g.missing).wrapping_add(1), seq);
            reported += g.missing as u64;
        }
    }
    assert_eq!(reported, rx.gap_count());
    (dropped, rx.gap_count())
}
