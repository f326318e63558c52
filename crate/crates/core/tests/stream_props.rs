mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn rx_gap_count_matches_drops() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let (dropped, gaps) = common::rx_drop_trial(&mut rng);
        assert_eq!(dropped, gaps);
    }
}

#[test]
fn credits_never_overdrawn() {
    for seed in 0..4 {
        let t = common::flow_trace(seed, 100_000);
        assert!(t.max_buffered <= t.capacity, "{t:?}");
        assert!(t.max_pending <= 1, "{t:?}");
        assert!(t.emitted > 10_000, "{t:?}");
    }
}
