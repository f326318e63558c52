/// Credit ledger bounding unacknowledged Tx bytes by the device buffer size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowControl {
    capacity_bytes: u64,
    bytes_sent: u64,
    bytes_acked: u64,
}

impl FlowControl {
    pub fn new(capacity_bytes: u64) -> Self {
        FlowControl { capacity_bytes, bytes_sent: 0, bytes_acked: 0 }
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.capacity_bytes
    }

    pub fn bytes_sent(&self) -> u64 {
        self.bytes_sent
    }

    pub fn bytes_acked(&self) -> u64 {
        self.bytes_acked
    }

    pub fn in_flight(&self) -> u64 {
        self.bytes_sent - self.bytes_acked
    }

    pub fn available(&self) -> u64 {
        self.capacity_bytes - self.in_flight()
    }

    pub fn can_send(&self, bytes: u64) -> bool {
        bytes <= self.available()
    }

    /// Books a send. Callers check [`can_send`](Self::can_send) first.
    pub fn on_sent(&mut self, bytes: u64) {
        assert!(self.can_send(bytes), "credit overdraw");
        self.bytes_sent += bytes;
    }

    /// Applies a cumulative acknowledgement. Stale or over-reaching values are
    /// clamped so the ledger stays consistent.
    pub fn on_ack(&mut self, cumulative_acked: u64) {
        self.bytes_acked = self.bytes_acked.max(cumulative_acked.min(self.bytes_sent));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn credits_exhaust_and_refill() {
        let mut fc = FlowControl::new(100);
        fc.on_sent(60);
        assert!(!fc.can_send(50));
        fc.on_ack(20);
        assert!(fc.can_send(60));
        assert_eq!(fc.in_flight(), 40);
    }

    #[test]
    fn acks_are_monotone_and_clamped() {
        let mut fc = FlowControl::new(100);
        fc.on_sent(50);
        fc.on_ack(30);
        fc.on_ack(10);
        assert_eq!(fc.bytes_acked(), 30);
        fc.on_ack(500);
        assert_eq!(fc.bytes_acked(), 50);
    }
}
