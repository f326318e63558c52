//! Packet transports with a non-blocking poll interface.
//!
//! [`SimNet`] is a deterministic link driven by the virtual clock; [`UdpTransport`]
//! moves the same packets over real datagrams.

mod clock;
mod sim;
mod udp;

pub use clock::{Tick, VirtualClock};
pub use sim::{SimNet, SimNetConfig, SimNetStats};
pub use udp::UdpTransport;

/// One direction of a packet link. Packets are opaque encoded CHDR buffers.
pub trait Transport {
    /// Fire-and-forget send at virtual time `at`.
    fn send(&mut self, pkt: &[u8], at: Tick);

    /// Returns the earliest packet deliverable at `at`, never blocking.
    fn poll(&mut self, at: Tick) -> Option<Vec<u8>>;
}
