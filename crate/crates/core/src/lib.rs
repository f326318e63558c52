pub mod chdr;
pub mod device;
pub mod harness;
pub mod stream;
pub mod transport;
pub mod upols;
