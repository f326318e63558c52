//! Host-side stream handling: Tx state machine with credit flow control and
//! sequence-error recovery, Rx sequence tracking, and the control payloads
//! exchanged with the device.
//!
//! Each stream object is owned by one execution context. It can be moved to
//! another thread but is never shared; the intended deployment is a single
//! busy-polling loop per device that also runs the signal processing.

mod flow;
mod payload;
mod rx;
mod tx;

use thiserror::Error;

use crate::chdr::{CodecError, PacketType};

pub use flow::FlowControl;
pub use payload::{
    CmdOpcode, PayloadError, StatusCode, StreamCmd, StreamStatus, CMD_PAYLOAD_BYTES,
    STATUS_PAYLOAD_BYTES,
};
pub use rx::{GapReport, RxBlock, RxStream};
pub use tx::{TxConfig, TxState, TxStats, TxStream};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("Tx stream is not streaming (state {0:?})")]
    NotStreaming(TxState),
    #[error("unexpected {code:?} status in state {state:?}")]
    UnexpectedStatus { code: StatusCode, state: TxState },
    #[error("recovery response {got:?} does not match state {state:?}")]
    ProtocolViolation { state: TxState, got: StatusCode },
    #[error("{0:?} packet on the data path")]
    BadPacketType(PacketType),
    #[error("stale sequence number {got} (expected {expected})")]
    StaleSequence { expected: u16, got: u16 },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Payload(#[from] PayloadError),
}
