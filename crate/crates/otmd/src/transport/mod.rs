//! Transports for [`otmd_core::comm::Transport`]: in-process channels and
//! length-prefixed TCP.

pub mod local;
pub mod tcp;

pub use local::{local_mesh, LocalTransport};
pub use tcp::{parse_roster, read_frame, roster_to_text, write_frame, Roster, TcpTransport, HEADER_LEN, HELLO_STEP};

use otmd_core::comm::{CommError, Frame, Transport};

/// Transport for a worker without neighbors. Any use is a routing error.
#[derive(Debug, Default)]
pub struct NoTransport;

impl Transport for NoTransport {
    fn send(&mut self, frame: Frame) -> Result<(), CommError> {
        Err(CommError::UnknownPeer(frame.to))
    }

    fn recv(&mut self, from: u32) -> Result<Frame, CommError> {
        Err(CommError::UnknownPeer(from))
    }
}
