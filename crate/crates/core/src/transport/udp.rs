use std::io::{self, ErrorKind};
use std::net::{SocketAddr, UdpSocket};

use super::{Tick, Transport};

/// One CHDR packet per datagram over a non-blocking socket.
///
/// Ignores the virtual-time arguments; delivery is whatever the kernel does.
#[derive(Debug)]
pub struct UdpTransport {
    socket: UdpSocket,
    peer: SocketAddr,
    buf: Vec<u8>,
    send_errors: u64,
}

impl UdpTransport {
    pub fn bind(local: SocketAddr, peer: SocketAddr) -> io::Result<Self> {
        let socket = UdpSocket::bind(local)?;
        socket.set_nonblocking(true)?;
        Ok(UdpTransport { socket, peer, buf: vec![0; 65536], send_errors: 0 })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    pub fn set_peer(&mut self, peer: SocketAddr) {
        self.peer = peer;
    }

    pub fn send_errors(&self) -> u64 {
        self.send_errors
    }
}

impl Transport for UdpTransport {
    fn send(&mut self, pkt: &[u8], _at: Tick) {
        if self.socket.send_to(pkt, self.peer).is_err() {
            self.send_errors += 1;
        }
    }

    fn poll(&mut self, _at: Tick) -> Option<Vec<u8>> {
        match self.socket.recv_from(&mut self.buf) {
            Ok((n, _)) => Some(self.buf[..n].to_vec()),
            Err(e) if e.kind() == ErrorKind::WouldBlock => None,
            Err(_) => None,
        }
    }
}
