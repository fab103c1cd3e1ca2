use std::collections::BTreeMap;
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use otmd_core::comm::{CommError, Frame, Transport};

/// One end of an in-process mesh: a channel per directed metagraph edge.
#[derive(Debug)]
pub struct LocalTransport {
    index: u32,
    senders: BTreeMap<u32, Sender<Frame>>,
    receivers: BTreeMap<u32, Receiver<Frame>>,
    timeout: Duration,
}

/// Transports for workers `0..neighbors.len()`, where `neighbors[i]` lists
/// the neighbors of worker `i`. The relation must be symmetric.
pub fn local_mesh(neighbors: &[Vec<u32>], timeout: Duration) -> Vec<LocalTransport> {
    let mut ends: Vec<LocalTransport> = (0..neighbors.len() as u32)
        .map(|index| LocalTransport {
            index,
            senders: BTreeMap::new(),
            receivers: BTreeMap::new(),
            timeout,
        })
        .collect();
    for (i, ns) in neighbors.iter().enumerate() {
        for &j in ns {
            let (tx, rx) = channel();
            ends[i].senders.insert(j, tx);
            ends[j as usize].receivers.insert(i as u32, rx);
        }
    }
    ends
}

impl LocalTransport {
    pub fn index(&self) -> u32 {
        self.index
    }
}

impl Transport for LocalTransport {
    fn send(&mut self, frame: Frame) -> Result<(), CommError> {
        let to = frame.to;
        let tx = self.senders.get(&to).ok_or(CommError::UnknownPeer(to))?;
        tx.send(frame).map_err(|_| CommError::Disconnected { peer: to })
    }

    fn recv(&mut self, from: u32) -> Result<Frame, CommError> {
        let rx = self.receivers.get(&from).ok_or(CommError::UnknownPeer(from))?;
        rx.recv_timeout(self.timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => CommError::Timeout {
                peer: from,
                seconds: self.timeout.as_secs_f64(),
            },
            RecvTimeoutError::Disconnected => CommError::Disconnected { peer: from },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_exchanges_frames() {
        let mut mesh = local_mesh(&[vec![1], vec![0]], Duration::from_secs(1));
        let f = Frame {
            step: 3,
            from: 0,
            to: 1,
            values: vec![1.5, 0.0],
        };
        mesh[0].send(f.clone()).unwrap();
        assert_eq!(mesh[1].recv(0).unwrap(), f);
        assert!(matches!(mesh[0].send(Frame { to: 2, ..f }), Err(CommError::UnknownPeer(2))));
    }

    #[test]
    fn silent_peer_times_out() {
        let mut mesh = local_mesh(&[vec![1], vec![0]], Duration::from_millis(20));
        assert!(matches!(mesh[1].recv(0), Err(CommError::Timeout { peer: 0, .. })));
        let mut lone = mesh.pop().unwrap();
        drop(mesh);
        assert!(matches!(lone.recv(0), Err(CommError::Disconnected { peer: 0 })));
    }
}
