//! Neighbor exchange over the metagraph: fixed-length float messages laid
//! out by decoder maps, carried by any [`Transport`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::engine::{Commodity, FlowRecord, LaneGroupRef, NextLink, Slot};
use crate::ids::{ConnectionId, LinkId, VehicleTypeId};
use crate::partition::DecoderMap;

/// Step index reserved for the decoder-map handshake.
pub const HANDSHAKE_STEP: u64 = u64::MAX;

/// Floats per slot in a handshake payload.
const SLOT_FLOATS: usize = 5;

/// A message between two workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub step: u64,
    pub from: u32,
    pub to: u32,
    pub values: Vec<f64>,
}

/// Reliable, ordered, point-to-point delivery of frames.
pub trait Transport {
    fn send(&mut self, frame: Frame) -> Result<(), CommError>;
    /// Next frame from `from`, blocking up to the transport's timeout.
    fn recv(&mut self, from: u32) -> Result<Frame, CommError>;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CommError {
    #[error("decoder map mismatch with worker {peer}: {detail}")]
    DecoderMismatch { peer: u32, detail: String },
    #[error("message from worker {peer} has {got} values, expected {expected}")]
    LengthMismatch { peer: u32, expected: usize, got: usize },
    #[error("worker {peer} sent step {got} while at step {expected}")]
    StepMismatch { peer: u32, expected: u64, got: u64 },
    #[error("frame from worker {from} to {to} arrived at worker {local}")]
    Misrouted { local: u32, from: u32, to: u32 },
    #[error("timed out after {seconds} s waiting for worker {peer}")]
    Timeout { peer: u32, seconds: f64 },
    #[error("worker {peer} disconnected")]
    Disconnected { peer: u32 },
    #[error("truncated frame from worker {peer}: {detail}")]
    Truncated { peer: u32, detail: String },
    #[error("message from worker {peer}: slot {position} holds invalid value {value}")]
    InvalidValue { peer: u32, position: usize, value: f64 },
    #[error("no slot for flow on {slot} in message to worker {peer}")]
    UnknownSlot { peer: u32, slot: String },
    #[error("worker index {0} claimed twice")]
    DuplicateWorker(u32),
    #[error("no channel to worker {0}")]
    UnknownPeer(u32),
    #[error("{0}")]
    Io(String),
}

/// Agreed message layouts with one neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborChannel {
    pub local: u32,
    pub neighbor: u32,
    pub send: DecoderMap,
    pub recv: DecoderMap,
}

impl NeighborChannel {
    pub fn send_len(&self) -> usize {
        self.send.len()
    }

    pub fn recv_len(&self) -> usize {
        self.recv.len()
    }
}

fn push_slot(out: &mut Vec<f64>, s: &Slot) {
    out.extend_from_slice(&[
        s.connection.0 as f64,
        s.lane_group.link.0 as f64,
        s.lane_group.index as f64,
        s.commodity.vehicle_type.0 as f64,
        s.commodity.next.as_i64() as f64,
    ]);
}

fn as_u32(v: f64) -> Option<u32> {
    (v >= 0.0 && v <= u32::MAX as f64 && (v as u32) as f64 == v).then_some(v as u32)
}

fn read_slot(v: &[f64]) -> Option<Slot> {
    let next = if v[4] == -1.0 {
        NextLink::Exit
    } else {
        NextLink::Link(LinkId(as_u32(v[4])?))
    };
    Some(Slot {
        connection: ConnectionId(as_u32(v[0])?),
        lane_group: LaneGroupRef {
            link: LinkId(as_u32(v[1])?),
            index: as_u32(v[2])?,
        },
        commodity: Commodity::new(VehicleTypeId(as_u32(v[3])?), next),
    })
}

/// Handshake payload: both message lengths, then the send slots and the
/// receive slots, five floats each.
pub fn handshake_payload(channel: &NeighborChannel) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 + SLOT_FLOATS * (channel.send_len() + channel.recv_len()));
    out.push(channel.send_len() as f64);
    out.push(channel.recv_len() as f64);
    for s in channel.send.slots().iter().chain(channel.recv.slots()) {
        push_slot(&mut out, s);
    }
    out
}

/// Inverse of [`handshake_payload`]: `(sender's send slots, sender's receive slots)`.
pub fn parse_handshake(values: &[f64]) -> Result<(Vec<Slot>, Vec<Slot>), String> {
    if values.len() < 2 {
        return Err("handshake shorter than its header".into());
    }
    let send = as_u32(values[0]).ok_or("bad send length")? as usize;
    let recv = as_u32(values[1]).ok_or("bad receive length")? as usize;
    let body = &values[2..];
    if body.len() != SLOT_FLOATS * (send + recv) {
        return Err(format!(
            "handshake announces {send}+{recv} slots but carries {} values",
            body.len()
        ));
    }
    let slots = body
        .chunks_exact(SLOT_FLOATS)
        .map(read_slot)
        .collect::<Option<Vec<_>>>()
        .ok_or("malformed slot in handshake")?;
    let (a, b) = slots.split_at(send);
    Ok((a.to_vec(), b.to_vec()))
}

fn compare(peer: u32, what: &str, local: &DecoderMap, remote: &[Slot]) -> Result<(), CommError> {
    let remote = DecoderMap::new(local.sender, local.receiver, remote.to_vec());
    if local.len() != remote.len() {
        return Err(CommError::DecoderMismatch {
            peer,
            detail: format!(
                "{what} message length {} here, {} at worker {peer}",
                local.len(),
                remote.len()
            ),
        });
    }
    if let Some((i, a, b)) = local.first_difference(&remote) {
        let show = |s: Option<Slot>| s.map_or_else(|| String::from("none"), |s| format!("{s}"));
        return Err(CommError::DecoderMismatch {
            peer,
            detail: format!("{what} slot {i}: ({}) here, ({}) at worker {peer}", show(a), show(b)),
        });
    }
    Ok(())
}

/// Opens one channel per neighbor and cross-checks decoder maps.
///
/// `maps` holds `(neighbor, send map, receive map)`. Each side sends its
/// maps and verifies that the neighbor's send map equals its own receive map
/// and vice versa.
pub fn establish<T: Transport + ?Sized>(
    transport: &mut T,
    local: u32,
    maps: Vec<(u32, DecoderMap, DecoderMap)>,
) -> Result<Vec<NeighborChannel>, CommError> {
    let mut channels: Vec<NeighborChannel> = maps
        .into_iter()
        .map(|(neighbor, send, recv)| NeighborChannel {
            local,
            neighbor,
            send,
            recv,
        })
        .collect();
    channels.sort_by_key(|c| c.neighbor);
    if let Some(w) = channels.windows(2).find(|w| w[0].neighbor == w[1].neighbor) {
        return Err(CommError::DuplicateWorker(w[0].neighbor));
    }
    if channels.iter().any(|c| c.neighbor == local) {
        return Err(CommError::DuplicateWorker(local));
    }
    for c in &channels {
        transport.send(Frame {
            step: HANDSHAKE_STEP,
            from: local,
            to: c.neighbor,
            values: handshake_payload(c),
        })?;
    }
    for c in &channels {
        let frame = receive_from(transport, local, c.neighbor)?;
        if frame.step != HANDSHAKE_STEP {
            return Err(CommError::StepMismatch {
                peer: c.neighbor,
                expected: HANDSHAKE_STEP,
                got: frame.step,
            });
        }
        let (their_send, their_recv) = parse_handshake(&frame.values).map_err(|detail| CommError::DecoderMismatch {
            peer: c.neighbor,
            detail,
        })?;
        compare(c.neighbor, "inbound", &c.recv, &their_send)?;
        compare(c.neighbor, "outbound", &c.send, &their_recv)?;
    }
    Ok(channels)
}

fn receive_from<T: Transport + ?Sized>(transport: &mut T, local: u32, from: u32) -> Result<Frame, CommError> {
    let frame = transport.recv(from)?;
    if frame.from != from || frame.to != local {
        return Err(CommError::Misrouted {
            local,
            from: frame.from,
            to: frame.to,
        });
    }
    Ok(frame)
}

/// Lays records out by the channel's send map; slots without flow hold 0.
pub fn encode(records: &[FlowRecord], map: &DecoderMap) -> Result<Vec<f64>, CommError> {
    let mut values = vec![0.0; map.len()];
    for r in records {
        let pos = map.position(&r.slot).ok_or_else(|| CommError::UnknownSlot {
            peer: map.receiver,
            slot: format!("{}", r.slot),
        })?;
        values[pos] += r.vehicles;
    }
    Ok(values)
}

/// Records for the nonzero slots of a message.
pub fn decode(values: &[f64], map: &DecoderMap) -> Result<Vec<FlowRecord>, CommError> {
    if values.len() != map.len() {
        return Err(CommError::LengthMismatch {
            peer: map.sender,
            expected: map.len(),
            got: values.len(),
        });
    }
    let mut out = Vec::new();
    for (i, (v, slot)) in values.iter().zip(map.slots()).enumerate() {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(CommError::InvalidValue {
                peer: map.sender,
                position: i,
                value: *v,
            });
        }
        if *v != 0.0 {
            out.push(FlowRecord {
                slot: *slot,
                vehicles: *v,
            });
        }
    }
    Ok(out)
}

/// Sends one message per channel and waits for one message per channel, all
/// for `step`. Results are in channel order.
pub fn exchange<T: Transport + ?Sized>(
    transport: &mut T,
    channels: &[NeighborChannel],
    outgoing: Vec<Vec<f64>>,
    step: u64,
) -> Result<Vec<Vec<f64>>, CommError> {
    debug_assert_eq!(channels.len(), outgoing.len());
    for (c, values) in channels.iter().zip(outgoing) {
        if values.len() != c.send_len() {
            return Err(CommError::LengthMismatch {
                peer: c.local,
                expected: c.send_len(),
                got: values.len(),
            });
        }
        transport.send(Frame {
            step,
            from: c.local,
            to: c.neighbor,
            values,
        })?;
    }
    let mut incoming = Vec::with_capacity(channels.len());
    for c in channels {
        let frame = receive_from(transport, c.local, c.neighbor)?;
        if frame.step != step {
            return Err(CommError::StepMismatch {
                peer: c.neighbor,
                expected: step,
                got: frame.step,
            });
        }
        if frame.values.len() != c.recv_len() {
            return Err(CommError::LengthMismatch {
                peer: c.neighbor,
                expected: c.recv_len(),
                got: frame.values.len(),
            });
        }
        incoming.push(frame.values);
    }
    Ok(incoming)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::{BTreeMap, VecDeque};

    fn slot(c: u32, link: u32, next: NextLink) -> Slot {
        Slot {
            connection: ConnectionId(c),
            lane_group: LaneGroupRef {
                link: LinkId(link),
                index: 0,
            },
            commodity: Commodity::new(VehicleTypeId(0), next),
        }
    }

    fn map4() -> DecoderMap {
        DecoderMap::new(
            0,
            1,
            vec![
                slot(1, 2, NextLink::Link(LinkId(3))),
                slot(1, 2, NextLink::Link(LinkId(4))),
                slot(2, 2, NextLink::Link(LinkId(3))),
                slot(2, 2, NextLink::Exit),
            ],
        )
    }

    /// In-memory loopback: frames queue per (from, to).
    #[derive(Default)]
    struct Mailboxes(BTreeMap<(u32, u32), VecDeque<Frame>>);

    struct Endpoint<'a> {
        me: u32,
        boxes: &'a core::cell::RefCell<Mailboxes>,
    }

    impl Transport for Endpoint<'_> {
        fn send(&mut self, frame: Frame) -> Result<(), CommError> {
            self.boxes
                .borrow_mut()
                .0
                .entry((frame.from, frame.to))
                .or_default()
                .push_back(frame);
            Ok(())
        }

        fn recv(&mut self, from: u32) -> Result<Frame, CommError> {
            self.boxes
                .borrow_mut()
                .0
                .get_mut(&(from, self.me))
                .and_then(|q| q.pop_front())
                .ok_or(CommError::Timeout { peer: from, seconds: 0.0 })
        }
    }

    #[test]
    fn empty_records_encode_to_zeros() {
        assert_eq!(encode(&[], &map4()).unwrap(), vec![0.0; 4]);
        assert!(decode(&[0.0; 4], &map4()).unwrap().is_empty());
    }

    #[test]
    fn single_record_lands_on_its_slot() {
        let r = FlowRecord {
            slot: slot(2, 2, NextLink::Exit),
            vehicles: 2.5,
        };
        assert_eq!(encode(&[r], &map4()).unwrap(), vec![0.0, 0.0, 0.0, 2.5]);
        assert_eq!(decode(&[0.0, 0.0, 0.0, 2.5], &map4()).unwrap(), vec![r]);
    }

    #[test]
    fn unknown_slot_and_bad_length() {
        let r = FlowRecord {
            slot: slot(9, 2, NextLink::Exit),
            vehicles: 1.0,
        };
        assert!(matches!(encode(&[r], &map4()), Err(CommError::UnknownSlot { .. })));
        assert!(matches!(decode(&[0.0; 3], &map4()), Err(CommError::LengthMismatch { .. })));
        assert!(matches!(
            decode(&[0.0, -1.0, 0.0, 0.0], &map4()),
            Err(CommError::InvalidValue { position: 1, .. })
        ));
    }

    #[test]
    fn handshake_round_trip() {
        let c = NeighborChannel {
            local: 0,
            neighbor: 1,
            send: map4(),
            recv: DecoderMap::new(1, 0, vec![slot(7, 8, NextLink::Exit)]),
        };
        let (s, r) = parse_handshake(&handshake_payload(&c)).unwrap();
        assert_eq!(s, c.send.slots());
        assert_eq!(r, c.recv.slots());
    }

    #[test]
    fn establish_and_exchange_between_two() {
        let boxes = core::cell::RefCell::new(Mailboxes::default());
        let mut a = Endpoint { me: 0, boxes: &boxes };
        let mut b = Endpoint { me: 1, boxes: &boxes };
        let back = DecoderMap::new(1, 0, vec![slot(5, 6, NextLink::Exit)]);
        // both sides send their handshakes before either receives
        for (t, me, peer, send, recv) in [
            (&mut a as &mut dyn Transport, 0, 1, map4(), back.clone()),
            (&mut b as &mut dyn Transport, 1, 0, back.clone(), map4()),
        ] {
            let c = NeighborChannel {
                local: me,
                neighbor: peer,
                send,
                recv,
            };
            t.send(Frame {
                step: HANDSHAKE_STEP,
                from: me,
                to: peer,
                values: handshake_payload(&c),
            })
            .unwrap();
        }
        let ca = {
            let frame = a.recv(1).unwrap();
            let (s, r) = parse_handshake(&frame.values).unwrap();
            assert_eq!(s, back.slots());
            assert_eq!(r, map4().slots());
            NeighborChannel {
                local: 0,
                neighbor: 1,
                send: map4(),
                recv: back.clone(),
            }
        };
        let cb = NeighborChannel {
            local: 1,
            neighbor: 0,
            send: back.clone(),
            recv: map4(),
        };
        let _ = b.recv(0).unwrap();

        a.send(Frame {
            step: 3,
            from: 0,
            to: 1,
            values: vec![1.0, 2.0, 3.0, 4.0],
        })
        .unwrap();
        let got_b = exchange(&mut b, &[cb], vec![vec![9.0]], 3).unwrap();
        assert_eq!(got_b, vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let frame = a.recv(1).unwrap();
        assert_eq!(frame.values, vec![9.0]);
        let _ = ca;
    }

    #[test]
    fn establish_reports_mismatched_slot() {
        let boxes = core::cell::RefCell::new(Mailboxes::default());
        let mut a = Endpoint { me: 0, boxes: &boxes };
        let mut b = Endpoint { me: 1, boxes: &boxes };
        let back = DecoderMap::new(1, 0, vec![]);
        let mut corrupted = map4().slots().to_vec();
        corrupted[1].commodity.next = NextLink::Link(LinkId(99));
        let corrupted = DecoderMap::new(0, 1, corrupted);
        // b's view of the inbound map is corrupted
        let fake = NeighborChannel {
            local: 1,
            neighbor: 0,
            send: back.clone(),
            recv: corrupted,
        };
        b.send(Frame {
            step: HANDSHAKE_STEP,
            from: 1,
            to: 0,
            values: handshake_payload(&fake),
        })
        .unwrap();
        let err = establish(&mut a, 0, vec![(1, map4(), back)]).unwrap_err();
        match err {
            CommError::DecoderMismatch { peer: 1, detail } => assert!(detail.contains("slot"), "{detail}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_channels_exchange_immediately() {
        let boxes = core::cell::RefCell::new(Mailboxes::default());
        let mut a = Endpoint { me: 0, boxes: &boxes };
        assert!(establish(&mut a, 0, vec![]).unwrap().is_empty());
        assert!(exchange(&mut a, &[], vec![], 0).unwrap().is_empty());
    }

    #[test]
    fn step_mismatch_detected() {
        let boxes = core::cell::RefCell::new(Mailboxes::default());
        let mut a = Endpoint { me: 0, boxes: &boxes };
        let mut b = Endpoint { me: 1, boxes: &boxes };
        let c = NeighborChannel {
            local: 0,
            neighbor: 1,
            send: DecoderMap::new(0, 1, vec![]),
            recv: DecoderMap::new(1, 0, vec![]),
        };
        b.send(Frame {
            step: 6,
            from: 1,
            to: 0,
            values: vec![],
        })
        .unwrap();
        assert_eq!(
            exchange(&mut a, &[c], vec![vec![]], 5),
            Err(CommError::StepMismatch {
                peer: 1,
                expected: 5,
                got: 6
            })
        );
    }
}
