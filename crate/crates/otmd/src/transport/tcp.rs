//! Length-prefixed frames over TCP. The byte layout is documented in
//! `docs/wire-format.md`.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use otmd_core::comm::{CommError, Frame, Transport};

/// Header: step u64, from u32, to u32, value count u32, little endian.
pub const HEADER_LEN: usize = 20;

/// Step index of the identification frame sent on a fresh connection.
pub const HELLO_STEP: u64 = u64::MAX - 1;

/// How long a failed send looks for an earlier error from the same peer.
const CAUSE_WAIT: Duration = Duration::from_millis(200);

/// Upper bound on the value count accepted from a header.
const MAX_VALUES: u32 = 1 << 27;

const RETRY: Duration = Duration::from_millis(20);

pub fn write_frame(w: &mut impl Write, f: &Frame) -> io::Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * f.values.len());
    buf.extend_from_slice(&f.step.to_le_bytes());
    buf.extend_from_slice(&f.from.to_le_bytes());
    buf.extend_from_slice(&f.to.to_le_bytes());
    buf.extend_from_slice(&(f.values.len() as u32).to_le_bytes());
    for v in &f.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Fill `buf`, returning how many bytes arrived before end of stream.
fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

fn io_err(peer: u32, e: io::Error) -> CommError {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => CommError::Timeout { peer, seconds: 0.0 },
        io::ErrorKind::ConnectionReset | io::ErrorKind::ConnectionAborted | io::ErrorKind::BrokenPipe => {
            CommError::Disconnected { peer }
        }
        _ => CommError::Io(format!("worker {peer}: {e}")),
    }
}

/// Read one frame. `Ok(None)` is a clean end of stream between frames;
/// a stream ending inside a frame is [`CommError::Truncated`].
pub fn read_frame(r: &mut impl Read, peer: u32) -> Result<Option<Frame>, CommError> {
    let mut head = [0u8; HEADER_LEN];
    let got = read_full(r, &mut head).map_err(|e| io_err(peer, e))?;
    if got == 0 {
        return Ok(None);
    }
    if got < HEADER_LEN {
        return Err(CommError::Truncated {
            peer,
            detail: format!("header ends after {got} of {HEADER_LEN} bytes"),
        });
    }
    let step = u64::from_le_bytes(head[0..8].try_into().unwrap());
    let from = u32::from_le_bytes(head[8..12].try_into().unwrap());
    let to = u32::from_le_bytes(head[12..16].try_into().unwrap());
    let len = u32::from_le_bytes(head[16..20].try_into().unwrap());
    if len > MAX_VALUES {
        return Err(CommError::Truncated {
            peer,
            detail: format!("header announces {len} values"),
        });
    }
    let mut body = vec![0u8; 8 * len as usize];
    let got = read_full(r, &mut body).map_err(|e| io_err(peer, e))?;
    if got < body.len() {
        return Err(CommError::Truncated {
            peer,
            detail: format!("payload ends after {got} of {} bytes", body.len()),
        });
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Some(Frame { step, from, to, values }))
}

/// Listening endpoints of all workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    pub endpoints: BTreeMap<u32, String>,
}

/// Roster file: `worker_index host port` per line, `#` comments.
pub fn parse_roster(text: &str) -> Result<Roster, CommError> {
    let mut endpoints = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let t = raw.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let bad = || CommError::Io(format!("roster line {}: expected `worker_index host port`", i + 1));
        if toks.len() != 3 {
            return Err(bad());
        }
        let index: u32 = toks[0].parse().map_err(|_| bad())?;
        let port: u16 = toks[2].parse().map_err(|_| bad())?;
        if endpoints.insert(index, format!("{}:{}", toks[1], port)).is_some() {
            return Err(CommError::DuplicateWorker(index));
        }
    }
    Ok(Roster { endpoints })
}

pub fn roster_to_text(r: &Roster) -> String {
    let mut s = String::from("# worker_index host port\n");
    for (i, addr) in &r.endpoints {
        let (host, port) = addr.rsplit_once(':').unwrap_or((addr, "0"));
        s.push_str(&format!("{i} {host} {port}\n"));
    }
    s
}

/// A worker's connections to its neighbors.
///
/// The lower index of each pair connects, the higher one accepts; the
/// connecting side identifies itself with a hello frame. Each connection
/// gets a reader thread so that peers never block on a full socket buffer.
#[derive(Debug)]
pub struct TcpTransport {
    index: u32,
    streams: BTreeMap<u32, TcpStream>,
    inbox: BTreeMap<u32, Receiver<Result<Frame, CommError>>>,
    timeout: Duration,
}

impl TcpTransport {
    /// Bind this worker's roster endpoint and connect to `neighbors`.
    pub fn connect(index: u32, roster: &Roster, neighbors: &[u32], timeout: Duration) -> Result<Self, CommError> {
        let addr = roster.endpoints.get(&index).ok_or(CommError::UnknownPeer(index))?;
        let listener = TcpListener::bind(addr).map_err(|e| CommError::Io(format!("bind {addr}: {e}")))?;
        Self::with_listener(index, listener, roster, neighbors, timeout)
    }

    /// As [`TcpTransport::connect`] with an already bound listener.
    pub fn with_listener(
        index: u32,
        listener: TcpListener,
        roster: &Roster,
        neighbors: &[u32],
        timeout: Duration,
    ) -> Result<Self, CommError> {
        let deadline = Instant::now() + timeout;
        let mut streams = BTreeMap::new();
        for &j in neighbors.iter().filter(|j| **j > index) {
            let addr = roster.endpoints.get(&j).ok_or(CommError::UnknownPeer(j))?;
            let mut s = connect_retry(addr, j, deadline, timeout)?;
            write_frame(
                &mut s,
                &Frame {
                    step: HELLO_STEP,
                    from: index,
                    to: j,
                    values: Vec::new(),
                },
            )
            .map_err(|e| io_err(j, e))?;
            debug!("worker {index}: connected to {j} at {addr}");
            streams.insert(j, s);
        }

        let mut expected: Vec<u32> = neighbors.iter().copied().filter(|j| *j < index).collect();
        listener
            .set_nonblocking(true)
            .map_err(|e| CommError::Io(e.to_string()))?;
        while !expected.is_empty() {
            let (mut s, _) = match listener.accept() {
                Ok(c) => c,
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(CommError::Timeout {
                            peer: expected[0],
                            seconds: timeout.as_secs_f64(),
                        });
                    }
                    thread::sleep(RETRY);
                    continue;
                }
                Err(e) => return Err(CommError::Io(e.to_string())),
            };
            s.set_nonblocking(false).map_err(|e| CommError::Io(e.to_string()))?;
            s.set_read_timeout(Some(deadline.saturating_duration_since(Instant::now()).max(RETRY)))
                .map_err(|e| CommError::Io(e.to_string()))?;
            let hello = match read_frame(&mut s, u32::MAX)? {
                Some(f) if f.step == HELLO_STEP && f.values.is_empty() => f,
                _ => {
                    warn!("worker {index}: dropping connection without a hello frame");
                    continue;
                }
            };
            if hello.to != index {
                return Err(CommError::Misrouted {
                    local: index,
                    from: hello.from,
                    to: hello.to,
                });
            }
            if streams.contains_key(&hello.from) {
                return Err(CommError::DuplicateWorker(hello.from));
            }
            let Some(pos) = expected.iter().position(|j| *j == hello.from) else {
                return Err(CommError::UnknownPeer(hello.from));
            };
            expected.remove(pos);
            debug!("worker {index}: accepted {}", hello.from);
            streams.insert(hello.from, s);
        }

        let mut inbox = BTreeMap::new();
        for (&j, s) in &streams {
            s.set_read_timeout(None).map_err(|e| CommError::Io(e.to_string()))?;
            s.set_nodelay(true).map_err(|e| CommError::Io(e.to_string()))?;
            let mut r = s.try_clone().map_err(|e| CommError::Io(e.to_string()))?;
            let (tx, rx) = channel();
            thread::spawn(move || loop {
                let item = match read_frame(&mut r, j) {
                    Ok(Some(f)) if f.from != j || f.to != index => Err(CommError::Misrouted {
                        local: index,
                        from: f.from,
                        to: f.to,
                    }),
                    Ok(Some(f)) => Ok(f),
                    Ok(None) => Err(CommError::Disconnected { peer: j }),
                    Err(e) => Err(e),
                };
                let last = item.is_err();
                if tx.send(item).is_err() || last {
                    break;
                }
            });
            inbox.insert(j, rx);
        }
        Ok(Self {
            index,
            streams,
            inbox,
            timeout,
        })
    }

    pub fn index(&self) -> u32 {
        self.index
    }
}

fn connect_retry(addr: &str, peer: u32, deadline: Instant, timeout: Duration) -> Result<TcpStream, CommError> {
    loop {
        let attempt = addr
            .to_socket_addrs()
            .map_err(|e| CommError::Io(format!("resolve {addr}: {e}")))?
            .next()
            .ok_or_else(|| CommError::Io(format!("resolve {addr}: no address")))
            .and_then(|a| TcpStream::connect_timeout(&a, RETRY.max(Duration::from_millis(200))).map_err(|e| CommError::Io(e.to_string())));
        match attempt {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() >= deadline => {
                debug!("connect to worker {peer} at {addr}: {e}");
                return Err(CommError::Timeout {
                    peer,
                    seconds: timeout.as_secs_f64(),
                });
            }
            Err(_) => thread::sleep(RETRY),
        }
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, frame: Frame) -> Result<(), CommError> {
        let to = frame.to;
        let s = self.streams.get_mut(&to).ok_or(CommError::UnknownPeer(to))?;
        let err = match write_frame(s, &frame) {
            Ok(()) => return Ok(()),
            Err(e) => io_err(to, e),
        };
        // a peer that broke the protocol and hung up usually left the reason
        // in the inbox; it says more than the failed write
        let rx = &self.inbox[&to];
        let deadline = Instant::now() + CAUSE_WAIT;
        while let Ok(item) = rx.recv_timeout(deadline.saturating_duration_since(Instant::now())) {
            match item {
                Err(CommError::Disconnected { .. }) | Ok(_) => continue,
                Err(cause) => return Err(cause),
            }
        }
        Err(err)
    }

    fn recv(&mut self, from: u32) -> Result<Frame, CommError> {
        let rx = self.inbox.get(&from).ok_or(CommError::UnknownPeer(from))?;
        match rx.recv_timeout(self.timeout) {
            Ok(item) => item,
            Err(RecvTimeoutError::Timeout) => Err(CommError::Timeout {
                peer: from,
                seconds: self.timeout.as_secs_f64(),
            }),
            Err(RecvTimeoutError::Disconnected) => Err(CommError::Disconnected { peer: from }),
        }
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        // half-close only: unread data must not turn the close into a reset
        for s in self.streams.values() {
            let _ = s.shutdown(Shutdown::Write);
        }
    }
}
