//! Sequential and distributed runs: the per-step schedule, state merging,
//! metrics and timing.

mod bench;
mod merge;
mod report;
mod worker_file;

pub use bench::{run_benchmark, BenchReport, BenchRow};
pub use merge::{merge_metrics, merge_states, StateDumps};
pub use report::{ChannelReport, DurationStats, RunMetrics, StepMetrics, TimingReport, WorkerTiming};
pub use worker_file::{read_worker_output, worker_output_to_json};

use std::collections::BTreeMap;
use std::net::TcpListener;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, info};
use otmd_core::comm::{decode, encode, establish, exchange, CommError, Transport};
use otmd_core::engine::{EngineError, StateRow, StepTally, SubnetworkEngine};
use otmd_core::partition::{decoder_map, PartitionError, Subnetwork};
use otmd_core::scenario::{Scenario, ScenarioError};
use otmd_core::LinkId;

use crate::format::FormatError;
use crate::transport::{local_mesh, NoTransport, Roster, TcpTransport};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_DUMP_EVERY: u64 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub steps: u64,
    /// Dump cadence in steps; the final step is always dumped. `None`
    /// collects no state at all.
    pub dump_every: Option<u64>,
    pub timeout: Duration,
}

impl RunConfig {
    pub fn new(steps: u64) -> Self {
        Self {
            steps,
            dump_every: Some(DEFAULT_DUMP_EVERY),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    fn dumps_at(&self, step: u64) -> bool {
        match self.dump_every {
            None => false,
            Some(k) => step == self.steps || (k > 0 && step % k == 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    Local,
    Tcp,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("worker {worker}: {source}")]
    Engine { worker: u32, source: EngineError },
    #[error("worker {worker}: {source}")]
    Comm { worker: u32, source: CommError },
    #[error("merge: {0}")]
    Merge(String),
    #[error("worker {0} panicked")]
    WorkerPanic(u32),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("a worker process exited with code {0}")]
    Child(i32),
    #[error("{0}")]
    Io(String),
}

impl RunError {
    /// Process exit code: 2 input errors, 3 protocol errors, 4 internal
    /// errors, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Format(_) | RunError::Scenario(_) | RunError::Partition(_) | RunError::Config(_) => 2,
            RunError::Engine { source, .. } => match source {
                EngineError::MissingNeighborPacket { .. } | EngineError::ForeignRecord { .. } => 3,
                EngineError::Scenario(_) => 2,
                _ => 4,
            },
            RunError::Comm { .. } => 3,
            RunError::Merge(_) | RunError::WorkerPanic(_) => 4,
            RunError::Child(code) => *code,
            RunError::Io(_) => 1,
        }
    }

    /// Errors that are consequences of another worker failing first.
    fn is_secondary(&self) -> bool {
        matches!(
            self,
            RunError::Comm {
                source: CommError::Disconnected { .. } | CommError::Timeout { .. },
                ..
            }
        )
    }
}

/// Everything one worker produced.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerOutput {
    pub index: u32,
    pub owned_links: Vec<LinkId>,
    /// `(completed steps, rows of owned links)` at each dumped step.
    pub dumps: Vec<(u64, Vec<StateRow>)>,
    pub tallies: Vec<StepTally>,
    pub timing: WorkerTiming,
    pub channels: Vec<ChannelReport>,
}

/// Setup time spent before [`run_worker`] is called.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PriorSetup {
    pub load: f64,
    pub connect: f64,
}

/// Run one subnetwork to completion: per step, phase a, encode, exchange,
/// decode, phase b.
pub fn run_worker<T: Transport + ?Sized>(
    sub: &Subnetwork,
    transport: &mut T,
    cfg: &RunConfig,
    prior: PriorSetup,
) -> Result<WorkerOutput, RunError> {
    let start = Instant::now();
    let index = sub.index;
    let engine_err = |source| RunError::Engine { worker: index, source };
    let comm_err = |source| RunError::Comm { worker: index, source };

    let mut engine = SubnetworkEngine::new(sub).map_err(engine_err)?;
    let load = start.elapsed().as_secs_f64() + prior.load;

    let t = Instant::now();
    let maps: Vec<_> = sub
        .neighbors()
        .into_iter()
        .map(|peer| (peer, decoder_map(sub, index, peer), decoder_map(sub, peer, index)))
        .collect();
    let decoders = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let channels = establish(transport, index, maps).map_err(comm_err)?;
    let establish_time = t.elapsed().as_secs_f64();
    debug!(
        "worker {index}: {} channels, message lengths {:?}",
        channels.len(),
        channels.iter().map(|c| (c.neighbor, c.send_len(), c.recv_len())).collect::<Vec<_>>()
    );

    let mut reports: Vec<ChannelReport> = channels
        .iter()
        .map(|c| ChannelReport::new(index, c.neighbor, c.send_len(), c.recv_len()))
        .collect();
    let owned = engine.owned_links();
    let mut comm = Vec::with_capacity(cfg.steps as usize);
    let mut compute = 0.0;
    let mut output = 0.0;
    let mut tallies = Vec::with_capacity(cfg.steps as usize);
    let mut dumps = Vec::new();

    for _ in 0..cfg.steps {
        let step = engine.step();
        let t = Instant::now();
        let mut out = engine.phase_a().map_err(engine_err)?;
        let mut outgoing = Vec::with_capacity(channels.len());
        for c in &channels {
            let records = out.remove(&c.neighbor).unwrap_or_default();
            outgoing.push(encode(&records, &c.send).map_err(comm_err)?);
        }
        let sent: Vec<usize> = outgoing.iter().map(Vec::len).collect();
        compute += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let incoming = exchange(transport, &channels, outgoing, step).map_err(comm_err)?;
        comm.push(t.elapsed().as_secs_f64());

        let t = Instant::now();
        let mut received = BTreeMap::new();
        for (k, (c, values)) in channels.iter().zip(&incoming).enumerate() {
            reports[k].observe(sent[k], values.len());
            received.insert(c.neighbor, decode(values, &c.recv).map_err(comm_err)?);
        }
        let tally = engine.phase_b(received).map_err(engine_err)?;
        compute += t.elapsed().as_secs_f64();
        tallies.push(tally);

        let done = engine.step();
        if cfg.dumps_at(done) {
            let t = Instant::now();
            let rows = engine
                .dump()
                .into_iter()
                .filter(|r| owned.binary_search(&r.link).is_ok())
                .collect();
            dumps.push((done, rows));
            output += t.elapsed().as_secs_f64();
        }
    }

    let setup = load + prior.connect + decoders + establish_time;
    let timing = WorkerTiming {
        index,
        load,
        connect: prior.connect,
        decoders,
        establish: establish_time,
        setup,
        comm: DurationStats::of(&comm),
        compute,
        output,
        total: start.elapsed().as_secs_f64() + prior.load + prior.connect,
    };
    Ok(WorkerOutput {
        index,
        owned_links: owned,
        dumps,
        tallies,
        timing,
        channels: reports,
    })
}

/// Result of a complete run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub dumps: StateDumps,
    pub metrics: RunMetrics,
    pub timing: TimingReport,
    pub channels: Vec<ChannelReport>,
}

fn check_config(cfg: &RunConfig) -> Result<(), RunError> {
    if cfg.steps == 0 {
        return Err(RunError::Config("steps must be at least 1".into()));
    }
    Ok(())
}

/// Combine worker outputs into a run result.
pub fn finish(
    mode: &str,
    outputs: Vec<WorkerOutput>,
    links: &[LinkId],
    cfg: &RunConfig,
    wall: f64,
) -> Result<RunResult, RunError> {
    let dumps = merge_states(&outputs, links)?;
    let metrics = merge_metrics(&outputs)?;
    let timing = TimingReport {
        mode: mode.to_string(),
        n: outputs.len() as u32,
        steps: cfg.steps,
        workers: outputs.iter().map(|o| o.timing.clone()).collect(),
        wall,
    };
    let channels = outputs.into_iter().flat_map(|o| o.channels).collect();
    Ok(RunResult {
        dumps,
        metrics,
        timing,
        channels,
    })
}

/// The whole network on the calling thread.
pub fn run_sequential(scenario: &Scenario, cfg: &RunConfig) -> Result<RunResult, RunError> {
    check_config(cfg)?;
    let start = Instant::now();
    let sub = Subnetwork::whole(scenario);
    let out = run_worker(&sub, &mut NoTransport, cfg, PriorSetup::default())?;
    let links: Vec<LinkId> = scenario.links().keys().copied().collect();
    finish("sequential", vec![out], &links, cfg, start.elapsed().as_secs_f64())
}

/// Links of all fragments, each once.
pub fn all_links(subs: &[Subnetwork]) -> Vec<LinkId> {
    let mut links: Vec<LinkId> = subs.iter().flat_map(|s| s.fragment.links().keys().copied()).collect();
    links.sort();
    links.dedup();
    links
}

fn pick_error(errors: Vec<RunError>) -> RunError {
    let mut errors = errors;
    let pos = errors.iter().position(|e| !e.is_secondary()).unwrap_or(0);
    errors.swap_remove(pos)
}

fn join_workers(
    results: Vec<thread::Result<Result<WorkerOutput, RunError>>>,
) -> Result<Vec<WorkerOutput>, RunError> {
    let mut outputs = Vec::new();
    let mut errors = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(Ok(o)) => outputs.push(o),
            Ok(Err(e)) => errors.push(e),
            Err(_) => errors.push(RunError::WorkerPanic(i as u32)),
        }
    }
    if errors.is_empty() {
        Ok(outputs)
    } else {
        Err(pick_error(errors))
    }
}

/// One thread per subnetwork, connected by `kind`. TCP uses loopback
/// sockets within this process.
pub fn run_distributed(subs: &[Subnetwork], kind: TransportKind, cfg: &RunConfig) -> Result<RunResult, RunError> {
    check_config(cfg)?;
    let start = Instant::now();
    let neighbors: Vec<Vec<u32>> = subs.iter().map(|s| s.neighbors()).collect();
    let results = match kind {
        TransportKind::Local => {
            let mesh = local_mesh(&neighbors, cfg.timeout);
            thread::scope(|scope| {
                let handles: Vec<_> = subs
                    .iter()
                    .zip(mesh)
                    .map(|(sub, mut t)| scope.spawn(move || run_worker(sub, &mut t, cfg, PriorSetup::default())))
                    .collect();
                handles.into_iter().map(|h| h.join()).collect::<Vec<_>>()
            })
        }
        TransportKind::Tcp => {
            let listeners = subs
                .iter()
                .map(|_| TcpListener::bind("127.0.0.1:0"))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| RunError::Io(format!("bind: {e}")))?;
            let roster = Roster {
                endpoints: listeners
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (i as u32, l.local_addr().map(|a| a.to_string()).unwrap_or_default()))
                    .collect(),
            };
            let roster = &roster;
            thread::scope(|scope| {
                let handles: Vec<_> = subs
                    .iter()
                    .zip(listeners)
                    .zip(&neighbors)
                    .map(|((sub, l), ns)| {
                        scope.spawn(move || {
                            let t = Instant::now();
                            let mut transport = TcpTransport::with_listener(sub.index, l, roster, ns, cfg.timeout)
                                .map_err(|source| RunError::Comm {
                                    worker: sub.index,
                                    source,
                                })?;
                            let prior = PriorSetup {
                                load: 0.0,
                                connect: t.elapsed().as_secs_f64(),
                            };
                            run_worker(sub, &mut transport, cfg, prior)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join()).collect::<Vec<_>>()
            })
        }
    };
    let outputs = join_workers(results)?;
    let mode = match kind {
        TransportKind::Local => "local",
        TransportKind::Tcp => "tcp",
    };
    let wall = start.elapsed().as_secs_f64();
    info!("{mode} run with {} workers finished in {wall:.3} s", subs.len());
    finish(mode, outputs, &all_links(subs), cfg, wall)
}
