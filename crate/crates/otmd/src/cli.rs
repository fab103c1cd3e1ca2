//! The `otmd` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Child, Command as Process};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use otmd_core::partition::{build_metagraph, build_subnetworks, decoder_map, partition_nodes, NodePartition, Subnetwork};
use otmd_core::scenario::{generate_grid, GridSpec, Scenario};

use crate::format::{
    decoder_maps_to_json, diff_dumps, fragment_to_json, metagraph_to_json, parse_fragment, parse_partition,
    parse_scenario, partition_to_text, scenario_to_json, write_dump_rows, FormatError, DUMP_HEADER,
};
use crate::runner::{
    all_links, finish, read_worker_output, run_benchmark, run_distributed, run_sequential, run_worker,
    worker_output_to_json, PriorSetup, RunConfig, RunError, RunResult, TransportKind, DEFAULT_DUMP_EVERY,
};
use crate::transport::{parse_roster, roster_to_text, Roster, TcpTransport};

#[derive(Parser, Debug)]
#[command(name = "otmd", version, about = "Distributed cell-transmission traffic simulator")]
pub struct Cli {
    /// JSON file of flag values for the subcommand; flags on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a tiled grid scenario.
    GenGrid(GenGridArgs),
    /// Partition a scenario and write one fragment file per subnetwork.
    Partition(PartitionArgs),
    /// Run a simulation.
    Run(RunArgs),
    /// Time runs over a list of worker counts.
    Bench(BenchArgs),
    /// Compare two state dumps.
    Diff(DiffArgs),
}

#[derive(clap::Args, Debug)]
pub struct GenGridArgs {
    #[arg(long)]
    pub rows: u32,
    #[arg(long)]
    pub cols: u32,
    #[arg(long, default_value_t = 2000.0)]
    pub demand_vph_per_lane: f64,
    /// Simulation length written into the scenario.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub lanes: Option<u32>,
    #[arg(long)]
    pub block_length: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct PartitionArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Use this partition file instead of the built-in partitioner.
    #[arg(long = "import", value_name = "FILE")]
    pub import: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Seq,
    Local,
    Tcp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportArg {
    Local,
    Tcp,
}

impl From<TransportArg> for TransportKind {
    fn from(t: TransportArg) -> Self {
        match t {
            TransportArg::Local => TransportKind::Local,
            TransportArg::Tcp => TransportKind::Tcp,
        }
    }
}

#[derive(clap::Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, conflicts_with = "fragments_dir")]
    pub scenario: Option<PathBuf>,
    /// Directory written by `otmd partition`.
    #[arg(long)]
    pub fragments_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Seq)]
    pub mode: Mode,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Partition file to use instead of the built-in partitioner.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Number of steps; defaults to the scenario's.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Write merged state dumps (CSV) here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DUMP_EVERY)]
    pub dump_every: u64,
    /// Write per-step metrics (JSON) here.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Write the timing report (JSON) here.
    #[arg(long)]
    pub timing: Option<PathBuf>,
    /// Exchange timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    /// TCP mode: start one local process per worker.
    #[arg(long)]
    pub spawn_local: bool,
    /// TCP mode: `worker_index host port` lines.
    #[arg(long)]
    pub roster: Option<PathBuf>,
    /// TCP mode: run only this worker of the roster.
    #[arg(long)]
    pub index: Option<u32>,
    /// Write this worker's raw output (JSON) here.
    #[arg(long)]
    pub worker_output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Comma-separated worker counts.
    #[arg(long, default_value = "1,2,4")]
    pub n_list: String,
    #[arg(long, value_enum, default_value_t = TransportArg::Local)]
    pub transport: TransportArg,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    /// Write the report (JSON) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct DiffArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Relative tolerance; without it the files must match byte for byte.
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Command-line arguments with the `--config` file spliced in after the
/// subcommand name, so explicit flags override it.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, RunError> {
    let pos = args.iter().position(|a| a == "--config");
    let path = match pos {
        Some(i) => args.get(i + 1).cloned(),
        None => args
            .iter()
            .find_map(|a| a.to_str().and_then(|s| s.strip_prefix("--config=")).map(OsString::from)),
    };
    let Some(path) = path else {
        return Ok(args);
    };
    let text = read(Path::new(&path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(FormatError::from)?;
    let obj = value
        .as_object()
        .ok_or_else(|| RunError::Config("config file must hold a JSON object".into()))?;
    let given = |flag: &str| {
        args.iter()
            .filter_map(|a| a.to_str())
            .any(|a| a == flag || a.strip_prefix(flag).is_some_and(|rest| rest.starts_with('=')))
    };
    let mut extra = Vec::new();
    for (k, v) in obj {
        let name = format!("--{}", k.replace('_', "-"));
        if given(&name) {
            continue;
        }
        let flag = OsString::from(name);
        match v {
            serde_json::Value::Bool(true) => extra.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => extra.extend([flag, s.into()]),
            serde_json::Value::Number(n) => extra.extend([flag, n.to_string().into()]),
            other => return Err(RunError::Config(format!("config key `{k}`: unsupported value {other}"))),
        }
    }
    // the subcommand is the first argument that is not --config or its value
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            i += 2;
        } else if args[i].to_str().is_some_and(|s| s.starts_with("--config=")) {
            i += 1;
        } else {
            break;
        }
    }
    let mut out = args[..(i + 1).min(args.len())].to_vec();
    out.extend(extra);
    if i + 1 < args.len() {
        out.extend_from_slice(&args[i + 1..]);
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, RunError> {
    Ok(parse_scenario(&read(path)?)?)
}

fn fragment_path(dir: &Path, i: u32) -> PathBuf {
    dir.join(format!("fragment_{i}.json"))
}

fn load_fragments(dir: &Path) -> Result<Vec<Subnetwork>, RunError> {
    let first = parse_fragment(&read(&fragment_path(dir, 0))?)?;
    let n = first.n;
    let mut subs = vec![first];
    for i in 1..n {
        subs.push(parse_fragment(&read(&fragment_path(dir, i))?)?);
    }
    for (i, s) in subs.iter().enumerate() {
        if s.index != i as u32 || s.n != n {
            return Err(RunError::Config(format!(
                "{} holds subnetwork {} of {}",
                fragment_path(dir, i as u32).display(),
                s.index,
                s.n
            )));
        }
    }
    Ok(subs)
}

fn make_partition(
    scenario: &Scenario,
    n: Option<u32>,
    seed: u64,
    import: Option<&Path>,
) -> Result<NodePartition, RunError> {
    match import {
        Some(path) => Ok(parse_partition(&read(path)?, scenario, n)?),
        None => {
            let n = n.ok_or_else(|| RunError::Config("--n is required".into()))?;
            Ok(partition_nodes(scenario, n, seed)?)
        }
    }
}

pub fn cmd_gen_grid(a: &GenGridArgs) -> Result<(), RunError> {
    let mut spec = GridSpec::new(a.rows, a.cols);
    spec.demand_vph_per_lane = a.demand_vph_per_lane;
    if let Some(s) = a.steps {
        spec.steps = s;
    }
    if let Some(dt) = a.dt {
        spec.dt = dt;
    }
    if let Some(l) = a.lanes {
        spec.lanes = l;
    }
    if let Some(b) = a.block_length {
        spec.block_length = b;
    }
    let s = generate_grid(&spec)?;
    write(&a.out, &scenario_to_json(&s))?;
    println!(
        "wrote {}: {} nodes, {} links",
        a.out.display(),
        s.nodes().len(),
        s.links().len()
    );
    Ok(())
}

pub fn cmd_partition(a: &PartitionArgs) -> Result<(), RunError> {
    let scenario = load_scenario(&a.scenario)?;
    let p = make_partition(&scenario, a.n, a.seed, a.import.as_deref())?;
    let subs = build_subnetworks(&scenario, &p)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| RunError::Io(format!("{}: {e}", a.out_dir.display())))?;
    write(&a.out_dir.join("partition.txt"), &partition_to_text(&p))?;
    for sub in &subs {
        write(&fragment_path(&a.out_dir, sub.index), &fragment_to_json(sub))?;
        let mut maps = Vec::new();
        for peer in sub.neighbors() {
            maps.push(decoder_map(sub, sub.index, peer));
            maps.push(decoder_map(sub, peer, sub.index));
        }
        write(
            &a.out_dir.join(format!("decoders_{}.json", sub.index)),
            &decoder_maps_to_json(&maps),
        )?;
    }
    let m = build_metagraph(&subs);
    write(&a.out_dir.join("metagraph.json"), &metagraph_to_json(&m))?;
    println!(
        "{} subnetworks, {} cut links, {} metagraph edges, subset sizes {:?}",
        p.n(),
        p.cut_links(&scenario),
        m.edges().len(),
        p.sizes()
    );
    Ok(())
}

fn run_config(a: &RunArgs, scenario_steps: u64) -> Result<RunConfig, RunError> {
    let steps = a.steps.unwrap_or(scenario_steps);
    if steps == 0 {
        return Err(RunError::Config("steps must be at least 1".into()));
    }
    if !(a.timeout > 0.0 && a.timeout.is_finite()) {
        return Err(RunError::Config("timeout must be positive".into()));
    }
    Ok(RunConfig {
        steps,
        dump_every: a.dump.as_ref().map(|_| a.dump_every),
        timeout: Duration::from_secs_f64(a.timeout),
    })
}

/// Subnetworks from `--fragments-dir`, or from `--scenario` and a partition.
fn subnetworks(a: &RunArgs) -> Result<Vec<Subnetwork>, RunError> {
    match (&a.fragments_dir, &a.scenario) {
        (Some(dir), _) => {
            let subs = load_fragments(dir)?;
            if let Some(n) = a.n {
                if n != subs.len() as u32 {
                    return Err(RunError::Config(format!(
                        "--n {n} but the fragments are for {} workers",
                        subs.len()
                    )));
                }
            }
            Ok(subs)
        }
        (None, Some(path)) => {
            let scenario = load_scenario(path)?;
            let p = make_partition(&scenario, a.n, a.seed, a.partition.as_deref())?;
            Ok(build_subnetworks(&scenario, &p)?)
        }
        (None, None) => Err(RunError::Config("either --scenario or --fragments-dir is required".into())),
    }
}

fn write_outputs(a: &RunArgs, r: &RunResult) -> Result<(), RunError> {
    if let Some(path) = &a.dump {
        let mut out = format!("{DUMP_HEADER}\n").into_bytes();
        for (step, rows) in &r.dumps {
            write_dump_rows(&mut out, *step, rows).map_err(|e| RunError::Io(e.to_string()))?;
        }
        fs::write(path, out).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &a.metrics {
        write(path, &(serde_json::to_string_pretty(&r.metrics).unwrap() + "\n"))?;
    }
    if let Some(path) = &a.timing {
        write(path, &(serde_json::to_string_pretty(&r.timing).unwrap() + "\n"))?;
    }
    let fixed = r.channels.iter().all(|c| c.is_fixed_size());
    println!(
        "{} run: {} steps, {} workers, {:.3} s wall, max conservation error {:e}, fixed message sizes: {}",
        r.timing.mode,
        r.timing.steps,
        r.timing.n,
        r.timing.wall,
        r.metrics.max_conservation_error(),
        if fixed { "yes" } else { "no" }
    );
    Ok(())
}

pub fn cmd_run(a: &RunArgs) -> Result<(), RunError> {
    match a.mode {
        Mode::Seq => {
            let Some(path) = &a.scenario else {
                return Err(RunError::Config("sequential mode needs --scenario".into()));
            };
            let s = load_scenario(path)?;
            let cfg = run_config(a, s.sim().steps)?;
            let r = run_sequential(&s, &cfg)?;
            write_outputs(a, &r)
        }
        Mode::Local => {
            let subs = subnetworks(a)?;
            let cfg = run_config(a, subs[0].fragment.sim().steps)?;
            let r = run_distributed(&subs, TransportKind::Local, &cfg)?;
            write_outputs(a, &r)
        }
        Mode::Tcp if a.spawn_local => spawn_local(a),
        Mode::Tcp => match (&a.roster, a.index) {
            (Some(roster), Some(index)) => join_roster(a, roster, index),
            (None, None) => {
                // all workers as threads of this process over loopback TCP
                let subs = subnetworks(a)?;
                let cfg = run_config(a, subs[0].fragment.sim().steps)?;
                let r = run_distributed(&subs, TransportKind::Tcp, &cfg)?;
                write_outputs(a, &r)
            }
            _ => Err(RunError::Config("--roster and --index go together".into())),
        },
    }
}

/// Run one worker of a roster in this process.
fn join_roster(a: &RunArgs, roster_path: &Path, index: u32) -> Result<(), RunError> {
    let t = Instant::now();
    let roster = parse_roster(&read(roster_path)?).map_err(|source| RunError::Comm { worker: index, source })?;
    let sub = match &a.fragments_dir {
        Some(dir) => parse_fragment(&read(&fragment_path(dir, index))?)?,
        None => {
            let subs = subnetworks(a)?;
            subs.into_iter()
                .nth(index as usize)
                .ok_or_else(|| RunError::Config(format!("no subnetwork {index}")))?
        }
    };
    if sub.index != index {
        return Err(RunError::Config(format!("fragment holds subnetwork {}, expected {index}", sub.index)));
    }
    if roster.endpoints.len() != sub.n as usize {
        return Err(RunError::Config(format!(
            "roster lists {} workers for {} subnetworks",
            roster.endpoints.len(),
            sub.n
        )));
    }
    let cfg = run_config(a, sub.fragment.sim().steps)?;
    let load = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let mut transport = TcpTransport::connect(index, &roster, &sub.neighbors(), cfg.timeout)
        .map_err(|source| RunError::Comm { worker: index, source })?;
    let prior = PriorSetup {
        load,
        connect: t.elapsed().as_secs_f64(),
    };
    let out = run_worker(&sub, &mut transport, &cfg, prior)?;
    drop(transport);
    if let Some(path) = &a.worker_output {
        write(path, &worker_output_to_json(&out))?;
    }
    // this worker's share: rows and totals of the links it owns
    let r = finish("tcp-worker", vec![out], &sub.owned_links(), &cfg, load + t.elapsed().as_secs_f64())?;
    write_outputs(a, &r)
}

fn free_ports(n: usize) -> Result<Vec<u16>, RunError> {
    let ls = (0..n)
        .map(|_| std::net::TcpListener::bind("127.0.0.1:0"))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| RunError::Io(e.to_string()))?;
    ls.iter()
        .map(|l| l.local_addr().map(|a| a.port()))
        .collect::<Result<_, _>>()
        .map_err(|e| RunError::Io(e.to_string()))
}

/// Start one child process per worker over loopback TCP and merge their
/// outputs.
fn spawn_local(a: &RunArgs) -> Result<(), RunError> {
    let start = Instant::now();
    let subs = subnetworks(a)?;
    let cfg = run_config(a, subs[0].fragment.sim().steps)?;
    let tmp = tempfile::Builder::new()
        .prefix("otmd-")
        .tempdir()
        .map_err(|e| RunError::Io(format!("temporary directory: {e}")))?;
    let dir = match &a.fragments_dir {
        Some(d) => d.clone(),
        None => {
            for s in &subs {
                write(&fragment_path(tmp.path(), s.index), &fragment_to_json(s))?;
            }
            tmp.path().to_path_buf()
        }
    };
    let roster = Roster {
        endpoints: free_ports(subs.len())?
            .into_iter()
            .enumerate()
            .map(|(i, p)| (i as u32, format!("127.0.0.1:{p}")))
            .collect(),
    };
    let roster_path = tmp.path().join("roster.txt");
    write(&roster_path, &roster_to_text(&roster))?;
    let exe = std::env::current_exe().map_err(|e| RunError::Io(e.to_string()))?;
    let mut children: Vec<(u32, Child)> = Vec::new();
    for s in &subs {
        let mut cmd = Process::new(&exe);
        cmd.arg("run")
            .arg("--mode")
            .arg("tcp")
            .arg("--fragments-dir")
            .arg(&dir)
            .arg("--roster")
            .arg(&roster_path)
            .arg("--index")
            .arg(s.index.to_string())
            .arg("--steps")
            .arg(cfg.steps.to_string())
            .arg("--timeout")
            .arg(a.timeout.to_string())
            .arg("--worker-output")
            .arg(tmp.path().join(format!("worker_{}.json", s.index)));
        if a.dump.is_some() {
            cmd.arg("--dump")
                .arg(tmp.path().join(format!("dump_{}.csv", s.index)))
                .arg("--dump-every")
                .arg(a.dump_every.to_string());
        }
        cmd.stdout(std::process::Stdio::null());
        let child = cmd.spawn().map_err(|e| RunError::Io(format!("spawn worker {}: {e}", s.index)))?;
        children.push((s.index, child));
    }
    let mut codes = Vec::new();
    for (i, mut c) in children {
        let status = c.wait().map_err(|e| RunError::Io(e.to_string()))?;
        let code = status.code().unwrap_or(4);
        if code != 0 {
            warn!("worker {i} exited with code {code}");
        }
        codes.push(code);
    }
    // a failing worker makes its peers fail with protocol errors, so report
    // the most specific code
    if let Some(code) = [2, 4, 1, 3].into_iter().find(|c| codes.contains(c)) {
        return Err(RunError::Child(code));
    }
    if let Some(code) = codes.iter().find(|c| **c != 0) {
        return Err(RunError::Child(*code));
    }
    let outputs = subs
        .iter()
        .map(|s| read_worker_output(&read(&tmp.path().join(format!("worker_{}.json", s.index)))?))
        .collect::<Result<Vec<_>, _>>()?;
    info!("merging outputs of {} worker processes", outputs.len());
    let r = finish("tcp", outputs, &all_links(&subs), &cfg, start.elapsed().as_secs_f64())?;
    write_outputs(a, &r)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<(), RunError> {
    let s = load_scenario(&a.scenario)?;
    let ns = a
        .n_list
        .split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| RunError::Config(format!("invalid --n-list `{}`", a.n_list)))?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(RunError::Config("worker counts must be at least 1".into()));
    }
    let mut cfg = RunConfig::new(a.steps.unwrap_or(s.sim().steps));
    if cfg.steps == 0 {
        return Err(RunError::Config("steps must be at least 1".into()));
    }
    cfg.timeout = Duration::from_secs_f64(a.timeout);
    let report = run_benchmark(&s, &ns, a.transport.into(), &cfg, a.seed)?;
    print!("{}", report.table());
    if let Some(path) = &a.out {
        write(path, &(serde_json::to_string_pretty(&report).unwrap() + "\n"))?;
    }
    Ok(())
}

/// Exit status 0 when equal, 1 at the first divergence.
pub fn cmd_diff(a: &DiffArgs) -> Result<i32, RunError> {
    let x = read(&a.a)?;
    let y = read(&a.b)?;
    match diff_dumps(&x, &y, a.tol)? {
        None => {
            println!("equal");
            Ok(0)
        }
        Some(d) => {
            println!("first divergence at {d}");
            Ok(1)
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("OTMD_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp_millis().try_init();
}

/// Entry point; returns the process exit code.
pub fn main_with(args: Vec<OsString>) -> i32 {
    init_logging();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::GenGrid(a) => cmd_gen_grid(a).map(|_| 0),
        Command::Partition(a) => cmd_partition(a).map(|_| 0),
        Command::Run(a) => cmd_run(a).map(|_| 0),
        Command::Bench(a) => cmd_bench(a).map(|_| 0),
        Command::Diff(a) => cmd_diff(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
