use std::time::Instant;

use otmd_core::partition::{build_subnetworks, partition_nodes};
use otmd_core::scenario::Scenario;
use serde::{Deserialize, Serialize};

use super::{run_distributed, RunConfig, RunError, TimingReport, TransportKind};

/// One line of the scaling table. Times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: u32,
    pub setup: f64,
    pub comm: f64,
    pub compute: f64,
    pub total: f64,
    /// `total(1) / total(n)`
    pub speedup: f64,
    /// Steps per second.
    pub rate: f64,
    /// `n` times the serial rate.
    pub ideal_rate: f64,
    /// Time spent partitioning and building fragments, not part of `total`.
    pub partition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub transport: String,
    pub steps: u64,
    pub links: usize,
    pub rows: Vec<BenchRow>,
    pub timings: Vec<TimingReport>,
    pub warnings: Vec<String>,
}

impl BenchReport {
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>5} {:>10} {:>10} {:>10} {:>10} {:>9} {:>12}\n",
            "n", "setup", "comm", "compute", "total", "speed-up", "ideal rate"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>9.3} {:>12.2}\n",
                r.n, r.setup, r.comm, r.compute, r.total, r.speedup, r.ideal_rate
            ));
        }
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        s
    }
}

/// Run the scenario once per subset count. A serial baseline is measured
/// even when 1 is not in `ns`.
pub fn run_benchmark(
    scenario: &Scenario,
    ns: &[u32],
    kind: TransportKind,
    cfg: &RunConfig,
    seed: u64,
) -> Result<BenchReport, RunError> {
    let cfg = RunConfig {
        dump_every: None,
        ..cfg.clone()
    };
    let mut order: Vec<u32> = ns.to_vec();
    if !order.contains(&1) {
        order.insert(0, 1);
    }
    let mut measured = Vec::new();
    for &n in &order {
        let t = Instant::now();
        let p = partition_nodes(scenario, n, seed)?;
        let subs = build_subnetworks(scenario, &p)?;
        let partition = t.elapsed().as_secs_f64();
        let r = run_distributed(&subs, kind, &cfg)?;
        measured.push((n, partition, r.timing));
    }
    let serial = measured.iter().find(|(n, _, _)| *n == 1).map(|(_, _, t)| t.wall).unwrap();
    let serial_rate = cfg.steps as f64 / serial;
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (n, partition, t) in measured {
        if !ns.contains(&n) {
            continue;
        }
        rows.push(BenchRow {
            n,
            setup: t.max_setup(),
            comm: t.max_comm(),
            compute: t.max_compute(),
            total: t.wall,
            speedup: serial / t.wall,
            rate: cfg.steps as f64 / t.wall,
            ideal_rate: n as f64 * serial_rate,
            partition,
        });
        timings.push(t);
    }
    let mut warnings = Vec::new();
    let mut by_n: Vec<&BenchRow> = rows.iter().collect();
    by_n.sort_by_key(|r| r.n);
    for w in by_n.windows(2) {
        if w[1].total > w[0].total {
            let msg = format!("total time rose from {:.4} s at n = {} to {:.4} s at n = {}", w[0].total, w[0].n, w[1].total, w[1].n);
            warnings.push(msg);
        }
    }
    Ok(BenchReport {
        transport: match kind {
            TransportKind::Local => "local".into(),
            TransportKind::Tcp => "tcp".into(),
        },
        steps: cfg.steps,
        links: scenario.links().len(),
        rows,
        timings,
        warnings,
    })
}
