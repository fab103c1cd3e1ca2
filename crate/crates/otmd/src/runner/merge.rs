use std::collections::BTreeMap;

use otmd_core::engine::StateRow;
use otmd_core::LinkId;

use super::{RunError, RunMetrics, StepMetrics, WorkerOutput};

/// `(completed steps, rows)` per dumped step, rows in
/// `(link, lane group, cell, vehicle type, next link)` order.
pub type StateDumps = Vec<(u64, Vec<StateRow>)>;

fn row_key(r: &StateRow) -> (LinkId, u32, u32, u32, i64) {
    (r.link, r.lane_group, r.cell, r.vehicle_type.0, r.next.as_i64())
}

/// Global state from per-worker dumps of owned links. Every link in `links`
/// must be owned by exactly one worker.
pub fn merge_states(outputs: &[WorkerOutput], links: &[LinkId]) -> Result<StateDumps, RunError> {
    let mut owner: BTreeMap<LinkId, u32> = BTreeMap::new();
    for o in outputs {
        for l in &o.owned_links {
            if let Some(prev) = owner.insert(*l, o.index) {
                return Err(RunError::Merge(format!(
                    "link {l} claimed by workers {prev} and {}",
                    o.index
                )));
            }
        }
    }
    for l in links {
        if !owner.contains_key(l) {
            return Err(RunError::Merge(format!("link {l} claimed by no worker")));
        }
    }
    if let Some(l) = owner.keys().find(|l| links.binary_search(l).is_err()) {
        return Err(RunError::Merge(format!("link {l} is not part of the network")));
    }

    let Some(first) = outputs.first() else {
        return Ok(Vec::new());
    };
    let steps: Vec<u64> = first.dumps.iter().map(|(s, _)| *s).collect();
    let mut merged = Vec::with_capacity(steps.len());
    for (k, step) in steps.iter().enumerate() {
        let mut rows = Vec::new();
        for o in outputs {
            match o.dumps.get(k) {
                Some((s, part)) if s == step => {
                    if let Some(r) = part.iter().find(|r| owner.get(&r.link) != Some(&o.index)) {
                        return Err(RunError::Merge(format!(
                            "worker {} reported state of link {} it does not own",
                            o.index, r.link
                        )));
                    }
                    rows.extend_from_slice(part);
                }
                _ => {
                    return Err(RunError::Merge(format!(
                        "worker {} has no dump for step {step}",
                        o.index
                    )))
                }
            }
        }
        rows.sort_by_key(row_key);
        merged.push((*step, rows));
    }
    if let Some(o) = outputs.iter().find(|o| o.dumps.len() != steps.len()) {
        return Err(RunError::Merge(format!("worker {} dumped a different set of steps", o.index)));
    }
    Ok(merged)
}

/// Network totals per step, summed over workers in index order.
pub fn merge_metrics(outputs: &[WorkerOutput]) -> Result<RunMetrics, RunError> {
    let mut sorted: Vec<&WorkerOutput> = outputs.iter().collect();
    sorted.sort_by_key(|o| o.index);
    let steps = sorted.first().map_or(0, |o| o.tallies.len());
    if let Some(o) = sorted.iter().find(|o| o.tallies.len() != steps) {
        return Err(RunError::Merge(format!("worker {} completed a different number of steps", o.index)));
    }
    let mut entered = 0.0;
    let mut exited = 0.0;
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut m = StepMetrics {
            step: k as u64 + 1,
            in_network: 0.0,
            entered: 0.0,
            exited: 0.0,
            queued: 0.0,
        };
        for o in &sorted {
            let t = &o.tallies[k];
            m.in_network += t.in_network;
            entered += t.entered;
            exited += t.exited;
            m.queued += t.queued;
        }
        m.entered = entered;
        m.exited = exited;
        out.push(m);
    }
    Ok(RunMetrics { steps: out })
}
