//! JSON hand-off of a worker's output from a child process to the parent.

use otmd_core::engine::{NextLink, StateRow, StepTally};
use otmd_core::{LinkId, VehicleTypeId};
use serde::{Deserialize, Serialize};

use super::{ChannelReport, RunError, WorkerOutput, WorkerTiming};
use crate::format::FormatError;

/// `(link, lane_group, cell, vehicle_type, next_link, vehicles)`
type RowDto = (u32, u32, u32, u32, i64, f64);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkerFile {
    index: u32,
    owned_links: Vec<u32>,
    dumps: Vec<(u64, Vec<RowDto>)>,
    /// `(step, in_network, entered, exited, queued)`
    tallies: Vec<(u64, f64, f64, f64, f64)>,
    timing: WorkerTiming,
    channels: Vec<ChannelReport>,
}

pub fn worker_output_to_json(o: &WorkerOutput) -> String {
    let f = WorkerFile {
        index: o.index,
        owned_links: o.owned_links.iter().map(|l| l.0).collect(),
        dumps: o
            .dumps
            .iter()
            .map(|(s, rows)| {
                let rows = rows
                    .iter()
                    .map(|r| (r.link.0, r.lane_group, r.cell, r.vehicle_type.0, r.next.as_i64(), r.vehicles))
                    .collect();
                (*s, rows)
            })
            .collect(),
        tallies: o
            .tallies
            .iter()
            .map(|t| (t.step, t.in_network, t.entered, t.exited, t.queued))
            .collect(),
        timing: o.timing.clone(),
        channels: o.channels.clone(),
    };
    serde_json::to_string(&f).expect("worker output serializes")
}

pub fn read_worker_output(text: &str) -> Result<WorkerOutput, RunError> {
    let f: WorkerFile = serde_json::from_str(text).map_err(FormatError::from)?;
    let mut dumps = Vec::with_capacity(f.dumps.len());
    for (s, rows) in f.dumps {
        let mut out = Vec::with_capacity(rows.len());
        for (link, g, c, t, next, v) in rows {
            let next = NextLink::from_i64(next)
                .ok_or_else(|| FormatError::Schema(format!("invalid next link {next} in worker output")))?;
            out.push(StateRow {
                link: LinkId(link),
                lane_group: g,
                cell: c,
                vehicle_type: VehicleTypeId(t),
                next,
                vehicles: v,
            });
        }
        dumps.push((s, out));
    }
    Ok(WorkerOutput {
        index: f.index,
        owned_links: f.owned_links.into_iter().map(LinkId).collect(),
        dumps,
        tallies: f
            .tallies
            .into_iter()
            .map(|(step, in_network, entered, exited, queued)| StepTally {
                step,
                in_network,
                entered,
                exited,
                queued,
            })
            .collect(),
        timing: f.timing,
        channels: f.channels,
    })
}
