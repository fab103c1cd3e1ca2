//! File formats: scenario and fragment JSON, partition files, state dumps,
//! and the JSON side files written by `otmd partition`.

pub mod dump;
pub mod partition;
pub mod scenario;

use otmd_core::partition::{DecoderMap, Metagraph, PartitionError};
use otmd_core::scenario::ScenarioError;
use serde_json::json;

pub use dump::{diff_dumps, parse_dump, write_dump_rows, Divergence, DumpRow, DUMP_HEADER};
pub use partition::{parse_partition, partition_to_text};
pub use scenario::{fragment_to_json, parse_fragment, parse_scenario, scenario_to_json};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep only the message
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        FormatError::Syntax {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

pub fn metagraph_to_json(m: &Metagraph) -> String {
    let edges: Vec<_> = m
        .edges()
        .iter()
        .map(|((i, j), links)| json!({ "a": i, "b": j, "links": links.iter().map(|l| l.0).collect::<Vec<_>>() }))
        .collect();
    let mut s = serde_json::to_string_pretty(&json!({ "n": m.n(), "edges": edges })).unwrap();
    s.push('\n');
    s
}

/// The maps a worker uses, one object per direction.
pub fn decoder_maps_to_json(maps: &[DecoderMap]) -> String {
    let maps: Vec<_> = maps
        .iter()
        .map(|m| {
            let slots: Vec<_> = m
                .slots()
                .iter()
                .map(|s| {
                    json!([
                        s.connection.0,
                        s.lane_group.link.0,
                        s.lane_group.index,
                        s.commodity.vehicle_type.0,
                        s.commodity.next.as_i64()
                    ])
                })
                .collect();
            json!({ "sender": m.sender, "receiver": m.receiver, "length": m.len(), "slots": slots })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&maps).unwrap();
    s.push('\n');
    s
}
