//! Partition files.
//!
//! Native form: one `node_id subset_index` pair per line, `#` starts a
//! comment. METIS form: one subset index per line, in the order given by
//! `#!ids` header lines (node ids, whitespace separated), or in ascending
//! node id order when there is no header.

use otmd_core::partition::NodePartition;
use otmd_core::scenario::Scenario;
use otmd_core::NodeId;

use super::FormatError;

fn number<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, FormatError> {
    tok.parse().map_err(|_| FormatError::Line {
        line,
        message: format!("invalid {what} `{tok}`"),
    })
}

/// Parse a partition of `scenario`. The subset count is one more than the
/// largest index unless `n` is given.
pub fn parse_partition(text: &str, scenario: &Scenario, n: Option<u32>) -> Result<NodePartition, FormatError> {
    let mut header: Vec<NodeId> = Vec::new();
    let mut pairs: Vec<(usize, Vec<&str>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if let Some(ids) = t.strip_prefix("#!ids") {
            for tok in ids.split_whitespace() {
                header.push(NodeId(number(tok, line, "node id")?));
            }
            continue;
        }
        let t = t.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        pairs.push((line, t.split_whitespace().collect()));
    }

    let metis = !header.is_empty() || (!pairs.is_empty() && pairs.iter().all(|(_, toks)| toks.len() == 1));
    let mut assignment: Vec<(NodeId, u32)> = Vec::with_capacity(pairs.len());
    if metis {
        let order: Vec<NodeId> = if header.is_empty() {
            scenario.nodes().keys().copied().collect()
        } else {
            header
        };
        if order.len() != pairs.len() {
            return Err(FormatError::Schema(format!(
                "METIS partition has {} lines for {} node ids",
                pairs.len(),
                order.len()
            )));
        }
        for (node, (line, toks)) in order.into_iter().zip(&pairs) {
            if toks.len() != 1 {
                return Err(FormatError::Line {
                    line: *line,
                    message: "expected a single subset index".into(),
                });
            }
            assignment.push((node, number(toks[0], *line, "subset index")?));
        }
    } else {
        for (line, toks) in &pairs {
            if toks.len() != 2 {
                return Err(FormatError::Line {
                    line: *line,
                    message: "expected `node_id subset_index`".into(),
                });
            }
            assignment.push((
                NodeId(number(toks[0], *line, "node id")?),
                number(toks[1], *line, "subset index")?,
            ));
        }
    }
    let n = n.unwrap_or_else(|| assignment.iter().map(|(_, i)| i + 1).max().unwrap_or(0));
    Ok(NodePartition::new(scenario, n, assignment)?)
}

pub fn partition_to_text(p: &NodePartition) -> String {
    let mut s = format!("# {} subsets\n# node_id subset_index\n", p.n());
    for (node, i) in p.assignment() {
        s.push_str(&format!("{} {}\n", node.0, i));
    }
    s
}
