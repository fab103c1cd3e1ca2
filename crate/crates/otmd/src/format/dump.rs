//! State dump CSV: `step,link,lane_group,cell,vehicle_type,next_link,vehicles`.
//!
//! `next_link` is -1 for vehicles leaving the network. Values are written in
//! Rust's shortest round-trip notation, so parsing a dump gives back the
//! exact floats.

use std::fmt;
use std::io::{self, Write};

use otmd_core::engine::StateRow;

use super::FormatError;

pub const DUMP_HEADER: &str = "step,link,lane_group,cell,vehicle_type,next_link,vehicles";

pub fn write_dump_rows(out: &mut impl Write, step: u64, rows: &[StateRow]) -> io::Result<()> {
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:?}",
            step,
            r.link.0,
            r.lane_group,
            r.cell,
            r.vehicle_type.0,
            r.next.as_i64(),
            r.vehicles
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpRow {
    pub step: u64,
    pub link: u32,
    pub lane_group: u32,
    pub cell: u32,
    pub vehicle_type: u32,
    pub next_link: i64,
    pub vehicles: f64,
}

impl DumpRow {
    pub fn key(&self) -> (u64, u32, u32, u32, u32, i64) {
        (self.step, self.link, self.lane_group, self.cell, self.vehicle_type, self.next_link)
    }
}

pub fn parse_dump(text: &str) -> Result<Vec<DumpRow>, FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == DUMP_HEADER => {}
        _ => return Err(FormatError::Schema(format!("dump header must be `{DUMP_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| FormatError::Line {
            line: i + 1,
            message: format!("invalid {what}"),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(FormatError::Line {
                line: i + 1,
                message: format!("expected 7 fields, found {}", f.len()),
            });
        }
        rows.push(DumpRow {
            step: f[0].parse().map_err(|_| bad("step"))?,
            link: f[1].parse().map_err(|_| bad("link"))?,
            lane_group: f[2].parse().map_err(|_| bad("lane group"))?,
            cell: f[3].parse().map_err(|_| bad("cell"))?,
            vehicle_type: f[4].parse().map_err(|_| bad("vehicle type"))?,
            next_link: f[5].parse().map_err(|_| bad("next link"))?,
            vehicles: f[6].parse().map_err(|_| bad("vehicles"))?,
        });
    }
    Ok(rows)
}

/// First point where two dumps disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// The row in the first dump, if it has one at this key.
    pub a: Option<DumpRow>,
    pub b: Option<DumpRow>,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.a.or(self.b).expect("a divergence has at least one row");
        write!(
            f,
            "step {}, link {}, lane group {}, cell {}, vehicle type {}, next link {}: ",
            r.step, r.link, r.lane_group, r.cell, r.vehicle_type, r.next_link
        )?;
        let show = |r: Option<DumpRow>| r.map_or("missing".to_string(), |r| format!("{:?}", r.vehicles));
        write!(f, "a = {}, b = {}", show(self.a), show(self.b))
    }
}

fn close(a: f64, b: f64, tol: Option<f64>) -> bool {
    match tol {
        None => a.to_bits() == b.to_bits(),
        Some(t) => a == b || (a - b).abs() <= t * a.abs().max(b.abs()),
    }
}

/// Compare two dumps. Without a tolerance identical bytes are required; with
/// one, values are compared relatively. Rows are matched in file order.
pub fn diff_dumps(a: &str, b: &str, tol: Option<f64>) -> Result<Option<Divergence>, FormatError> {
    let ra = parse_dump(a)?;
    let rb = parse_dump(b)?;
    if tol.is_none() && a == b {
        return Ok(None);
    }
    let mut i = 0;
    let mut j = 0;
    while i < ra.len() || j < rb.len() {
        let (x, y) = (ra.get(i), rb.get(j));
        match (x, y) {
            (Some(x), Some(y)) if x.key() == y.key() => {
                if !close(x.vehicles, y.vehicles, tol) {
                    return Ok(Some(Divergence { a: Some(*x), b: Some(*y) }));
                }
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.key() < y.key() => return Ok(Some(Divergence { a: Some(*x), b: None })),
            (Some(_), Some(y)) => return Ok(Some(Divergence { a: None, b: Some(*y) })),
            (Some(x), None) => return Ok(Some(Divergence { a: Some(*x), b: None })),
            (None, Some(y)) => return Ok(Some(Divergence { a: None, b: Some(*y) })),
            (None, None) => unreachable!(),
        }
    }
    if tol.is_none() {
        return Err(FormatError::Schema(
            "dumps hold the same rows but differ in formatting".into(),
        ));
    }
    Ok(None)
}
