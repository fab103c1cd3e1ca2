//! Distributed cell-transmission traffic simulation, platform-independent
//! part: scenario model, macroscopic engine, network partitioning and the
//! boundary-message codec.
//!
//! Everything here is `no_std` with `alloc`; file formats, transports and
//! the command line live in the `otmd` crate.

#![no_std]

extern crate alloc;

pub mod comm;
pub mod engine;
pub mod ids;
pub mod partition;
pub mod scenario;

pub use ids::{ConnectionId, LinkId, NodeId, VehicleTypeId};
