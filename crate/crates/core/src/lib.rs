//! Solver for the flexible job shop scheduling problem with a limited fleet
//! of multi-load AGVs.
//!
//! The crate covers the whole pipeline:
//!
//! * [`instance`]: problem data, text format and a random generator;
//! * [`chromosome`] and [`decode`]: the three-layer encoding with per-AGV
//!   transport-task lists and its decoder into a timed [`decode::Schedule`];
//! * [`validate`]: an independent feasibility checker for schedules;
//! * [`region`]: a global k-d tree over solution vectors that records every
//!   evaluated solution;
//! * [`niching`]: nearest-better distances, seed detection and clustering of
//!   regions;
//! * [`evolution`]: the region-partitioning evolutionary search and a plain
//!   GA baseline;
//! * [`local_search`]: greedy machine/AGV reassignment and transport-task
//!   reordering;
//! * [`harness`]: ARPD, runtime budgets, experiments and exports.

pub mod chromosome;
pub mod decode;
pub mod evolution;
pub mod harness;
pub mod instance;
pub mod local_search;
pub mod niching;
pub mod region;
pub mod validate;

pub use chromosome::{Chromosome, OpRef, TaskKind, TransportTask};
pub use decode::{decode, Schedule};
pub use instance::{generate_random_instance, parse_instance, Instance, Time};
pub use validate::{check_schedule, ViolationKind, ViolationReport};
