//! Exact solver for the bandwidth-constrained virtual machine mapping
//! problem: place the VMs of every virtual request onto physical servers so
//! that CPU, memory, and per-link bandwidth limits hold, while minimizing
//! server activation, CPU load, and link activation costs.
//!
//! The crate is organized as a pipeline:
//!
//! * [`model`] — domain types (networks, requests, solutions) and validation.
//! * [`io`] — file formats, bundled topology fixtures, random generation.
//! * [`paths`] — fixed shortest-path routing tables.
//! * [`formulations`] — mixed-integer models of increasing strength
//!   (McCormick envelope, assignment-RLT, structural cuts, lifted
//!   per-request form) built on the `lpkit` engine.
//! * [`lagrange`] — decomposition bounds, dual multipliers, and cuts.
//! * [`heuristics`] — the repairing heuristic and local-branching search.
//! * [`bnb`] — the custom branch-and-bound driver.
//! * [`oracle`] — exhaustive-enumeration ground truth for small instances.
//! * [`bench`] — closed-gap metrics and the benchmark harness.
//!
//! See the `examples/` directory for runnable walkthroughs of each layer.

pub mod bench;
pub mod bnb;
pub mod formulations;
pub mod heuristics;
pub mod io;
pub mod lagrange;
pub mod model;
pub mod oracle;
pub mod paths;

pub use model::{Instance, MappingSolution, PhysicalNetwork, VirtualRequest};
pub use paths::{build_path_table, EdgeWeightRule, PathTable};
