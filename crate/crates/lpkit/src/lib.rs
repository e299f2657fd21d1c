//! A small, dependency-free linear and 0-1 mixed-integer programming kit.
//!
//! The crate provides three layers:
//!
//! * [`model`] — a sparse model container ([`ModelSystem`]) with bounded
//!   variables, `<=`/`>=`/`=` rows, and an LP-format writer for debugging.
//! * [`simplex`] — a bounded-variable primal simplex ([`solve_lp`]) built on a
//!   product-form basis factorization, returning primal values, exact basis
//!   duals (shadow-price convention), reduced costs, and a reusable
//!   [`Basis`] for warm starts.
//! * [`mip`] — best-bound branch-and-bound over 0-1 variables
//!   ([`solve_mip`]) with plunging, branch priorities, and exact incumbent
//!   certification.
//!
//! The solvers are deterministic: identical inputs produce identical pivot
//! sequences, node orders, and answers.
//!
//! ```
//! use lpkit::{ModelSystem, Sense, VarKind, solve_lp, LpStatus};
//!
//! let mut sys = ModelSystem::new("diet");
//! let bread = sys.add_var("bread", 0.0, 10.0, 0.5, VarKind::Continuous).unwrap();
//! let milk = sys.add_var("milk", 0.0, 10.0, 0.8, VarKind::Continuous).unwrap();
//! sys.add_row("protein", [(bread, 2.0), (milk, 3.0)], Sense::Ge, 12.0).unwrap();
//! let sol = solve_lp(&sys).unwrap();
//! assert_eq!(sol.status, LpStatus::Optimal);
//! assert!((sol.objective - 3.0).abs() < 1e-9);
//! ```

pub mod factor;
pub mod mip;
pub mod model;
pub mod simplex;

pub use mip::{solve_mip, MipConfig, MipSolution, MipStatus};
pub use model::{ModelError, ModelSystem, RowDef, Sense, VarDef, VarKind};
pub use simplex::{
    solve_lp, solve_lp_with, Basis, LpConfig, LpError, LpSolution, LpStatus, VarStatus,
};
