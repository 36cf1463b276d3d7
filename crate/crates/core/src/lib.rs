//! Exact greedy solutions and closed-form optimal duals for balanced
//! transportation problems with Monge costs, and a Benders cut engine for
//! the discrete ordered median problem (DOMP) built on top of them.
//!
//! All monetary quantities are [`Money`] values: signed 64-bit integers in
//! hundredths of a cost unit. Every identity checked by this crate is an
//! exact integer equality.
//!
//! Module map:
//!
//! * [`tp`]: transportation instances, staircase paths, dual vectors.
//! * [`monge_tp`]: northwest-corner rule, dual recursions, dual formulas.
//! * [`oracles`]: min-cost-flow and subset-enumeration ground truth.
//! * [`domp`]: ordered median objective, cost ladder, transport subproblem.
//! * [`benders`]: staircase encodings, cuts, separation and the cut loop.
//! * [`harness`]: instance generation, batch runs and CSV output.
//! * [`verify`]: property suites used by the command line `verify` command.

pub mod benders;
pub mod domp;
mod error;
pub mod harness;
mod matrix;
mod money;
pub mod monge_tp;
pub mod oracles;
pub mod tp;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use money::Money;
