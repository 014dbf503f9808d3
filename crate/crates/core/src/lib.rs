//! Progressive integer programming (PIP) for linear programs with linear
//! complementarity constraints (LPCCs) and indefinite quadratic programs.
//!
//! The crate is `no_std` + `alloc`. Everything that needs a wall clock goes
//! through the [`clock::Clock`] trait; the `std` feature adds
//! [`clock::StdClock`].
//!
//! Module map:
//!
//! * [`model`]: LPCC data, feasibility checks and index partitions.
//! * [`lp`]: bounded-variable revised simplex.
//! * [`reform`]: big-M mixed-binary models (full, partial, restricted-KKT).
//! * [`bb`]: branch-and-bound MILP engine.
//! * [`pip`]: the progressive driver and its local-optimality certificate.
//! * [`qp`]: QP to LPCC bridge, stationary points, multiplier recovery.
//! * [`gen`]: StQP, QAP and inverse-QP instance factories.
//! * [`oracle`]: complementarity-pattern enumeration.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bb;
pub mod clock;
mod error;
pub mod gen;
pub mod lp;
pub mod math;
pub mod matrix;
pub mod model;
pub mod oracle;
pub mod pip;
pub mod qp;
pub mod reform;

pub use error::{Error, Result};
pub use matrix::Matrix;
