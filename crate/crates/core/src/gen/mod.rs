//! Instance factories.
//!
//! * [`stqp`]: standard quadratic programs over the unit simplex.
//! * [`qap`]: QAPLIB parsing and the concave QP lift of a QAP.
//! * [`invqp`]: inverse convex QPs written as LPCCs.
//! * [`random`]: generic random LPCCs and QPs for testing.
//!
//! Every random generator is driven by a `ChaCha8Rng` seeded from a `u64`, so
//! the same seed gives bit-identical instances on every platform.

pub mod invqp;
pub mod qap;
pub mod random;
pub mod stqp;

pub use invqp::{gen_invqp, gen_invqp_with, InvQp, InvQpOptions, InvQpTargets};
pub use qap::{parse_qaplib, qap_objective_of_permutation, qap_to_lpcc, qap_to_qp, qaplib_cost, QapData, QapLift};
pub use random::{gen_random_lpcc, gen_random_qp, RandomLpcc};
pub use stqp::{gen_stqp, stqp_big_m, stqp_to_lpcc, stqp_to_milp, Stqp};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Version tag recorded with generated instances.
pub const SCHEME_VERSION: &str = "1";

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
