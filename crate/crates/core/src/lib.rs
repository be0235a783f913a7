//! Exact arithmetic in several countable group families together with the
//! random-walk machinery used to study conjugation limits of subgroups.
//!
//! The crate is organised bottom-up:
//!
//! * [`records`]: record statistics of i.i.d. ℕ-valued sequences and the gauge
//!   used by the measure builder.
//! * [`groups`]: dyadic rationals, base groups, (permutational) wreath
//!   products, the ℝ-model of Thompson's group F and Baumslag–Solitar groups.
//! * [`chabauty`]: windowed subgroup membership oracles and conjugation traces.
//! * [`measure`]: the inductive tile/witness construction of a symmetric
//!   finite-entropy measure whose walk conjugates a subgroup to a limit.
//! * [`walks`]: seeded random walks, lamp stabilization and limit subgroups.
//! * [`bass_serre`]: the Bass–Serre tree of BS(m, n).
//! * [`experiments`]: the reproducible experiment runner behind the `lab` binary.

pub mod bass_serre;
pub mod chabauty;
pub mod error;
pub mod experiments;
pub mod groups;
pub mod measure;
pub mod records;
pub mod seed;
pub mod walks;

pub use error::{Error, Result};
