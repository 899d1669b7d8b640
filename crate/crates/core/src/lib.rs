//! Periodic p-harmonic functions on the Cayley tree.
//!
//! The Cayley tree of order `k` is the Cayley graph of `G_k`, the free product
//! of `k + 1` cyclic groups of order two. This crate provides
//!
//! * exact word arithmetic in `G_k` and finite balls of the tree ([`word_group`]),
//! * parity subgroups of finite index and the infinite-index kernels of the
//!   projection onto two generators ([`subgroup`]),
//! * the discrete p-Laplacian with edge resistances, p-energy and a convex
//!   Dirichlet solver ([`plaplace`]),
//! * periodic solutions for finite-index subgroups, which are always constant
//!   ([`periodic_finite`]),
//! * the two explicit families of non-constant periodic solutions for the
//!   infinite-index kernels and their linear combinations ([`periodic_infinite`]),
//! * the job layer behind the `pharmonic` binary ([`cli`]).

pub mod cli;
pub mod error;
pub mod periodic_finite;
pub mod periodic_infinite;
pub mod plaplace;
pub mod subgroup;
pub mod word_group;

pub use error::{Error, Result};
pub use word_group::{Ball, ReducedWord};
