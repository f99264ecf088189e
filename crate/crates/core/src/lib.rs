//! Numerical core for Bayesian inverse problems with explicit and implicit priors.
//!
//! The crate is `no_std` and only needs an allocator. It composes forward
//! models, likelihoods and priors into posteriors and samples them with
//! Langevin-type chains (ULA, PGLA, MYULA / PnP-ULA), randomize-then-optimize
//! samplers (linear and regularized) and a hierarchical Gibbs sampler.
//!
//! IO, process management and concurrency live in the `bayesinv` companion
//! crate.
#![no_std]
// `Float` supplies float math without std; when std is in the build graph its
// inherent methods take over and the imports look unused.
#![allow(unused_imports)]
// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod distributions;
pub mod error;
pub mod geometry;
pub mod implicit;
pub mod linalg;
pub mod operators;
pub mod optim;
pub mod posterior;
pub mod problems;
pub mod proximal;
pub mod samplers;
pub mod stats;

pub use error::{Error, Result};
