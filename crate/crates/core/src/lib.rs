//! Multicore CPU kernels with deterministic, testable semantics.
//!
//! The crate provides four families of kernels:
//!
//! * [`matrix`] / [`matmul`]: dense square matrices and four multiplication
//!   variants (naive triple loop, row-parallel, recursive blocked, Strassen),
//!   all instrumented with exact scalar operation counts where it matters.
//! * [`graph`] / [`bfs`]: unweighted digraphs with sequential and
//!   level-synchronous parallel breadth-first search.
//! * [`apsp`]: all-pairs shortest paths over weighted digraphs, as an
//!   in-place iterative sweep and a recursive blocked variant, plus a
//!   machine-independent block-touch proxy for cache behaviour.
//! * [`mapreduce`]: an in-process MapReduce engine with worker threads,
//!   heartbeat failure detection, task reassignment, and master
//!   checkpoint/recovery. Output bytes are deterministic for a fixed job
//!   regardless of worker count or injected faults.

pub mod apsp;
pub mod bfs;
pub mod graph;
pub mod mapreduce;
pub mod matmul;
pub mod matrix;
pub mod rng;

mod error;

pub use error::{Error, Result};
pub use matmul::{
    matmul_blocked, matmul_blocked_with, matmul_naive, matmul_parallel, matmul_strassen, MulStats,
};
pub use matrix::{pad_pow2, Matrix};
