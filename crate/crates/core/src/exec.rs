//! Pluggable execution of independent jobs.
//!
//! Finite-difference gradient components in the joint solver and Monte Carlo
//! runs in the simulator are independent of each other. The core crate runs
//! them in order with [`Sequential`]; a threaded executor can be supplied by
//! a `std` crate. Results must come back in index order so that outputs do
//! not depend on scheduling.

use alloc::vec::Vec;

/// Runs `n` independent jobs and returns their results in index order.
pub trait Executor {
    fn map<R, F>(&self, n: usize, job: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<R, F>(&self, n: usize, job: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(job).collect()
    }
}
