//! Execution strategy for independent, index-keyed tasks.
//!
//! Every task derives its own random stream from its index, so results do not
//! depend on which strategy runs them. The core ships only [`Sequential`];
//! threaded strategies live with the standard library.

use alloc::vec::Vec;

pub trait Parallelism: Sync {
    /// `(0..n).map(f)`, returned in index order.
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Parallelism for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..n).map(f).collect()
    }
}
