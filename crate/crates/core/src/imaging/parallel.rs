use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

/// Execution policy for row-partitioned pixel kernels.
///
/// Every kernel computes each output row from immutable inputs only, so the
/// result is bit-identical whatever the worker count.
#[derive(Clone, Default)]
pub struct Workers {
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl Workers {
    /// Run kernels on the calling thread.
    pub fn sequential() -> Self {
        Self { pool: None }
    }

    /// A dedicated pool of `n` threads; `n <= 1` is sequential.
    pub fn new(n: usize) -> Self {
        if n <= 1 {
            return Self::sequential();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .thread_name(|i| format!("fizi-worker-{i}"))
            .build()
            .expect("failed to spawn worker pool");
        Self {
            pool: Some(Arc::new(pool)),
        }
    }

    pub fn count(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Fills `out` row by row. `row_len` is the number of elements per row;
    /// `f(y, row)` must write the whole row.
    pub fn for_each_row<T, F>(&self, out: &mut [T], row_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match &self.pool {
            None => out
                .chunks_mut(row_len)
                .enumerate()
                .for_each(|(y, row)| f(y, row)),
            Some(pool) => pool.install(|| {
                out.par_chunks_mut(row_len)
                    .enumerate()
                    .for_each(|(y, row)| f(y, row))
            }),
        }
    }

    /// Runs two closures, concurrently when a pool is available.
    pub fn join<A, B, RA, RB>(&self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        match &self.pool {
            None => (a(), b()),
            Some(pool) => pool.install(|| rayon::join(a, b)),
        }
    }
}

impl fmt::Debug for Workers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Workers").field("count", &self.count()).finish()
    }
}
