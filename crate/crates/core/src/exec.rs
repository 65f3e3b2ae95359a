//! Worker-count aware data-parallel maps.
//!
//! With the `parallel` feature (default) and more than one worker, index
//! ranges are mapped on a dedicated rayon pool; otherwise they run on the
//! calling thread. Results always come back in index order, so outputs do
//! not depend on the worker count.

use std::num::NonZeroUsize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Workers(NonZeroUsize);

impl Workers {
    pub fn new(count: usize) -> Self {
        Workers(NonZeroUsize::new(count.max(1)).expect("count is at least one"))
    }

    pub fn sequential() -> Self {
        Self::new(1)
    }

    /// One worker per available core.
    pub fn available() -> Self {
        Self::new(std::thread::available_parallelism().map_or(1, NonZeroUsize::get))
    }

    pub fn count(self) -> usize {
        self.0.get()
    }

    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.count() > 1 && len > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.count())
                .build()
                .expect("thread pool construction");
            return pool.install(|| (0..len).into_par_iter().map(&f).collect());
        }
        (0..len).map(f).collect()
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self::available()
    }
}
