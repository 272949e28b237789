//! Data-parallel execution with a sequential fallback.
//!
//! Every parallel entry point in the crate funnels through [`Execution::map`],
//! which always returns results in input order. Callers therefore get
//! bit-identical output whichever variant runs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing pool.
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Ordered map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// Ordered map over `0..len`.
    pub fn map_range<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..len).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..len).into_par_iter().map(f).collect(),
        }
    }

    /// Ordered fallible map; the first error in input order wins.
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}
