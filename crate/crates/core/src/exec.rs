//! Execution strategy for data-parallel loops.
//!
//! Work items are always indexed and their random streams derived from the
//! index, so switching strategy never changes results, only wall time.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon thread pool. Without the `parallel` feature this runs
    /// sequentially.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f` to every element in place.
    pub fn for_each_mut<T, F>(self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
            return;
        }
        items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }

    /// Fallible variant of [`Execution::map_indexed`]; returns the error of the
    /// lowest failing index.
    pub fn try_map_indexed<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map_indexed(n, f).into_iter().collect()
    }
}
