//! Data-parallel helpers.
//!
//! With the `parallel` feature the loops below fan out over rayon's global
//! pool; without it (or after `set_execution(Execution::Sequential)`) they run
//! on the calling thread. Results are always returned in index order so that
//! downstream reductions are bit-for-bit reproducible.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static PARALLEL: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

/// Select the execution mode. `Parallel` is ignored when the crate was built
/// without the `parallel` feature.
pub fn set_execution(mode: Execution) {
    PARALLEL.store(
        mode == Execution::Parallel && cfg!(feature = "parallel"),
        Ordering::Relaxed,
    );
}

pub fn execution() -> Execution {
    if PARALLEL.load(Ordering::Relaxed) {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if n > 1 && execution() == Execution::Parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Apply `f` to every chunk of `data`, possibly in parallel.
pub fn for_each_chunk<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if data.len() > chunk && chunk >= PAR_CHUNK_MIN && execution() == Execution::Parallel {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

// Chunks smaller than this are not worth a task.
#[cfg(feature = "parallel")]
const PAR_CHUNK_MIN: usize = 1 << 12;
