//! Execution strategy for the data-parallel hot loops.
//!
//! Kernel assembly, independent Markov chains and VRJP runs are all maps over
//! an index range. With the `parallel` feature they go through rayon;
//! without it, or when [`Execution::Sequential`] is requested, they run on the
//! calling thread. Both paths produce identical results because each index is
//! computed independently and collected in order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Whether this strategy will actually use worker threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Fill `out[i] = f(i)` for every index, possibly in parallel.
pub fn fill<T, F>(exec: Execution, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, x)| *x = f(i));
        return;
    }
    let _ = exec;
    for (i, x) in out.iter_mut().enumerate() {
        *x = f(i);
    }
}
