//! Row-level execution: rayon data-parallel map with a sequential fallback.
//!
//! Sweep rows are independent pure computations, so the only coordination is
//! index order, which `collect` preserves in both modes. Building without the
//! `parallel` feature turns every map into the sequential path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode for sweeps and batteries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    /// Use the rayon pool when the `parallel` feature is enabled,
    /// otherwise fall back to sequential.
    Parallel,
    Sequential,
}

/// Map `f` over `0..n` preserving index order.
pub fn map_indexed<R, F>(n: usize, mode: Parallelism, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match mode {
        Parallelism::Sequential => (0..n).map(f).collect(),
        Parallelism::Parallel => {
            #[cfg(feature = "parallel")]
            {
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n).map(f).collect()
            }
        }
    }
}

/// Configure the global worker pool size. A no-op when the pool is already
/// built or the `parallel` feature is off.
pub fn configure_jobs(jobs: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let seq = map_indexed(100, Parallelism::Sequential, |i| i * i);
        let par = map_indexed(100, Parallelism::Parallel, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
