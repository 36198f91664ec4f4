//! Data-parallel helpers. With the `parallel` feature work is spread over a
//! rayon pool; without it everything runs on the calling thread. Results are
//! always returned in index order, so both builds produce identical output.

/// `(0..n).map(f)`, possibly in parallel.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Run `f` with at most `jobs` worker threads. `None` uses the global pool.
pub fn with_jobs<R, F>(jobs: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if let Some(j) = jobs {
            match rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
                Ok(pool) => return pool.install(f),
                Err(e) => log::warn!("could not build a {j}-thread pool ({e}); using the global pool"),
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

/// Whether this build runs work in parallel.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
