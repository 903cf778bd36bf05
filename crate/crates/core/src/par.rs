//! Optional data parallelism. Reductions stay sequential so results do not
//! depend on the thread count.

#[cfg(feature = "parallel")]
pub fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Configures the global worker pool. Has no effect without the `parallel`
/// feature or when a pool already exists.
pub fn init_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

/// Calls `f(i, chunk)` for every `dim`-sized chunk of `out`.
#[cfg(feature = "parallel")]
pub fn fill_chunks(out: &mut [f64], dim: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
    use rayon::prelude::*;
    out.par_chunks_mut(dim).enumerate().for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
pub fn fill_chunks(out: &mut [f64], dim: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
    out.chunks_mut(dim).enumerate().for_each(|(i, c)| f(i, c));
}
