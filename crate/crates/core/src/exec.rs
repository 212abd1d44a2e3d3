//! Work-splitting helpers.
//!
//! With the `parallel` feature (default) the loops below run on rayon;
//! without it they are plain sequential loops. All reductions happen in
//! index order over per-chunk partials, so parallel and sequential runs
//! produce bit-identical results.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential code path even when the `parallel` feature is
/// enabled. Used by the benchmark suite and the determinism tests.
pub fn set_sequential(force: bool) {
    FORCE_SEQUENTIAL.store(force, Ordering::SeqCst);
}

/// Whether work will actually be split across threads.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// `(0..n).map(f)` collected in index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(&f).collect();
    }
    (0..n).map(f).collect()
}

/// Visit each row of a row-major buffer. Rows are independent.
pub(crate) fn fill_rows<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    debug_assert_eq!(data.len() % width.max(1), 0);
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(j, row)| f(j, row));
        return;
    }
    for (j, row) in data.chunks_mut(width).enumerate() {
        f(j, row);
    }
}
