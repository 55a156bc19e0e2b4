//! Data-parallel loop helpers. With the `parallel` feature (default) the
//! indexed maps run on rayon; without it they fall back to sequential
//! iteration. Results are index-ordered either way, so callers are
//! deterministic regardless of schedule.

pub(crate) fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}

/// Forced-mode variant used by the benchmark suite to compare both paths in
/// one build. Falls back to sequential when rayon is compiled out.
pub(crate) fn map_indexed_forced<T, F>(parallel: bool, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if parallel {
        map_indexed(n, f)
    } else {
        map_indexed_seq(n, f)
    }
}
