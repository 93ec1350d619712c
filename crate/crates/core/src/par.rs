//! Data-parallel helpers with a sequential fallback.
//!
//! Work is always cut into the same fixed-size chunks and reduced in chunk
//! order, so results do not depend on the thread count or on whether the
//! `parallel` feature is enabled.

use std::cell::Cell;
use std::ops::Range;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with parallel execution disabled on the calling thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(prev));
    out
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(|c| c.get())
}

fn chunk_ranges(len: usize, chunk: usize) -> Vec<Range<usize>> {
    let chunk = chunk.max(1);
    (0..len)
        .step_by(chunk)
        .map(|start| start..(start + chunk).min(len))
        .collect()
}

/// Maps `f` over `0..len`, preserving order.
pub fn map_indexed<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    (0..len).map(f).collect()
}

/// Maps `f` over the items of a slice, preserving order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_indexed(items.len(), |i| f(&items[i]))
}

/// Accumulates `f(range, acc)` over fixed chunks of `0..len` into a dense
/// vector of length `dim`. Each chunk gets its own zeroed accumulator; the
/// chunk accumulators are summed in ascending chunk order.
pub fn chunked_sum<F>(len: usize, chunk: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync + Send,
{
    let ranges = chunk_ranges(len, chunk);
    let partials = map(&ranges, |r| {
        let mut acc = vec![0.0; dim];
        f(r.clone(), &mut acc);
        acc
    });
    let mut total = vec![0.0; dim];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_sequential_bitwise() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() * 1e3).collect();
        let run = || {
            chunked_sum(xs.len(), 17, 3, |r, acc| {
                for i in r {
                    acc[i % 3] += xs[i] * xs[i].cos();
                }
            })
        };
        let a = run();
        let b = sequential(run);
        assert_eq!(a, b);
    }

    #[test]
    fn map_preserves_order() {
        let out = map_indexed(100, |i| i * 2);
        assert_eq!(out, (0..100).map(|i| i * 2).collect::<Vec<_>>());
    }
}
