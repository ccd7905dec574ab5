//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper splits work into fixed-size chunks, so the order in which
//! partial sums are combined never depends on the thread schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used for reductions.
pub const CHUNK: usize = 4096;

/// Pairwise (tree) summation. Deterministic and accurate to O(log n) ulp.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sum `f(i)` over `0..n` with a deterministic reduction tree.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let partial = chunk_map(n, CHUNK, |range| {
        let vals: Vec<f64> = range.map(&f).collect();
        pairwise_sum(&vals)
    });
    pairwise_sum(&partial)
}

/// Apply `f` to consecutive index ranges of length `chunk` (the last may be
/// shorter) and collect the results in order.
pub fn chunk_map<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let nchunks = n.div_ceil(chunk);
    let range = move |c: usize| c * chunk..((c + 1) * chunk).min(n);
    #[cfg(feature = "parallel")]
    {
        (0..nchunks).into_par_iter().map(|c| f(range(c))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..nchunks).map(|c| f(range(c))).collect()
    }
}

/// Fill `out` chunk by chunk; `f` receives the starting index and the chunk.
pub fn fill_chunks<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(chunk).enumerate().for_each(|(c, s)| f(c * chunk, s));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(chunk).enumerate().for_each(|(c, s)| f(c * chunk, s));
    }
}

/// Like [`fill_chunks`], but `f` also returns a partial sum per chunk; the
/// partials are combined with [`pairwise_sum`].
pub fn fill_chunks_sum<T, F>(out: &mut [T], chunk: usize, f: F) -> f64
where
    T: Send,
    F: Fn(usize, &mut [T]) -> f64 + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    let partial: Vec<f64> = out
        .par_chunks_mut(chunk)
        .enumerate()
        .map(|(c, s)| f(c * chunk, s))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let partial: Vec<f64> = out
        .chunks_mut(chunk)
        .enumerate()
        .map(|(c, s)| f(c * chunk, s))
        .collect();
    pairwise_sum(&partial)
}

/// Elementwise map into a fresh vector.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(usize) -> T + Sync + Send,
{
    let mut out = vec![T::default(); n];
    fill_chunks(&mut out, CHUNK, |start, s| {
        for (k, v) in s.iter_mut().enumerate() {
            *v = f(start + k);
        }
    });
    out
}

/// Run independent jobs, in parallel when available, preserving order.
pub fn map_jobs<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_for_integers() {
        let xs: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 49_995_000.0);
        assert_eq!(sum_indexed(10_000, |i| i as f64), 49_995_000.0);
    }

    #[test]
    fn chunk_map_preserves_order() {
        let v = chunk_map(10, 3, |r| r.start);
        assert_eq!(v, vec![0, 3, 6, 9]);
        let m: Vec<usize> = map_indexed(7, |i| i * i);
        assert_eq!(m, vec![0, 1, 4, 9, 16, 25, 36]);
    }
}
