//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch onto the current rayon pool,
//! unless that pool has a single thread, in which case the plain iterator path runs.
//! Installing a one-thread pool is therefore the runtime way to get the sequential path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// True when helpers in this module will fan work out across threads.
pub fn is_parallel() -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads() > 1
    }
    #[cfg(not(feature = "parallel"))]
    {
        false
    }
}

/// Number of workers the helpers will use.
pub fn workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Calls `f(row_index, row)` for every `width`-long row of `buf`.
pub fn for_each_row<T, F>(buf: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            buf.par_chunks_mut(width)
                .enumerate()
                .for_each(|(y, row)| f(y, row));
            return;
        }
    }
    for (y, row) in buf.chunks_mut(width).enumerate() {
        f(y, row);
    }
}

/// Like [`for_each_row`] over two equally shaped buffers in lockstep.
pub fn for_each_row2<A, B, F>(a: &mut [A], b: &mut [B], width: usize, f: F)
where
    A: Send,
    B: Send,
    F: Fn(usize, &mut [A], &mut [B]) + Sync + Send,
{
    debug_assert_eq!(a.len(), b.len());
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            a.par_chunks_mut(width)
                .zip(b.par_chunks_mut(width))
                .enumerate()
                .for_each(|(y, (ra, rb))| f(y, ra, rb));
            return;
        }
    }
    for (y, (ra, rb)) in a.chunks_mut(width).zip(b.chunks_mut(width)).enumerate() {
        f(y, ra, rb);
    }
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Runs `f` with helpers forced onto the sequential path.
pub fn sequential<R, F>(f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(1).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_visited_once_with_their_index() {
        let mut buf = vec![0usize; 12];
        for_each_row(&mut buf, 4, |y, row| row.iter_mut().for_each(|v| *v += y + 1));
        assert_eq!(buf, vec![1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn sequential_path_matches() {
        let par = map_indices(100, |i| i * i);
        let seq = sequential(|| map_indices(100, |i| i * i));
        assert_eq!(par, seq);
        assert!(sequential(|| !is_parallel()));
    }
}
