//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature these dispatch to rayon; without it they run
//! the same closures on plain iterators. Every helper returns results in
//! index order, so callers that fold the returned vector sequentially get
//! bit-identical output regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n` and collects the results in index order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Maps `f` over fixed-size chunks of `items`, passing the chunk index.
///
/// Chunk boundaries depend only on `chunk`, never on the thread pool.
pub fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        items
            .par_chunks(chunk)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items
            .chunks(chunk)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect()
    }
}

/// Runs `f` on each row of a row-major buffer.
pub fn for_each_row_mut<T, F>(values: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let width = width.max(1);
    #[cfg(feature = "parallel")]
    {
        values
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        values
            .chunks_mut(width)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
    }
}

/// Whether this build runs the helpers on a thread pool.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helpers_preserve_order() {
        assert_eq!(map_range(5, |i| i * 2), vec![0, 2, 4, 6, 8]);
        let items: Vec<u32> = (0..10).collect();
        let sums = map_chunks(&items, 4, |i, c| (i, c.iter().sum::<u32>()));
        assert_eq!(sums, vec![(0, 6), (1, 22), (2, 17)]);
        let mut buf = vec![0usize; 6];
        for_each_row_mut(&mut buf, 3, |r, row| row.iter_mut().for_each(|v| *v = r));
        assert_eq!(buf, vec![0, 0, 0, 1, 1, 1]);
    }
}
