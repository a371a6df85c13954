//! Thin wrappers that run on rayon with the `parallel` feature and fall back
//! to plain iterators otherwise. Work is always split at fixed boundaries so
//! floating-point results never depend on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, preserving order.
pub(crate) fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Calls `f(row_index, row)` for every `width`-sized row of `data`.
pub(crate) fn for_each_row<F>(data: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
    }
}

/// Maps fixed blocks of `rows_per_block` rows of `data` through `f`,
/// returning one value per block in block order.
pub(crate) fn map_row_blocks<T, F>(data: &mut [f64], width: usize, rows_per_block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut [f64]) -> T + Sync + Send,
{
    let chunk = width * rows_per_block;
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk)
            .enumerate()
            .map(|(b, rows)| f(b * rows_per_block, rows))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk)
            .enumerate()
            .map(|(b, rows)| f(b * rows_per_block, rows))
            .collect()
    }
}

/// Same as [`for_each_row`] but also hands out the matching element of `out`.
pub(crate) fn for_each_row_with<U, F>(data: &mut [f64], width: usize, out: &mut [U], f: F)
where
    U: Send,
    F: Fn(usize, &mut [f64], &mut U) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(width)
            .zip(out.par_iter_mut())
            .enumerate()
            .for_each(|(i, (row, o))| f(i, row, o));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(width)
            .zip(out.iter_mut())
            .enumerate()
            .for_each(|(i, (row, o))| f(i, row, o));
    }
}
