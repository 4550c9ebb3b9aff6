//! Data-parallel helpers with a sequential fallback.
//!
//! With the `rayon` feature (on by default) [`Parallelism::Rayon`] spreads
//! work over the global rayon pool. Without it, every call runs sequentially
//! regardless of the requested mode, so callers never need their own `cfg`.

#[cfg(feature = "rayon")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "rayon") {
            Parallelism::Rayon
        } else {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "rayon") && self == Parallelism::Rayon
    }
}

/// `f` over `0..n`, results in index order.
pub fn map_range<R, F>(n: usize, mode: Parallelism, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "rayon")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// `f` over a slice, results in order.
pub fn map_slice<T, R, F>(items: &[T], mode: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "rayon")]
    if mode.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Accumulates `step(acc, i)` for `i in 0..n` into dense `f64` buffers of length `len`.
///
/// In parallel mode each worker owns a buffer and the buffers are summed at the end.
pub fn accumulate<F>(n: usize, len: usize, mode: Parallelism, step: F) -> Vec<f64>
where
    F: Fn(&mut [f64], usize) + Sync + Send,
{
    #[cfg(feature = "rayon")]
    if mode.is_parallel() && n > 1 {
        return (0..n)
            .into_par_iter()
            .fold(
                || vec![0.0; len],
                |mut acc, i| {
                    step(&mut acc, i);
                    acc
                },
            )
            .reduce(
                || vec![0.0; len],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(&b) {
                        *x += y;
                    }
                    a
                },
            );
    }
    let _ = mode;
    let mut acc = vec![0.0; len];
    for i in 0..n {
        step(&mut acc, i);
    }
    acc
}

/// Minimum of `f` over `0..n` (`+∞` when empty).
pub fn min_over<F>(n: usize, mode: Parallelism, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "rayon")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().map(f).reduce(|| f64::INFINITY, f64::min);
    }
    let _ = mode;
    (0..n).map(f).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        for mode in [Parallelism::Sequential, Parallelism::Rayon] {
            assert_eq!(map_range(5, mode, |i| i * i), vec![0, 1, 4, 9, 16]);
            let acc = accumulate(100, 3, mode, |buf, i| {
                buf[i % 3] += 1.0;
            });
            assert_eq!(acc, vec![34.0, 33.0, 33.0]);
            assert_eq!(min_over(4, mode, |i| 10.0 - i as f64), 7.0);
            assert_eq!(map_slice(&[1, 2, 3], mode, |x| x + 1), vec![2, 3, 4]);
        }
    }
}
