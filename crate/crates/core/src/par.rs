//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run sequentially. Results are always returned in input order, so
//! output never depends on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `op` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], op: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(op).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(op).collect()
    }
}

/// Maps `op` over `0..n`, preserving order.
pub fn map_range<R, F>(n: usize, op: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(op).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(op).collect()
    }
}

/// Pointwise maximum of equally sized rows. Max is associative and
/// commutative, so the parallel reduction is bit-identical to the
/// sequential one.
pub fn pointwise_max(rows: &[Vec<f64>], len: usize) -> Vec<f64> {
    let merge = |mut acc: Vec<f64>, row: &Vec<f64>| {
        for (a, &r) in acc.iter_mut().zip(row) {
            if r > *a {
                *a = r;
            }
        }
        acc
    };
    #[cfg(feature = "parallel")]
    {
        rows.par_iter()
            .fold(|| vec![0.0; len], merge)
            .reduce(
                || vec![0.0; len],
                |a, b| {
                    a.into_iter()
                        .zip(b)
                        .map(|(x, y)| if y > x { y } else { x })
                        .collect()
                },
            )
    }
    #[cfg(not(feature = "parallel"))]
    {
        rows.iter().fold(vec![0.0; len], merge)
    }
}

/// Number of worker threads the helpers will use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Configures the global worker pool. Without the `parallel` feature this is
/// a no-op. Fails if the pool was already initialised with another size.
pub fn init_threads(threads: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let items: Vec<u32> = (0..1000).collect();
        let out = map(&items, |x| x * 2);
        assert!(out.iter().enumerate().all(|(i, &v)| v == 2 * i as u32));
        assert_eq!(map_range(5, |i| i), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn pointwise_max_merges() {
        let rows = vec![vec![1.0, 5.0, 0.0], vec![3.0, 2.0, 0.5], vec![0.0, 0.0, 0.25]];
        assert_eq!(pointwise_max(&rows, 3), vec![3.0, 5.0, 0.5]);
        assert_eq!(pointwise_max(&[], 2), vec![0.0, 0.0]);
    }
}
