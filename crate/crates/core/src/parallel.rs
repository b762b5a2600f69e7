//! Worker pools with order-preserving maps. Reductions over the collected
//! results go through [`crate::sum::tree_sum`], so outputs do not depend on
//! the number of workers.

use rayon::prelude::*;

pub const WORKERS_ENV: &str = "SRBKIT_WORKERS";

/// Worker count from `SRBKIT_WORKERS`, defaulting to the available cores.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` inside a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(err) => {
            log::warn!("could not build a pool of {workers} workers ({err}); using the global pool");
            f()
        }
    }
}

/// `items.map(f)` evaluated on the current pool, results in input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

/// Fallible order-preserving map; the error reported is the one with the
/// smallest index.
pub fn try_par_map<T: Sync, R: Send, E: Send>(
    items: &[T],
    f: impl Fn(&T) -> Result<R, E> + Sync + Send,
) -> Result<Vec<R>, E> {
    let results: Vec<Result<R, E>> = items.par_iter().map(f).collect();
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_preserves_order_across_pool_sizes() {
        let items: Vec<u64> = (0..1000).collect();
        let one = with_workers(1, || par_map(&items, |x| x * x));
        let four = with_workers(4, || par_map(&items, |x| x * x));
        assert_eq!(one, four);
        assert_eq!(one[999], 998_001);
    }

    #[test]
    fn try_par_map_reports_first_error() {
        let items: Vec<i32> = (0..100).collect();
        let r: Result<Vec<i32>, i32> = try_par_map(&items, |&x| if x % 30 == 29 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(29));
    }
}
