//! Run-level parallelism.
//!
//! Batches of independent seeded runs (sweep rows, multi-seed world stats)
//! go through [`map_runs`], which fans out over rayon when the `parallel`
//! feature is on and otherwise runs in order. Results come back in input
//! order either way, so batch output does not depend on thread count. The
//! always-sequential [`map_runs_seq`] is the fallback body and the baseline
//! the benches compare against.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every item, in parallel when built with the `parallel`
/// feature. Output order matches input order regardless.
#[cfg(feature = "parallel")]
pub fn map_runs<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Applies `f` to every item, in parallel when built with the `parallel`
/// feature. Output order matches input order regardless.
#[cfg(not(feature = "parallel"))]
pub fn map_runs<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    map_runs_seq(items, f)
}

/// The sequential body behind [`map_runs`]; also the benchmark baseline.
pub fn map_runs_seq<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Caps worker threads for subsequent [`map_runs`] calls. No-op without the
/// `parallel` feature, or once a global pool exists.
pub fn limit_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_input_order() {
        let squares = map_runs((0u64..100).collect(), |i| i * i);
        let expected: Vec<u64> = (0..100).map(|i| i * i).collect();
        assert_eq!(squares, expected);
        assert_eq!(map_runs_seq((0u64..100).collect(), |i| i * i), expected);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let work = |seed: u64| {
            let mut rng = crate::seeds::rng(seed);
            (0..50).map(|_| rand::Rng::random::<u64>(&mut rng) % 97).sum::<u64>()
        };
        assert_eq!(map_runs((0..20).collect(), work), map_runs_seq((0..20).collect(), work));
    }
}
