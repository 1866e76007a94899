// SPDX-License-Identifier: Apache-2.0

//! Independent work items (sweep points, initial states, overlap rows).
//!
//! With the `parallel` feature, [`map`] fans out over the rayon pool;
//! without it, it is [`map_sequential`]. Results keep input order either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(items, f)
    }
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Size the global pool. A no-op without the `parallel` feature, and after
/// the pool has already been initialized.
pub fn set_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
            {
                log::debug!("thread pool already initialized: {e}");
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
    }
}

pub fn enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let par = map(&xs, |x| x * x);
        let seq = map_sequential(&xs, |x| x * x);
        assert_eq!(par, seq);
    }
}
