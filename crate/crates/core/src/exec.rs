//! Order-preserving data-parallel map used by every sweep in the crate.
//!
//! With the `parallel` feature the work is spread over the rayon pool; the
//! output is always in input order, so downstream reductions see the same
//! sequence regardless of thread count. The mode can be switched at runtime
//! (benchmarks compare both paths in one binary).

use std::sync::atomic::{AtomicU8, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sequential,
    Parallel,
}

const SEQUENTIAL: u8 = 0;
const PARALLEL: u8 = 1;

static MODE: AtomicU8 = AtomicU8::new(if cfg!(feature = "parallel") {
    PARALLEL
} else {
    SEQUENTIAL
});

/// Current execution mode. Always `Sequential` without the `parallel` feature.
pub fn mode() -> Mode {
    match MODE.load(Ordering::Relaxed) {
        PARALLEL if cfg!(feature = "parallel") => Mode::Parallel,
        _ => Mode::Sequential,
    }
}

pub fn set_mode(mode: Mode) {
    let v = match mode {
        Mode::Sequential => SEQUENTIAL,
        Mode::Parallel => PARALLEL,
    };
    MODE.store(v, Ordering::Relaxed);
}

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode() == Mode::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Map `f` over a slice, collecting results in slice order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_range(items.len(), |i| f(&items[i]))
}

/// Fallible variant of [`map_slice`]; returns the first error in input order.
pub fn try_map_slice<S, T, E, F>(items: &[S], f: F) -> Result<Vec<T>, E>
where
    S: Sync,
    T: Send,
    E: Send,
    F: Fn(&S) -> Result<T, E> + Sync + Send,
{
    map_slice(items, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let out = map_range(1000, |i| i * 2);
        assert!(out.iter().enumerate().all(|(i, &v)| v == 2 * i));
    }

    #[test]
    fn first_error_in_input_order() {
        let items: Vec<i32> = (0..100).collect();
        let r: Result<Vec<i32>, i32> =
            try_map_slice(&items, |&x| if x % 7 == 3 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(3));
    }
}
