//! Order-preserving map over independent work items.

/// Maps `f` over `items` on the worker pool; output order matches input.
#[cfg(feature = "parallel")]
pub fn map_collect<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Sequential fallback with the same contract.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    map_collect_seq(items, f)
}

pub fn map_collect_seq<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_matches_sequential() {
        let xs: Vec<u64> = (0..1000).collect();
        let sq = |x: &u64| x * x + 1;
        assert_eq!(map_collect(&xs, sq), map_collect_seq(&xs, sq));
    }
}
