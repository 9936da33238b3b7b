//! Sequential or rayon-backed execution of independent tasks.
//!
//! Every parallel region in the crate goes through these helpers. Results are
//! always collected in input order, so the choice of [`Execution`] never
//! changes an output, only how long it takes.

/// How independent work items (ranks, blocks, grid cells) are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the global rayon pool. Falls back to sequential execution when
    /// the crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Like [`map`](Self::map) but with mutable access to each item.
    pub fn map_mut<T, R, F>(self, items: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(&mut T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter_mut().map(f).collect();
        }
        items.iter_mut().map(f).collect()
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Runs two closures, potentially in parallel.
    pub fn join<A, B, RA, RB>(self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return rayon::join(a, b);
        }
        (a(), b())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u32> = (0..1000).collect();
        let seq = Execution::Sequential.map(&items, |x| x * 3);
        let par = Execution::Parallel.map(&items, |x| x * 3);
        assert_eq!(seq, par);
        assert_eq!(
            Execution::Parallel.map_range(10, |i| i * i),
            (0..10).map(|i| i * i).collect::<Vec<_>>()
        );
    }
}
