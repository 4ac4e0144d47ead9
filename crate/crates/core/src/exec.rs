//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (default) the work is spread over the rayon
//! pool; otherwise, or with [`ExecPolicy::Sequential`], it runs in order on
//! the calling thread. Output order always matches input order.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExecPolicy {
    #[cfg_attr(feature = "parallel", default)]
    Parallel,
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
}

impl ExecPolicy {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            ExecPolicy::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Worker threads this policy would use.
    pub fn threads(self) -> usize {
        match self {
            #[cfg(feature = "parallel")]
            ExecPolicy::Parallel => rayon::current_num_threads(),
            _ => 1,
        }
    }
}
