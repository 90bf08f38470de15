use hpdr_core::exec::{DeviceAdapter, DEFAULT_STAGING_CAPACITY};
use rayon::prelude::*;

/// Worker-pool adapter. Items run concurrently on a private rayon pool and
/// results come back in index order, so output matches [`hpdr_core::exec::Serial`]
/// bit for bit.
#[derive(Debug)]
pub struct ThreadedCpu {
    pool: rayon::ThreadPool,
    workers: usize,
    staging_capacity: usize,
}

impl ThreadedCpu {
    /// `threads == 0` means the hardware parallelism.
    pub fn new(threads: usize) -> Self {
        let workers = if threads == 0 {
            default_threads()
        } else {
            threads
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("hpdr-worker-{i}"))
            .build()
            .expect("failed to start worker pool");
        ThreadedCpu {
            pool,
            workers,
            staging_capacity: DEFAULT_STAGING_CAPACITY,
        }
    }

    pub fn with_staging_capacity(mut self, bytes: usize) -> Self {
        self.staging_capacity = bytes;
        self
    }
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

impl DeviceAdapter for ThreadedCpu {
    fn name(&self) -> &'static str {
        "threaded-cpu"
    }

    fn workers(&self) -> usize {
        self.workers
    }

    fn staging_capacity(&self) -> usize {
        self.staging_capacity
    }

    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(&f).collect())
    }

    fn for_each_mut<I, F>(&self, items: &mut [I], f: F)
    where
        I: Send,
        F: Fn(usize, &mut I) + Sync,
    {
        self.pool
            .install(|| items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_keeps_index_order() {
        let a = ThreadedCpu::new(4);
        assert_eq!(
            a.map(1000, |i| i * 3),
            (0..1000).map(|i| i * 3).collect::<Vec<_>>()
        );
        let mut v = vec![0usize; 257];
        a.for_each_mut(&mut v, |i, x| *x = i + 1);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i + 1));
        assert_eq!(a.workers(), 4);
    }
}
