//! Parallel replications on a rayon pool.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};

use onesided_core::mc::Executor;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "ONESIDED_WORKERS";

/// Runs replications on a dedicated thread pool. Results come back in index
/// order, and each replication owns its random stream, so the output does not
/// depend on the number of workers.
#[derive(Debug)]
pub struct Rayon {
    pool: ThreadPool,
}

impl Rayon {
    pub fn new(workers: usize) -> Result<Self, ThreadPoolBuildError> {
        let pool = ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
        Ok(Self { pool })
    }

    /// Worker count from [`WORKERS_ENV`], else one per available core.
    pub fn from_env() -> Result<Self, ThreadPoolBuildError> {
        Self::new(workers_from_env().unwrap_or_else(default_workers))
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Rayon {
    fn map_replications<T, F>(&self, replications: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..replications).into_par_iter().map(f).collect())
    }
}

/// Parses [`WORKERS_ENV`]; unset, empty, zero or unparsable values give `None`.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse::<usize>().ok().filter(|&w| w > 0)
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use onesided_core::mc::Serial;

    #[test]
    fn matches_serial_order() {
        let f = |i: usize| (i * i) as u64 ^ 0x5a;
        let serial = Serial.map_replications(1000, f);
        for w in [1, 3, 8] {
            assert_eq!(Rayon::new(w).unwrap().map_replications(1000, f), serial);
        }
    }

    #[test]
    fn zero_workers_means_one() {
        assert_eq!(Rayon::new(0).unwrap().workers(), 1);
    }
}
