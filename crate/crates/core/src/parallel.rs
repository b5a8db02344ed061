//! Trajectory-parallel execution with a deterministic chunking contract.
//!
//! Trajectory ids `0..n` are cut into fixed chunks of `chunk` ids. Each chunk
//! is processed sequentially in id order and chunk results are returned in
//! chunk order, so any reduction over them is independent of the worker
//! count. With the `parallel` feature disabled, or `workers == 1`, chunks run
//! on the calling thread.

use serde::{Deserialize, Serialize};

/// Sampling controls shared by every Monte Carlo routine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McOptions {
    /// number of trajectories
    pub n: u64,
    /// Euler step
    pub h: f64,
    /// simulation cap; `None` selects the routine's documented default
    pub horizon: Option<f64>,
    pub seed: u64,
    /// trajectory `i` uses RNG stream `stream_offset + i`
    pub stream_offset: u64,
    /// 0 = all available threads
    pub workers: usize,
    /// trajectories per chunk (part of the seed contract)
    pub chunk: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { n: 10_000, h: 1e-3, horizon: None, seed: 0, stream_offset: 0, workers: 1, chunk: 256 }
    }
}

impl McOptions {
    pub fn new(n: u64, h: f64, seed: u64) -> Self {
        Self { n, h, seed, ..Self::default() }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_stream_offset(mut self, offset: u64) -> Self {
        self.stream_offset = offset;
        self
    }

    /// Run `f(first_id, end_id)` over all chunks; results in chunk order.
    pub fn map_chunks<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, u64) -> T + Sync + Send,
    {
        map_chunks(self.n, self.chunk, self.workers, f)
    }
}

pub fn map_chunks<T, F>(n: u64, chunk: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let ranges: Vec<(u64, u64)> = (0..n.div_ceil(chunk)).map(|k| (k * chunk, ((k + 1) * chunk).min(n))).collect();
    run(ranges, workers, f)
}

#[cfg(feature = "parallel")]
fn run<T, F>(ranges: Vec<(u64, u64)>, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 1 || ranges.len() <= 1 {
        return ranges.into_iter().map(|(a, b)| f(a, b)).collect();
    }
    let go = || ranges.par_iter().map(|&(a, b)| f(a, b)).collect();
    if workers == 0 {
        return go();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(go),
        Err(_) => ranges.iter().map(|&(a, b)| f(a, b)).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run<T, F>(ranges: Vec<(u64, u64)>, _workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    ranges.into_iter().map(|(a, b)| f(a, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_order_is_stable() {
        let a = map_chunks(1000, 64, 1, |s, e| (s..e).sum::<u64>());
        let b = map_chunks(1000, 64, 4, |s, e| (s..e).sum::<u64>());
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
        assert_eq!(a.iter().sum::<u64>(), 999 * 1000 / 2);
    }
}
