//! Seeded, splittable random streams and the chunked parallel driver.
//!
//! Every Monte Carlo estimator splits its episodes into fixed-size chunks. Chunk
//! `k` of a job tagged `tag` draws from ChaCha8 stream `stream_id(tag, k)`, and
//! the per-chunk results are reduced in chunk order, so outputs do not depend on
//! the number of worker threads.

use std::sync::OnceLock;

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Episodes per chunk. Part of the reproducibility contract: changing it changes outputs.
pub const CHUNK: u64 = 4096;

/// A ChaCha8 keystream identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct SeededStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        SeededStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for SeededStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.rng.try_fill_bytes(dest)
    }
}

/// FNV-1a of the tag in the high 32 bits, chunk index in the low 32.
pub fn stream_id(tag: &str, chunk: u64) -> u64 {
    let mut h: u32 = 0x811c_9dc5;
    for b in tag.bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    ((h as u64) << 32) | (chunk & 0xffff_ffff)
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var("OWK_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
    })
}

/// Runs `f(rng, count)` over `ceil(n / CHUNK)` chunks and returns the results in
/// chunk order. The last chunk gets the remainder.
pub fn par_chunks<T, F>(seed: u64, tag: &str, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SeededStream, u64) -> T + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    pool().install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|k| {
                let count = CHUNK.min(n - k * CHUNK);
                let mut rng = SeededStream::new(seed, stream_id(tag, k));
                f(&mut rng, count)
            })
            .collect()
    })
}
