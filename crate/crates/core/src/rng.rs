//! Deterministic random streams.
//!
//! Every draw belongs to a named stream `(master_seed, key)`. Long streams
//! are cut into fixed chunks of [`CHUNK`] items, each with its own ChaCha8
//! generator seeded from `(master_seed, key, chunk_index)`, so output does
//! not depend on how chunks are scheduled across threads.
//!
//! Gaussian variates come from `rand_distr::StandardNormal` (ziggurat).
//! Bit-for-bit reproduction assumes the versions pinned in `Cargo.lock`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const CHUNK: usize = 4096;

/// Purpose of a stream. Streams with different roles never share a seed
/// derivation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Train = 1,
    Calibration = 2,
    Test = 3,
    Dataset = 4,
    Coverage = 5,
    Rate = 6,
}

/// Identifies one stream under a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamKey {
    pub role: Role,
    /// Experiment cell, or 0 when not applicable.
    pub cell: u64,
    /// Run or trial index within the cell.
    pub run: u64,
    /// Sub-stream, e.g. class or scorer.
    pub part: u64,
}

impl StreamKey {
    pub fn new(role: Role, cell: u64, run: u64, part: u64) -> Self {
        Self {
            role,
            cell,
            run,
            part,
        }
    }

    pub fn with_part(self, part: u64) -> Self {
        Self { part, ..self }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a master seed and a word sequence into a 64-bit seed.
pub fn derive_seed(master: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(splitmix64(master), |h, &w| splitmix64(h ^ splitmix64(w)))
}

pub fn stream_rng(master: u64, key: StreamKey, chunk: u64) -> ChaCha8Rng {
    let seed = derive_seed(
        master,
        &[key.role as u64, key.cell, key.run, key.part, chunk],
    );
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generates `n` items of a stream, chunk by chunk, in parallel when a
/// rayon pool is available. The result depends only on `(master, key, n)`.
pub fn generate<T, F>(master: u64, key: StreamKey, n: usize, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    generate_chunked(master, key, n, |rng, len, out| {
        out.extend((0..len).map(|_| draw(rng)));
    })
}

/// Like [`generate`], but the closure fills a whole chunk of `len` items at
/// once, which lets it reuse scratch buffers.
pub fn generate_chunked<T, F>(master: u64, key: StreamKey, n: usize, fill: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize, &mut Vec<T>) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(master, key, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            let mut out = Vec::with_capacity(len);
            fill(&mut rng, len, &mut out);
            debug_assert_eq!(out.len(), len);
            out
        })
        .collect();
    let mut all = Vec::with_capacity(n);
    for p in parts {
        all.extend(p);
    }
    all
}
