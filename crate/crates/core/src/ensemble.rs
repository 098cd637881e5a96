//! Deterministic parallel ensembles.
//!
//! Draws are grouped into fixed-size chunks and chunk `c` always uses
//! sub-stream `c` of the seed, so results depend only on the seed and the
//! number of draws, never on the thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Draws per chunk. Changing it changes every seeded result.
pub const CHUNK: usize = 256;

/// Sub-stream `index` of `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn chunk_bounds(n: usize) -> impl IndexedParallelIterator<Item = (u64, usize)> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(move |c| (c as u64, CHUNK.min(n - c * CHUNK)))
}

/// Runs `draw` `n` times and returns the results in draw order.
pub fn map_draws<T, F>(seed: u64, n: usize, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Stream) -> T + Sync,
{
    let chunks: Vec<Vec<T>> = chunk_bounds(n)
        .map(|(c, len)| {
            let mut rng = stream(seed, c);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// Folds `n` draws into per-chunk accumulators and merges them in chunk
/// order, so `merge` need not be commutative.
pub fn fold_draws<A, I, F, M>(seed: u64, n: usize, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &mut Stream) + Sync,
    M: Fn(&mut A, A),
{
    let parts: Vec<A> = chunk_bounds(n)
        .map(|(c, len)| {
            let mut rng = stream(seed, c);
            let mut acc = init();
            for _ in 0..len {
                fold(&mut acc, &mut rng);
            }
            acc
        })
        .collect();
    let mut total = init();
    for part in parts {
        merge(&mut total, part);
    }
    total
}
