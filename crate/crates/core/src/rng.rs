use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stream {
    Innovations = 1,
    Resample = 2,
    Search = 3,
}

pub(crate) fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
