use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// ChaCha8 keyed by `seed`, positioned on the independent stream `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for replication `replication` of sweep point `point`.
pub fn replication_stream(point: u64, replication: u64) -> u64 {
    (point << 32) | (replication & 0xffff_ffff)
}
