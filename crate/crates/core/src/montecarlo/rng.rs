use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies an independent random stream: a seed plus a stream id.
///
/// Work is split into fixed-size shards, each drawing from its own ChaCha
/// stream, so results do not depend on how shards are spread over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    /// A derived stream, independent of this one and of its other children.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(0x5EED))),
        }
    }

    /// Generator for shard `shard` of this stream.
    pub fn shard(&self, shard: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(
            splitmix64(self.stream) ^ splitmix64(shard.wrapping_mul(0xA24B_AED4_963E_E407)),
        );
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_stream_same_draws() {
        let s = RngStream::new(7, 3);
        let draw = |mut r: ChaCha8Rng| (0..5).map(|_| r.random()).collect::<Vec<u64>>();
        let a = draw(s.shard(2));
        let b = draw(s.shard(2));
        assert_eq!(a, b);
        let c: u64 = s.shard(3).random();
        assert_ne!(a[0], c);
        let d: u64 = RngStream::new(7, 4).shard(2).random();
        assert_ne!(a[0], d);
        assert_ne!(s.child(0), s.child(1));
    }
}
