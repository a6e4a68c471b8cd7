//! Reproducible random streams.
//!
//! A stream is identified by `(seed, stream_id)`. It is backed by ChaCha8, whose
//! output is a pure function of key, stream and counter, so identical identifiers
//! give identical draws on every platform. Child streams for actor threads,
//! environments or seeds are derived with [`RngStream::split`].

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent child stream. Depends only on this stream's identity and `child`,
    /// never on how many values have been drawn from it.
    pub fn split(&self, child: u64) -> RngStream {
        let key = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0xA5A5)));
        RngStream::new(key, child)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(r: &mut RngStream) -> Vec<u64> {
        (0..16).map(|_| r.next_u64()).collect()
    }

    #[test]
    fn same_identity_same_draws() {
        assert_eq!(draws(&mut RngStream::new(7, 3)), draws(&mut RngStream::new(7, 3)));
    }

    #[test]
    fn streams_differ() {
        assert_ne!(draws(&mut RngStream::new(7, 3)), draws(&mut RngStream::new(7, 4)));
        assert_ne!(draws(&mut RngStream::new(7, 3)), draws(&mut RngStream::new(8, 3)));
    }

    #[test]
    fn split_ignores_consumption() {
        let a = RngStream::new(11, 0);
        let mut b = RngStream::new(11, 0);
        let _ = draws(&mut b);
        assert_eq!(draws(&mut a.split(5)), draws(&mut b.split(5)));
        assert_ne!(draws(&mut a.split(5)), draws(&mut a.split(6)));
    }

    #[test]
    fn frozen_first_draw() {
        // ChaCha8 is specified bit-for-bit; pin the first draw so a dependency
        // upgrade that changed the stream would be caught.
        let mut r = RngStream::new(0, 0);
        let first = r.next_u64();
        let mut again = RngStream::new(0, 0);
        assert_eq!(first, again.next_u64());
        assert_eq!(first, 13080132717333068652);
        assert_eq!(RngStream::new(0, 0).split(1).seed(), RngStream::new(0, 0).split(2).seed());
    }
}
