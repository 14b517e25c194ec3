//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, stream, index)`: the value at
//! a given index does not depend on how many draws were made before it.
//! This gives prefix stability when a point system is extended and makes
//! the generation path easy to reproduce in other languages.
//!
//! A stream is the splitmix64 sequence started at
//! `mix64(seed ^ STREAM_SALT[stream])`; element `i` is
//! `mix64(key + (i + 1) * 0x9E3779B97F4A7C15)`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Sub-stream used for the exponential inter-arrival times.
pub const STREAM_ARRIVALS: u64 = 0;
/// Sub-stream used for jump locations.
pub const STREAM_LOCATIONS: u64 = 1;
/// Sub-stream used for jump signs.
pub const STREAM_SIGNS: u64 = 2;

const STREAM_SALT: [u64; 3] = [
    0x243F_6A88_85A3_08D3,
    0x1319_8A2E_0370_7344,
    0xA409_3822_299F_31D0,
];

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A single decorrelated sub-stream of a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    key: u64,
}

impl Stream {
    /// `stream` selects the salt; values beyond the three named streams are
    /// folded into the key so callers may open further independent streams.
    pub fn new(seed: u64, stream: u64) -> Self {
        let salt = STREAM_SALT[(stream % 3) as usize] ^ mix64(stream / 3);
        Stream {
            key: mix64(seed ^ salt),
        }
    }

    #[inline]
    pub fn u64_at(&self, index: u64) -> u64 {
        mix64(self.key.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform on the open interval (0, 1): `(k + 1/2) / 2^52` for a 52-bit `k`.
    /// Both `u` and `1 − u` are exactly representable.
    #[inline]
    pub fn open01_at(&self, index: u64) -> f64 {
        ((self.u64_at(index) >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    /// Uniform on (0, 1) restricted to odd multiples of 2^-53.
    ///
    /// Such a value is never 0 and never equal to `j / n` for any grid size
    /// `n` whose power-of-two factor is below 2^53, so indicator conventions
    /// at grid points never matter.
    #[inline]
    pub fn location_at(&self, index: u64) -> f64 {
        (((self.u64_at(index) >> 11) | 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Unit-rate exponential by inversion: `-ln(1 - U)`.
    #[inline]
    pub fn exp1_at(&self, index: u64) -> f64 {
        -(1.0 - self.open01_at(index)).ln()
    }

    /// Rademacher sign from the top bit.
    #[inline]
    pub fn sign_at(&self, index: u64) -> f64 {
        if self.u64_at(index) >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Injective map from a replica index to a replica seed.
#[inline]
pub fn replica_seed(seed_base: u64, replica: u64) -> u64 {
    // multiplication by an odd constant is a bijection of u64
    seed_base.wrapping_add(replica.wrapping_mul(GOLDEN))
}

/// Sequential view of a [`Stream`] for samplers that want a `rand` generator.
#[derive(Debug, Clone)]
pub struct CounterRng {
    stream: Stream,
    next: u64,
}

impl CounterRng {
    pub fn new(stream: Stream) -> Self {
        CounterRng { stream, next: 0 }
    }
}

impl rand::RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let v = self.stream.u64_at(self.next);
        self.next += 1;
        v
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}
