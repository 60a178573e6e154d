//! Counter-based deterministic random streams.
//!
//! Every draw is a pure function of `(key, counter)`, where the key is derived
//! from a `(seed, stream_id)` pair. Because there is no hidden generator
//! state, any worker can reproduce the draw at a given counter without
//! replaying its predecessors, which makes Monte Carlo runs bitwise
//! independent of scheduling and thread count.

/// Golden-ratio increment used by the SplitMix64 construction.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective avalanche mix on 64 bits.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic random stream addressed by `(key, counter)`.
///
/// Cloning is cheap; clones share the key but advance independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

/// Creates the stream identified by `(seed, stream_id)`.
///
/// Identical arguments yield an identical sequence on every platform.
/// Distinct `stream_id`s map to statistically independent streams.
pub fn rng_stream(seed: u64, stream_id: u64) -> RngStream {
    let key = mix(mix(seed.wrapping_add(GOLDEN)) ^ mix(stream_id ^ 0x8CB9_2BA7_2F3D_8DD7));
    RngStream { key, counter: 0 }
}

impl RngStream {
    /// Next raw 64-bit draw; advances the counter by one.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = mix(self.key ^ mix(self.counter.wrapping_mul(GOLDEN).wrapping_add(GOLDEN)));
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform draw on the open interval (0, 1).
    ///
    /// Uses 52 bits plus a half-step offset so the result is never exactly
    /// 0 or 1; quantile transforms stay finite on every draw.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
    }

    /// A copy of this stream positioned at an absolute counter value.
    ///
    /// This is the fan-out primitive: sample `j` of a d-dimensional Monte
    /// Carlo run reads counters `j*d .. (j+1)*d` regardless of which worker
    /// executes it.
    #[inline]
    pub fn at_offset(&self, counter: u64) -> RngStream {
        RngStream {
            key: self.key,
            counter,
        }
    }

    /// Derives an independent stream keyed off this one.
    ///
    /// Distinct tags give statistically independent streams; the derivation
    /// does not disturb `self`.
    pub fn substream(&self, tag: u64) -> RngStream {
        RngStream {
            key: mix(self.key ^ mix(tag.wrapping_mul(GOLDEN) ^ 0xA5A5_A5A5_A5A5_A5A5)),
            counter: 0,
        }
    }

    /// Current counter position.
    pub fn position(&self) -> u64 {
        self.counter
    }
}
