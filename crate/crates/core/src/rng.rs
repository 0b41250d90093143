//! Reproducible per-family random streams.
//!
//! Every family owns a stream keyed by `(master_seed, stream_id)`. The
//! stream is a ChaCha8 keystream whose 64-bit stream selector is the family
//! index, so a family's steps depend only on its key and never on how the
//! batch is scheduled. Step `j` of a family is bit `j % 64` of word `j / 64`
//! (least significant bit first); a set bit is a boy.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Key of one family's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

const AUX_TAG: u64 = 0x5851_f42d_4c95_7f2d;

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// Source of ±1 steps for the walk engine.
    pub fn steps(&self) -> StreamSteps {
        StreamSteps { rng: self.keystream(self.master_seed) }
    }

    /// Generator for distributional samplers, disjoint from the step stream.
    pub fn aux(&self) -> ChaCha8Rng {
        self.keystream(splitmix64(self.master_seed ^ AUX_TAG))
    }

    /// First `n` steps as ±1 values.
    pub fn first_steps(&self, n: usize) -> Vec<i8> {
        let mut src = self.steps();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let word = src.next_word();
            for bit in 0..64 {
                if out.len() == n {
                    break;
                }
                out.push(if word >> bit & 1 == 1 { 1 } else { -1 });
            }
        }
        out
    }

    fn keystream(&self, seed: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Anything that yields steps 64 at a time.
pub trait StepSource {
    fn next_word(&mut self) -> u64;
}

pub struct StreamSteps {
    rng: ChaCha8Rng,
}

impl StepSource for StreamSteps {
    #[inline]
    fn next_word(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// Packs a ±1 sequence into words.
fn pack(steps: &[i8], offset: usize, cycle: bool) -> u64 {
    let mut word = 0u64;
    for bit in 0..64 {
        let idx = offset + bit;
        let step = if cycle {
            steps[idx % steps.len()]
        } else {
            // Past the end of a finite script every child is a girl.
            steps.get(idx).copied().unwrap_or(-1)
        };
        if step > 0 {
            word |= 1 << bit;
        }
    }
    word
}

/// Repeats a fixed pattern of steps forever.
#[derive(Debug, Clone)]
pub struct CycleSteps {
    steps: Vec<i8>,
    pos: usize,
}

impl CycleSteps {
    pub fn new(steps: &[i8]) -> Self {
        assert!(!steps.is_empty(), "empty step pattern");
        Self { steps: steps.to_vec(), pos: 0 }
    }
}

impl StepSource for CycleSteps {
    fn next_word(&mut self) -> u64 {
        let word = pack(&self.steps, self.pos, true);
        self.pos = (self.pos + 64) % self.steps.len();
        word
    }
}

/// Plays a finite sequence once, then girls.
#[derive(Debug, Clone)]
pub struct SliceSteps {
    steps: Vec<i8>,
    pos: usize,
}

impl SliceSteps {
    pub fn new(steps: Vec<i8>) -> Self {
        Self { steps, pos: 0 }
    }
}

impl StepSource for SliceSteps {
    fn next_word(&mut self) -> u64 {
        let word = pack(&self.steps, self.pos, false);
        self.pos += 64;
        word
    }
}

/// Buffers a [`StepSource`] so that callers consume an exact number of steps.
pub struct StepReader<S> {
    src: S,
    buf: u64,
    avail: u32,
    consumed: u64,
}

impl<S: StepSource> StepReader<S> {
    pub fn new(src: S) -> Self {
        Self { src, buf: 0, avail: 0, consumed: 0 }
    }

    /// Buffered steps (low bits first) and how many are valid; never empty.
    #[inline]
    pub fn peek(&mut self) -> (u64, u32) {
        if self.avail == 0 {
            self.buf = self.src.next_word();
            self.avail = 64;
        }
        (self.buf, self.avail)
    }

    #[inline]
    pub fn consume(&mut self, n: u32) {
        debug_assert!(n <= self.avail);
        self.buf = if n >= 64 { 0 } else { self.buf >> n };
        self.avail -= n;
        self.consumed += n as u64;
    }

    /// Total steps consumed so far.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_steps() {
        let a = RngStream::new(7, 3).first_steps(500);
        let b = RngStream::new(7, 3).first_steps(500);
        assert_eq!(a, b);
        assert_ne!(a, RngStream::new(7, 4).first_steps(500));
        assert_ne!(a, RngStream::new(8, 3).first_steps(500));
    }

    #[test]
    fn streams_look_balanced_and_uncorrelated() {
        let n = 1 << 16;
        let a = RngStream::new(1, 0).first_steps(n);
        let b = RngStream::new(1, 1).first_steps(n);
        let mean: f64 = a.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
        let cross: f64 = a.iter().zip(&b).map(|(&u, &v)| (u * v) as f64).sum::<f64>() / n as f64;
        let se = 1.0 / (n as f64).sqrt();
        assert!(mean.abs() < 5.0 * se, "mean {mean}");
        assert!(cross.abs() < 5.0 * se, "cross {cross}");
    }

    #[test]
    fn reader_consumes_exactly() {
        let steps: Vec<i8> = (0..200).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let mut reader = StepReader::new(SliceSteps::new(steps.clone()));
        let mut seen = Vec::new();
        for take in [5u32, 59, 1, 63, 40, 32] {
            let mut left = take;
            while left > 0 {
                let (bits, avail) = reader.peek();
                let n = left.min(avail);
                for i in 0..n {
                    seen.push(if bits >> i & 1 == 1 { 1 } else { -1 });
                }
                reader.consume(n);
                left -= n;
            }
        }
        assert_eq!(reader.consumed(), 200);
        assert_eq!(seen, steps);
    }

    #[test]
    fn cycle_pattern_wraps() {
        let mut src = CycleSteps::new(&[1, -1, -1]);
        let w = src.next_word();
        assert_eq!(w & 0b111, 0b001);
        assert_eq!(w >> 3 & 0b111, 0b001);
        let w2 = src.next_word();
        // 64 = 3 * 21 + 1, so the second word starts one step into the pattern.
        assert_eq!(w2 & 0b111, 0b100);
    }
}
