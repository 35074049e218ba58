//! Bit streams for witness selection and exactly-uniform sampling from them.
//!
//! Every source is a byte stream expanded most-significant bit first. The
//! seeded source is SplitMix64, emitting each 64-bit word big-endian so the
//! bit stream is portable across implementations. OS and remote sources are
//! supplied by the caller through [`ByteStream`].

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::arith::Natural;
use crate::error::{Error, Result};

/// Where a stream of bits comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Provenance {
    Seeded { seed: u64 },
    OsEntropy,
    RemoteQrng { endpoint: String },
}

impl Provenance {
    pub fn kind(&self) -> &'static str {
        match self {
            Provenance::Seeded { .. } => "seeded",
            Provenance::OsEntropy => "os",
            Provenance::RemoteQrng { .. } => "qrng",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Seeded { seed } => write!(f, "seeded:{seed}"),
            Provenance::OsEntropy => f.write_str("os"),
            Provenance::RemoteQrng { endpoint } => write!(f, "qrng:{endpoint}"),
        }
    }
}

/// Provenance plus how many bits have been handed out so far.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EntropyDescriptor {
    pub provenance: Provenance,
    pub bits_consumed: u64,
}

/// A non-empty run of bits, tagged with the source state it was drawn at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBlock {
    bits: Vec<bool>,
    origin: EntropyDescriptor,
}

impl BitBlock {
    /// Fails on an empty bit vector.
    pub fn new(bits: Vec<bool>, origin: EntropyDescriptor) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::domain("a bit block holds at least one bit"));
        }
        Ok(BitBlock { bits, origin })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Source descriptor as it stood before this block was drawn.
    pub fn origin(&self) -> &EntropyDescriptor {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }
}

impl fmt::Display for BitBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Expands `bytes` into bits, each byte most-significant bit first.
pub fn expand_bytes_msb_first(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|&byte| (0..8).rev().map(move |k| (byte >> k) & 1 == 1))
        .collect()
}

/// A raw byte supplier behind an [`EntropySource`].
pub trait ByteStream: Send {
    /// Fills `dest` completely or fails; there is no partial success.
    fn fill_bytes(&mut self, dest: &mut [u8]) -> Result<()>;

    fn provenance(&self) -> Provenance;
}

/// The SplitMix64 generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// SplitMix64 words serialized big-endian.
#[derive(Debug, Clone)]
pub struct SeededStream {
    seed: u64,
    rng: SplitMix64,
    word: [u8; 8],
    used: usize,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: SplitMix64::new(seed),
            word: [0; 8],
            used: 8,
        }
    }
}

impl ByteStream for SeededStream {
    fn fill_bytes(&mut self, dest: &mut [u8]) -> Result<()> {
        for out in dest {
            if self.used == 8 {
                self.word = self.rng.next_u64().to_be_bytes();
                self.used = 0;
            }
            *out = self.word[self.used];
            self.used += 1;
        }
        Ok(())
    }

    fn provenance(&self) -> Provenance {
        Provenance::Seeded { seed: self.seed }
    }
}

/// A stateful bit stream owned by one consumer at a time.
pub struct EntropySource {
    stream: Box<dyn ByteStream>,
    /// The low `pending_bits` bits of the last fetched byte are still unread.
    pending: u8,
    pending_bits: u32,
    bits_consumed: u64,
}

impl EntropySource {
    pub fn new(stream: Box<dyn ByteStream>) -> Self {
        Self {
            stream,
            pending: 0,
            pending_bits: 0,
            bits_consumed: 0,
        }
    }

    pub fn seeded(seed: u64) -> Self {
        Self::new(Box::new(SeededStream::new(seed)))
    }

    pub fn provenance(&self) -> Provenance {
        self.stream.provenance()
    }

    pub fn bits_consumed(&self) -> u64 {
        self.bits_consumed
    }

    pub fn descriptor(&self) -> EntropyDescriptor {
        EntropyDescriptor {
            provenance: self.provenance(),
            bits_consumed: self.bits_consumed,
        }
    }

    /// Draws exactly `count >= 1` bits.
    pub fn next_bits(&mut self, count: usize) -> Result<BitBlock> {
        if count == 0 {
            return Err(Error::domain("next_bits: count must be at least 1"));
        }
        let origin = self.descriptor();
        let mut bits = Vec::with_capacity(count);
        self.draw_into(count, &mut bits)?;
        Ok(BitBlock { bits, origin })
    }

    fn draw_into(&mut self, count: usize, out: &mut Vec<bool>) -> Result<()> {
        let from_pending = count.min(self.pending_bits as usize);
        let rest = count - from_pending;
        let fresh = if rest > 0 {
            let mut bytes = vec![0u8; rest.div_ceil(8)];
            self.stream.fill_bytes(&mut bytes)?;
            bytes
        } else {
            Vec::new()
        };

        for _ in 0..from_pending {
            self.pending_bits -= 1;
            out.push((self.pending >> self.pending_bits) & 1 == 1);
        }
        if let Some((&last, whole)) = fresh.split_last() {
            out.extend(expand_bytes_msb_first(whole));
            let take = rest - whole.len() * 8;
            for k in 0..take {
                out.push((last >> (7 - k)) & 1 == 1);
            }
            self.pending = last;
            self.pending_bits = (8 - take) as u32;
        }
        self.bits_consumed += count as u64;
        Ok(())
    }
}

impl fmt::Debug for EntropySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntropySource")
            .field("provenance", &self.provenance())
            .field("bits_consumed", &self.bits_consumed)
            .finish()
    }
}

/// Draws `b` uniformly from `[1, n)` by rejection sampling.
///
/// Each attempt reads `bit_length(n - 2)` bits as an integer `v` and accepts
/// the first `v <= n - 2`, returning `v + 1`. For `n = 2` no bits are read.
pub fn sample_uniform(source: &mut EntropySource, n: &Natural) -> Result<Natural> {
    let upper = n
        .checked_sub(&Natural::from(2u32))
        .ok_or_else(|| Error::domain(alloc::format!("sample_uniform: n = {n} must be at least 2")))?;
    if upper.is_zero() {
        return Ok(Natural::one());
    }
    let width = usize::try_from(upper.bit_length())
        .map_err(|_| Error::domain("sample_uniform: n too large for this platform"))?;
    let mut bits = Vec::with_capacity(width);
    loop {
        bits.clear();
        source.draw_into(width, &mut bits)?;
        let v = Natural::from_bits_msb_first(&bits);
        if v <= upper {
            return Ok(&v + 1);
        }
    }
}
