//! Byte-oriented 32-bit range coder with carry handling.
//!
//! The encoder keeps a 33-bit `low` so a pending carry is visible in bit 32,
//! and defers output through a cache byte plus a run of 0xFF bytes until the
//! carry resolves. The decoder mirrors renormalization byte for byte, so the
//! pair is bit-exact by construction. Cumulative frequency totals must stay
//! below 2^24 so `range / total` never hits zero.

use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;

/// Largest legal frequency total.
pub const MAX_TOTAL: u32 = TOP;

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    /// Narrow the interval to the symbol spanning `[start, start + freq)` of
    /// `total`.
    pub fn encode(&mut self, start: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0 && start + freq <= total && total <= MAX_TOTAL);
        let r = self.range / total;
        self.low += start as u64 * r as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (((self.low as u32) << 8) as u64) & 0xFFFF_FFFF;
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

impl Default for RangeEncoder {
    fn default() -> Self {
        RangeEncoder::new()
    }
}

pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self> {
        let mut d = RangeDecoder {
            code: 0,
            range: u32::MAX,
            input,
            pos: 0,
        };
        // The first byte is the encoder's initial zero cache.
        for _ in 0..5 {
            let b = d.next_byte()?;
            d.code = (d.code << 8) | b as u32;
        }
        Ok(d)
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = self.input.get(self.pos).copied().ok_or(Error::Decode {
            position: self.pos,
            reason: "payload truncated".into(),
        })?;
        self.pos += 1;
        Ok(b)
    }

    /// Cumulative frequency of the pending symbol; compare against the
    /// model's partition to identify it.
    pub fn peek_freq(&self, total: u32) -> u32 {
        let r = self.range / total;
        (self.code / r).min(total - 1)
    }

    /// Consume the symbol spanning `[start, start + freq)`.
    pub fn decode(&mut self, start: u32, freq: u32, total: u32) -> Result<()> {
        let r = self.range / total;
        self.code = self.code.wrapping_sub(start * r);
        self.range = r * freq;
        while self.range < TOP {
            let b = self.next_byte()?;
            self.code = (self.code << 8) | b as u32;
            self.range <<= 8;
        }
        Ok(())
    }

    pub fn position(&self) -> usize {
        self.pos
    }
}

/// Per-context adaptive frequencies with add-one initialization. Counts are
/// halved (floored at one) when a context's total reaches the rescale
/// threshold; encoder and decoder apply the identical schedule.
pub struct AdaptiveModel {
    alphabet: usize,
    counts: Vec<u32>,
    totals: Vec<u32>,
}

const RESCALE_AT: u32 = 1 << 16;

impl AdaptiveModel {
    pub fn new(alphabet: usize, contexts: usize) -> Self {
        AdaptiveModel {
            alphabet,
            counts: vec![1; alphabet * contexts],
            totals: vec![alphabet as u32; contexts],
        }
    }

    /// `(start, freq, total)` of `sym` in `ctx`.
    pub fn lookup(&self, ctx: usize, sym: usize) -> (u32, u32, u32) {
        let row = &self.counts[ctx * self.alphabet..(ctx + 1) * self.alphabet];
        let start: u32 = row[..sym].iter().sum();
        (start, row[sym], self.totals[ctx])
    }

    /// Identify the symbol whose span contains the cumulative value `cum`.
    pub fn locate(&self, ctx: usize, cum: u32) -> (usize, u32, u32, u32) {
        let row = &self.counts[ctx * self.alphabet..(ctx + 1) * self.alphabet];
        let mut start = 0u32;
        for (sym, &freq) in row.iter().enumerate() {
            if cum < start + freq {
                return (sym, start, freq, self.totals[ctx]);
            }
            start += freq;
        }
        unreachable!("cumulative value outside total");
    }

    pub fn total(&self, ctx: usize) -> u32 {
        self.totals[ctx]
    }

    pub fn update(&mut self, ctx: usize, sym: usize) {
        let row = &mut self.counts[ctx * self.alphabet..(ctx + 1) * self.alphabet];
        row[sym] += 1;
        self.totals[ctx] += 1;
        if self.totals[ctx] >= RESCALE_AT {
            let mut total = 0;
            for c in row.iter_mut() {
                *c = (*c + 1) >> 1;
                total += *c;
            }
            self.totals[ctx] = total;
        }
    }
}
