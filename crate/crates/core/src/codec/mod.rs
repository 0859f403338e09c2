//! Decodable lossless back end and codelength accounting.
//!
//! Two faces: an adaptive order-`k` context coder over the range coder in
//! [`range`] that produces real, self-describing bitstreams, and the LZ78
//! accounting in [`lz78`] used as a codelength oracle. Either rate sits
//! within a vanishing gap of the empirical conditional entropy; the scan in
//! [`ziv_gap_scan`] measures that gap as the block length grows.
//!
//! # Bitstream layout
//!
//! ```text
//! magic "MLZC" | version u8 | n varint(LEB128) | k u8 | alphabet u8 | coder u8 | payload
//! ```
//!
//! The alphabet byte stores `A & 0xFF` (0 means 256). Coder 1 is the
//! adaptive context range coder; the first `k` symbols are coded under a
//! dedicated order-0 fallback context.

pub mod lz78;
pub mod range;

pub use lz78::{lz78_codelength, lz78_parse, CodelengthReport, Lz78Parse};

use crate::counts::{checked_pow, Alphabet, Sequence};
use crate::error::{Error, Result};
use crate::markov::MarkovSource;
use range::{AdaptiveModel, RangeDecoder, RangeEncoder};

pub const MAGIC: [u8; 4] = *b"MLZC";
pub const VERSION: u8 = 1;
pub const CODER_CONTEXT_RANGE: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub n: u64,
    pub order: u8,
    pub alphabet_size: usize,
    pub coder_id: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstream {
    pub header: Header,
    pub payload: Vec<u8>,
}

impl Bitstream {
    pub fn payload_bits(&self) -> f64 {
        self.payload.len() as f64 * 8.0
    }

    pub fn total_bits(&self) -> f64 {
        (self.header_len() + self.payload.len()) as f64 * 8.0
    }

    fn header_len(&self) -> usize {
        4 + 1 + varint_len(self.header.n) + 3
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header_len() + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        write_varint(&mut out, self.header.n);
        out.push(self.header.order);
        out.push((self.header.alphabet_size & 0xFF) as u8);
        out.push(self.header.coder_id);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |position: usize, reason: &str| Error::Decode {
            position,
            reason: reason.into(),
        };
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(fail(0, "bad magic"));
        }
        if bytes[4] != VERSION {
            return Err(fail(4, "unsupported version"));
        }
        let (n, mut pos) = read_varint(bytes, 5)?;
        if pos + 3 > bytes.len() {
            return Err(fail(pos, "header truncated"));
        }
        let order = bytes[pos];
        let alphabet_size = match bytes[pos + 1] {
            0 => 256,
            v => v as usize,
        };
        let coder_id = bytes[pos + 2];
        if coder_id != CODER_CONTEXT_RANGE {
            return Err(fail(pos + 2, "unknown coder id"));
        }
        pos += 3;
        Ok(Bitstream {
            header: Header {
                n,
                order,
                alphabet_size,
                coder_id,
            },
            payload: bytes[pos..].to_vec(),
        })
    }
}

fn varint_len(mut v: u64) -> usize {
    let mut len = 1;
    while v >= 0x80 {
        v >>= 7;
        len += 1;
    }
    len
}

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8 & 0x7F) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn read_varint(bytes: &[u8], mut pos: usize) -> Result<(u64, usize)> {
    let mut v = 0u64;
    let mut shift = 0;
    loop {
        let b = *bytes.get(pos).ok_or(Error::Decode {
            position: pos,
            reason: "varint truncated".into(),
        })?;
        if shift >= 63 && b > 1 {
            return Err(Error::Decode {
                position: pos,
                reason: "varint overflow".into(),
            });
        }
        v |= ((b & 0x7F) as u64) << shift;
        pos += 1;
        if b < 0x80 {
            return Ok((v, pos));
        }
        shift += 7;
    }
}

/// Compress `y` with the adaptive order-`k` context coder.
pub fn entropy_encode(y: &Sequence, k: usize) -> Result<Bitstream> {
    if k > 255 {
        return Err(Error::Config(format!("context order {k} exceeds 255")));
    }
    let a = y.alphabet().size();
    let contexts = checked_pow(a, k)?;
    let mut model = AdaptiveModel::new(a, contexts + 1);
    let fallback = contexts;
    let mut enc = RangeEncoder::new();
    let mut ctx = 0usize;
    for (i, &sym) in y.symbols().iter().enumerate() {
        let slot = if i < k { fallback } else { ctx };
        let (start, freq, total) = model.lookup(slot, sym as usize);
        enc.encode(start, freq, total);
        model.update(slot, sym as usize);
        ctx = (ctx * a + sym as usize) % contexts;
    }
    Ok(Bitstream {
        header: Header {
            n: y.len() as u64,
            order: k as u8,
            alphabet_size: a,
            coder_id: CODER_CONTEXT_RANGE,
        },
        payload: enc.finish(),
    })
}

/// Exact inverse of [`entropy_encode`].
pub fn entropy_decode(b: &Bitstream) -> Result<Sequence> {
    let a = b.header.alphabet_size;
    let alphabet = Alphabet::new(a)?;
    let k = b.header.order as usize;
    let n = usize::try_from(b.header.n).map_err(|_| Error::Decode {
        position: 0,
        reason: "length field too large".into(),
    })?;
    if n == 0 {
        return Err(Error::Decode {
            position: 0,
            reason: "zero-length stream".into(),
        });
    }
    let contexts = checked_pow(a, k)?;
    let mut model = AdaptiveModel::new(a, contexts + 1);
    let fallback = contexts;
    let mut dec = RangeDecoder::new(&b.payload)?;
    let mut ctx = 0usize;
    let mut symbols = Vec::with_capacity(n);
    for i in 0..n {
        let slot = if i < k { fallback } else { ctx };
        let cum = dec.peek_freq(model.total(slot));
        let (sym, start, freq, total) = model.locate(slot, cum);
        dec.decode(start, freq, total)?;
        model.update(slot, sym);
        symbols.push(sym as u8);
        ctx = (ctx * a + sym) % contexts;
    }
    Sequence::new(symbols, alphabet)
}

/// `floor(log2(log2 n))`, the default growth schedule for the context order.
pub fn default_order_schedule(n: usize) -> usize {
    if n < 4 {
        return 0;
    }
    (n as f64).log2().log2().floor() as usize
}

#[derive(Debug, Clone)]
pub struct ZivScanConfig {
    pub ns: Vec<usize>,
    /// Flip probability of the Markov family member.
    pub q: f64,
    pub seed: u64,
}

impl Default for ZivScanConfig {
    fn default() -> Self {
        ZivScanConfig {
            ns: vec![1 << 10, 1 << 12, 1 << 14, 1 << 16, 1 << 18],
            q: 0.2,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZivScanRow {
    pub n: usize,
    pub k: usize,
    pub family: &'static str,
    pub lz_bits_per_symbol: f64,
    pub entropy_bits: f64,
    pub excess: f64,
}

/// For each block length, the LZ78 rate minus `H_k` over a family of test
/// sequences: constant, i.i.d. uniform, Markov, and short-period periodic.
pub fn ziv_gap_scan<F: Fn(usize) -> usize>(
    k_of_n: F,
    cfg: &ZivScanConfig,
) -> Result<Vec<ZivScanRow>> {
    const PATTERN: [u8; 5] = [0, 1, 1, 0, 1];
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let k = k_of_n(n);
        let mut push = |family: &'static str, y: &Sequence| -> Result<()> {
            let report = lz78_codelength(y, k)?;
            rows.push(ZivScanRow {
                n,
                k,
                family,
                lz_bits_per_symbol: report.bits_per_symbol,
                entropy_bits: report.entropy_bits,
                excess: report.excess,
            });
            Ok(())
        };
        let alphabet = Alphabet::new(2)?;
        push("constant", &Sequence::new(vec![0; n], alphabet)?)?;
        let iid = MarkovSource::binary_symmetric(0.5, cfg.seed)?.generate_stream(n, n as u64)?;
        push("iid_uniform", &iid)?;
        let markov =
            MarkovSource::binary_symmetric(cfg.q, cfg.seed)?.generate_stream(n, (n as u64) << 1)?;
        push("markov", &markov)?;
        let periodic: Vec<u8> = (0..n).map(|i| PATTERN[i % PATTERN.len()]).collect();
        push("periodic", &Sequence::new(periodic, alphabet)?)?;
    }
    Ok(rows)
}

/// Largest excess per block length, in scan order.
pub fn max_excess_by_n(rows: &[ZivScanRow]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for row in rows {
        match out.iter_mut().find(|(n, _)| *n == row.n) {
            Some((_, m)) => *m = m.max(row.excess),
            None => out.push((row.n, row.excess)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sequence(rng: &mut ChaCha8Rng, n: usize, a: usize) -> Sequence {
        let symbols: Vec<u8> = (0..n).map(|_| rng.gen_range(0..a as u8)).collect();
        Sequence::new(symbols, Alphabet::new(a).unwrap()).unwrap()
    }

    #[test]
    fn round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        for _ in 0..300 {
            let a = *[2usize, 3, 4].choose(&mut rng).unwrap();
            let n = rng.gen_range(1..800);
            let k = rng.gen_range(0..4);
            let y = random_sequence(&mut rng, n, a);
            let stream = entropy_encode(&y, k).unwrap();
            let back = entropy_decode(&stream).unwrap();
            assert_eq!(back, y);
        }
    }

    #[test]
    fn round_trip_through_bytes() {
        let mut rng = ChaCha8Rng::seed_from_u64(127);
        for _ in 0..50 {
            let n = rng.gen_range(1..300);
            let y = random_sequence(&mut rng, n, 3);
            let stream = entropy_encode(&y, 2).unwrap();
            let bytes = stream.to_bytes();
            let parsed = Bitstream::from_bytes(&bytes).unwrap();
            assert_eq!(parsed, stream);
            assert_eq!(entropy_decode(&parsed).unwrap(), y);
        }
    }

    #[test]
    fn constant_sequence_compresses_hard() {
        let y = Sequence::new(vec![1; 1000], Alphabet::new(2).unwrap()).unwrap();
        let stream = entropy_encode(&y, 2).unwrap();
        let report = CodelengthReport::new(stream.payload_bits(), &y, 2).unwrap();
        assert!(report.bits_per_symbol <= 0.2, "{}", report.bits_per_symbol);
    }

    #[test]
    fn iid_uniform_rate_near_one_bit() {
        let y = MarkovSource::binary_symmetric(0.5, 12345)
            .unwrap()
            .generate(10_000)
            .unwrap();
        let stream = entropy_encode(&y, 0).unwrap();
        let bps = stream.payload_bits() / 10_000.0;
        assert!((1.0..1.01).contains(&bps), "bits per symbol {bps}");
    }

    #[test]
    fn real_bitstream_never_undercuts_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        for _ in 0..50 {
            let a = *[2usize, 4].choose(&mut rng).unwrap();
            let n = rng.gen_range(100..3000);
            let k = rng.gen_range(0..3);
            let y = random_sequence(&mut rng, n, a);
            let stream = entropy_encode(&y, k).unwrap();
            let report = CodelengthReport::new(stream.payload_bits(), &y, k).unwrap();
            assert!(report.excess >= 0.0, "excess {}", report.excess);
        }
    }

    #[test]
    fn two_part_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(137);
        for _ in 0..40 {
            let a = *[2usize, 3, 4].choose(&mut rng).unwrap();
            let n = rng.gen_range(1..5000);
            let k = rng.gen_range(0..3);
            let y = random_sequence(&mut rng, n, a);
            let stream = entropy_encode(&y, k).unwrap();
            let h = crate::counts::CountMatrix::from_sequence(&y, k)
                .unwrap()
                .conditional_entropy()
                .unwrap()
                .bits;
            let bound =
                n as f64 * h + (a as f64).powi(k as i32 + 1) * ((n + 1) as f64).log2() + 64.0;
            assert!(
                stream.payload_bits() <= bound,
                "n={n} a={a} k={k}: {} > {bound}",
                stream.payload_bits()
            );
        }
    }

    #[test]
    fn corrupt_streams_are_rejected() {
        let y = Sequence::new(vec![0, 1, 0, 1, 1], Alphabet::new(2).unwrap()).unwrap();
        let mut bytes = entropy_encode(&y, 1).unwrap().to_bytes();
        // Bad magic.
        let mut broken = bytes.clone();
        broken[0] = b'X';
        assert!(matches!(
            Bitstream::from_bytes(&broken),
            Err(Error::Decode { position: 0, .. })
        ));
        // Unknown coder.
        let mut broken = bytes.clone();
        broken[8] = 9;
        assert!(Bitstream::from_bytes(&broken).is_err());
        // Truncated payload.
        bytes.truncate(bytes.len() - 3);
        let stream = Bitstream::from_bytes(&bytes).unwrap();
        assert!(entropy_decode(&stream).is_err());
    }

    #[test]
    fn varint_round_trip() {
        for v in [0u64, 1, 127, 128, 300, 1 << 20, u64::MAX] {
            let mut buf = Vec::new();
            write_varint(&mut buf, v);
            let (got, used) = read_varint(&buf, 0).unwrap();
            assert_eq!(got, v);
            assert_eq!(used, buf.len());
        }
    }

    #[test]
    fn order_schedule_values() {
        assert_eq!(default_order_schedule(1 << 10), 3);
        assert_eq!(default_order_schedule(1 << 14), 3);
        assert_eq!(default_order_schedule(1 << 16), 4);
        assert_eq!(default_order_schedule(1 << 18), 4);
    }

    #[test]
    fn ziv_scan_smoke() {
        let cfg = ZivScanConfig {
            ns: vec![1 << 8, 1 << 10],
            q: 0.2,
            seed: 7,
        };
        let rows = ziv_gap_scan(default_order_schedule, &cfg).unwrap();
        assert_eq!(rows.len(), 8);
        // Excess stays under the per-phrase pointer+symbol bound.
        for row in &rows {
            assert!(row.excess <= 3.0, "{row:?}");
        }
        let maxes = max_excess_by_n(&rows);
        assert_eq!(maxes.len(), 2);
    }
}
