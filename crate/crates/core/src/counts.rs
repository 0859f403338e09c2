//! Sequence statistics: cyclic count matrices, the entropy functional,
//! empirical conditional entropy, and stationarity checks.
//!
//! The `(k+1)`-order count matrix of a sequence holds the frequency of each
//! (context, symbol) pair, where the context is the `k` symbols preceding a
//! position and indexing wraps cyclically. Contexts are encoded as base-`A`
//! integers with the most recent symbol in the least significant digit, so a
//! whole `(k+1)`-window maps to `context * A + symbol` and the trellis
//! transition is a shift-and-mask.

use crate::error::{Error, Result};

/// Largest table we are willing to allocate for block-indexed data.
pub(crate) const MAX_TABLE: usize = 1 << 28;

/// A finite symbol alphabet `{0, 1, ..., size-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if !(2..=256).contains(&size) {
            return Err(Error::BadAlphabet(size));
        }
        Ok(Alphabet { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// log2 of the alphabet size, the entropy ceiling in bits per symbol.
    pub fn log2_size(&self) -> f64 {
        (self.size as f64).log2()
    }
}

/// `alphabet^exponent` with overflow and table-size guards.
pub(crate) fn checked_pow(base: usize, exponent: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..exponent {
        acc = acc
            .checked_mul(base)
            .filter(|&v| v <= MAX_TABLE)
            .ok_or_else(|| {
                Error::BudgetExceeded(format!(
                    "table of {base}^{exponent} entries exceeds {MAX_TABLE}"
                ))
            })?;
    }
    Ok(acc)
}

/// A symbol sequence over a fixed alphabet. Symbols are stored as bytes,
/// which caps alphabets at 256 symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    symbols: Vec<u8>,
    alphabet: Alphabet,
}

impl Sequence {
    pub fn new(symbols: Vec<u8>, alphabet: Alphabet) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(&bad) = symbols.iter().find(|&&s| (s as usize) >= alphabet.size()) {
            return Err(Error::SymbolOutOfRange {
                symbol: bad as usize,
                alphabet: alphabet.size(),
            });
        }
        Ok(Sequence { symbols, alphabet })
    }

    /// Parse a string of ASCII digits, one symbol per digit.
    pub fn from_digits(text: &str, alphabet_size: usize) -> Result<Self> {
        let alphabet = Alphabet::new(alphabet_size)?;
        let mut symbols = Vec::with_capacity(text.len());
        for ch in text.chars() {
            if ch.is_whitespace() {
                continue;
            }
            let digit = ch
                .to_digit(10)
                .ok_or_else(|| Error::Parse(format!("non-digit character {ch:?}")))?;
            symbols.push(digit as u8);
        }
        Sequence::new(symbols, alphabet)
    }

    pub fn to_digits(&self) -> String {
        self.symbols.iter().map(|&s| (b'0' + s) as char).collect()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn get(&self, i: usize) -> u8 {
        self.symbols[i]
    }
}

/// Counts of every cyclic window of length `len`, indexed by the window's
/// base-`A` encoding (most recent symbol least significant). Window lengths
/// may exceed the sequence length; indexing wraps as many times as needed.
pub(crate) fn cyclic_window_counts(
    symbols: &[u8],
    alphabet_size: usize,
    len: usize,
) -> Result<Vec<u64>> {
    debug_assert!(len >= 1);
    let size = checked_pow(alphabet_size, len)?;
    let n = symbols.len() as isize;
    // Window ending at position n-1; rolled forward one symbol per step.
    let mut blk = 0usize;
    for t in 0..len {
        let p = (n - len as isize + t as isize).rem_euclid(n) as usize;
        blk = blk * alphabet_size + symbols[p] as usize;
    }
    let mut counts = vec![0u64; size];
    for &s in symbols {
        blk = (blk * alphabet_size) % size + s as usize;
        counts[blk] += 1;
    }
    Ok(counts)
}

/// Empirical conditional entropy in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyValue {
    pub bits: f64,
}

/// Entropy in bits of the pmf proportional to `v`. The zero vector maps to
/// zero, as do individual zero components.
pub fn entropy_functional(v: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &x in v {
        if x < 0.0 {
            return Err(Error::NegativeComponent { value: x });
        }
        sum += x;
    }
    if sum == 0.0 {
        return Ok(0.0);
    }
    let mut bits = 0.0;
    for &x in v {
        if x > 0.0 {
            bits += (x / sum) * (sum / x).log2();
        }
    }
    Ok(bits.max(0.0))
}

/// `(k+1)`-order count matrix `m[symbol, context]` of a sequence, stored as a
/// flat table indexed by the `(k+1)`-window integer `context * A + symbol`.
///
/// `total` records the normalization: 1 for frequencies, `n` for raw counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    order: usize,
    alphabet: Alphabet,
    entries: Vec<f64>,
    total: f64,
}

impl CountMatrix {
    /// Build the normalized count matrix of `y` with context order `k`,
    /// using the cyclic convention for the first `k` positions. Counts are
    /// accumulated as integers and divided once at the end, so the
    /// stationarity identity holds to rounding error.
    pub fn from_sequence(y: &Sequence, k: usize) -> Result<Self> {
        let raw = cyclic_window_counts(y.symbols(), y.alphabet().size(), k + 1)?;
        let n = y.len() as f64;
        let entries = raw.iter().map(|&c| c as f64 / n).collect();
        Ok(CountMatrix {
            order: k,
            alphabet: y.alphabet(),
            entries,
            total: 1.0,
        })
    }

    /// Raw integer-count variant; entries sum to `n`.
    pub fn raw_from_sequence(y: &Sequence, k: usize) -> Result<Self> {
        let raw = cyclic_window_counts(y.symbols(), y.alphabet().size(), k + 1)?;
        Ok(CountMatrix {
            order: k,
            alphabet: y.alphabet(),
            entries: raw.iter().map(|&c| c as f64).collect(),
            total: y.len() as f64,
        })
    }

    pub fn from_entries(
        order: usize,
        alphabet: Alphabet,
        entries: Vec<f64>,
        total: f64,
    ) -> Result<Self> {
        let expected = checked_pow(alphabet.size(), order + 1)?;
        if entries.len() != expected {
            return Err(Error::LengthMismatch {
                left: entries.len(),
                right: expected,
            });
        }
        if let Some(&bad) = entries.iter().find(|&&v| v < 0.0) {
            return Err(Error::NegativeComponent { value: bad });
        }
        Ok(CountMatrix {
            order,
            alphabet,
            entries,
            total,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn num_contexts(&self) -> usize {
        self.entries.len() / self.alphabet.size()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_normalized(&self) -> bool {
        (self.total - 1.0).abs() < 1e-12
    }

    pub fn entry(&self, symbol: usize, context: usize) -> f64 {
        self.entries[context * self.alphabet.size() + symbol]
    }

    /// The column `m[., context]`, contiguous in storage.
    pub fn column(&self, context: usize) -> &[f64] {
        let a = self.alphabet.size();
        &self.entries[context * a..(context + 1) * a]
    }

    pub fn normalized(&self) -> CountMatrix {
        let mut m = self.clone();
        if m.total != 1.0 {
            for v in &mut m.entries {
                *v /= self.total;
            }
            m.total = 1.0;
        }
        m
    }

    fn check_total(&self) -> Result<()> {
        let sum: f64 = self.entries.iter().sum();
        let scale = self.total.abs().max(1.0);
        if (sum - self.total).abs() > 1e-9 * scale {
            return Err(Error::BadNormalization {
                sum,
                expected: self.total,
            });
        }
        Ok(())
    }

    /// Empirical conditional entropy `H_k(m)` in bits: the column-entropy
    /// average `sum_b H(m[., b]) * mass(b)`. Scale-invariant, so raw and
    /// normalized matrices agree.
    pub fn conditional_entropy(&self) -> Result<EntropyValue> {
        self.check_total()?;
        let a = self.alphabet.size();
        let mut acc = 0.0;
        let mut mass = 0.0;
        for ctx in 0..self.num_contexts() {
            let col = &self.entries[ctx * a..(ctx + 1) * a];
            let s: f64 = col.iter().sum();
            if s > 0.0 {
                acc += s * entropy_functional(col)?;
                mass += s;
            }
        }
        let bits = if mass > 0.0 {
            (acc / mass).max(0.0)
        } else {
            0.0
        };
        Ok(EntropyValue { bits })
    }

    /// True iff for every k-block the mass of windows starting with it equals
    /// the mass of windows ending with it, within `tol`. Cyclic count
    /// matrices satisfy this exactly.
    pub fn check_stationarity(&self, tol: f64) -> bool {
        self.stationarity_defect() <= tol
    }

    /// Max absolute difference between the two k-block marginals.
    pub fn stationarity_defect(&self) -> f64 {
        let a = self.alphabet.size();
        let contexts = self.num_contexts();
        let mut worst = 0.0f64;
        for c in 0..contexts {
            let first: f64 = self.entries[c * a..(c + 1) * a].iter().sum();
            let mut last = 0.0;
            for beta in 0..a {
                last += self.entries[beta * contexts + c];
            }
            worst = worst.max((first - last).abs());
        }
        worst
    }

    /// Drop the most recent symbol: the k-block marginal as an order `k-1`
    /// count matrix.
    pub fn marginalized(&self) -> Result<CountMatrix> {
        if self.order == 0 {
            return Err(Error::Config(
                "cannot marginalize an order-0 count matrix".into(),
            ));
        }
        let a = self.alphabet.size();
        let entries = (0..self.num_contexts())
            .map(|c| self.entries[c * a..(c + 1) * a].iter().sum())
            .collect();
        CountMatrix::from_entries(self.order - 1, self.alphabet, entries, self.total)
    }
}

/// Empirical distribution of cyclic `order`-blocks of a sequence, indexed by
/// block integer. This is the source-side statistic fed to the coefficient
/// program.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDistribution {
    order: usize,
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl BlockDistribution {
    pub fn from_sequence(x: &Sequence, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("block order must be at least 1".into()));
        }
        let raw = cyclic_window_counts(x.symbols(), x.alphabet().size(), order)?;
        let n = x.len() as f64;
        Ok(BlockDistribution {
            order,
            alphabet: x.alphabet(),
            probs: raw.iter().map(|&c| c as f64 / n).collect(),
        })
    }

    pub fn from_probs(order: usize, alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("block order must be at least 1".into()));
        }
        let expected = checked_pow(alphabet.size(), order)?;
        if probs.len() != expected {
            return Err(Error::LengthMismatch {
                left: probs.len(),
                right: expected,
            });
        }
        if let Some(&bad) = probs.iter().find(|&&v| v < 0.0) {
            return Err(Error::NegativeComponent { value: bad });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadNormalization { sum, expected: 1.0 });
        }
        Ok(BlockDistribution {
            order,
            alphabet,
            probs,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Stationarity defect of the block distribution: max gap between the
    /// leading and trailing `(order-1)`-block marginals.
    pub fn stationarity_defect(&self) -> f64 {
        if self.order == 1 {
            return 0.0;
        }
        let a = self.alphabet.size();
        let sub = self.probs.len() / a;
        let mut worst = 0.0f64;
        for c in 0..sub {
            let first: f64 = self.probs[c * a..(c + 1) * a].iter().sum();
            let mut last = 0.0;
            for beta in 0..a {
                last += self.probs[beta * sub + c];
            }
            worst = worst.max((first - last).abs());
        }
        worst
    }
}
