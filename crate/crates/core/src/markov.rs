//! Markov source generation and the analytic reference curve for the binary
//! symmetric source under Hamming distortion.

use crate::counts::{checked_pow, Alphabet, Sequence};
use crate::error::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// A stationary finite-order Markov source with a seeded sampler.
///
/// The kernel maps each order-long context (base-A integer, most recent
/// symbol least significant) to a distribution over the next symbol. The
/// initial block is drawn from the stationary distribution of the context
/// chain, computed at construction.
#[derive(Debug, Clone)]
pub struct MarkovSource {
    order: usize,
    alphabet: Alphabet,
    kernel: Vec<f64>,
    stationary: Vec<f64>,
    seed: u64,
}

impl MarkovSource {
    pub fn new(order: usize, alphabet_size: usize, kernel: Vec<f64>, seed: u64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("source order must be at least 1".into()));
        }
        let alphabet = Alphabet::new(alphabet_size)?;
        let contexts = checked_pow(alphabet_size, order)?;
        if kernel.len() != contexts * alphabet_size {
            return Err(Error::LengthMismatch {
                left: kernel.len(),
                right: contexts * alphabet_size,
            });
        }
        for row in kernel.chunks(alphabet_size) {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < 0.0) {
                return Err(Error::Config(format!("kernel row {row:?} is not a pmf")));
            }
        }
        let stationary = stationary_distribution(&kernel, alphabet_size, contexts)?;
        Ok(MarkovSource {
            order,
            alphabet,
            kernel,
            stationary,
            seed,
        })
    }

    /// First-order binary source flipping with probability `q`.
    pub fn binary_symmetric(q: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Config(format!("flip probability {q} out of range")));
        }
        MarkovSource::new(1, 2, vec![1.0 - q, q, q, 1.0 - q], seed)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Exact stationary probabilities of length-`len` blocks, extended from
    /// the context chain one symbol at a time.
    pub fn block_distribution(&self, len: usize) -> Result<crate::counts::BlockDistribution> {
        if len < self.order {
            return Err(Error::Config(format!(
                "block length {len} below source order {}",
                self.order
            )));
        }
        let a = self.alphabet.size();
        let contexts = self.stationary.len();
        let mut dist = self.stationary.clone();
        for _ in self.order..len {
            let cur_len = dist.len();
            let mut next = vec![0.0f64; cur_len * a];
            for (blk, &mass) in dist.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                let ctx = blk % contexts;
                for sym in 0..a {
                    next[blk * a + sym] = mass * self.kernel[ctx * a + sym];
                }
            }
            dist = next;
        }
        crate::counts::BlockDistribution::from_probs(len, self.alphabet, dist)
    }

    /// Draw a length-`n` sample, reproducible from the source seed.
    pub fn generate(&self, n: usize) -> Result<Sequence> {
        self.generate_stream(n, 0)
    }

    /// Like `generate`, with an RNG stream index so replications stay
    /// decorrelated without touching the base seed.
    pub fn generate_stream(&self, n: usize, stream: u64) -> Result<Sequence> {
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let a = self.alphabet.size();
        let contexts = self.stationary.len();

        let mut ctx = sample_index(&self.stationary, &mut rng);
        let mut symbols = Vec::with_capacity(n);
        // Emit the initial block, oldest digit first.
        let mut digits = Vec::with_capacity(self.order);
        let mut rest = ctx;
        for _ in 0..self.order {
            digits.push((rest % a) as u8);
            rest /= a;
        }
        digits.reverse();
        for &s in digits.iter().take(n) {
            symbols.push(s);
        }
        while symbols.len() < n {
            let row = &self.kernel[ctx * a..(ctx + 1) * a];
            let sym = sample_index(row, &mut rng);
            symbols.push(sym as u8);
            ctx = (ctx * a) % contexts + sym;
        }
        symbols.truncate(n);
        Sequence::new(symbols, self.alphabet)
    }
}

fn sample_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Stationary distribution of the context chain by power iteration from the
/// uniform vector.
fn stationary_distribution(
    kernel: &[f64],
    alphabet_size: usize,
    contexts: usize,
) -> Result<Vec<f64>> {
    let mut pi = vec![1.0 / contexts as f64; contexts];
    let mut next = vec![0.0f64; contexts];
    for _ in 0..20_000 {
        next.fill(0.0);
        for (ctx, &mass) in pi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let row = &kernel[ctx * alphabet_size..(ctx + 1) * alphabet_size];
            for (sym, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    next[(ctx * alphabet_size) % contexts + sym] += mass * p;
                }
            }
        }
        let delta: f64 = pi
            .iter()
            .zip(&next)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if delta < 1e-15 {
            break;
        }
    }
    // Verify the fixed point.
    next.fill(0.0);
    for (ctx, &mass) in pi.iter().enumerate() {
        let row = &kernel[ctx * alphabet_size..(ctx + 1) * alphabet_size];
        for (sym, &p) in row.iter().enumerate() {
            next[(ctx * alphabet_size) % contexts + sym] += mass * p;
        }
    }
    let residual: f64 = pi
        .iter()
        .zip(&next)
        .map(|(&a, &b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > 1e-12 {
        return Err(Error::Internal(format!(
            "stationary distribution did not converge (residual {residual:.3e})"
        )));
    }
    Ok(pi)
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Shannon-lower-bound segment of the rate-distortion function of the binary
/// symmetric Markov source with Hamming distortion: `h(q) - h(D)`, clamped
/// at zero. Exact in the small-distortion regime; past the clamp point it is
/// only a lower bound and callers should flag it as such.
pub fn binary_markov_rd(q: f64, d: f64) -> Result<f64> {
    if !(0.0 < q && q <= 0.5) {
        return Err(Error::Config(format!("q = {q} out of range (0, 1/2]")));
    }
    if !(0.0..=0.5).contains(&d) {
        return Err(Error::Config(format!("D = {d} out of range [0, 1/2]")));
    }
    Ok((binary_entropy(q) - binary_entropy(d)).max(0.0))
}

/// A sampled reference curve. Points past `critical_distortion` report the
/// clamped lower bound only.
#[derive(Debug, Clone)]
pub struct RDCurve {
    pub q: f64,
    pub points: Vec<RDPoint>,
    pub critical_distortion: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RDPoint {
    pub distortion: f64,
    pub rate: f64,
    pub lower_bound_only: bool,
}

impl RDCurve {
    pub fn sample(q: f64, num_points: usize) -> Result<RDCurve> {
        if num_points < 2 {
            return Err(Error::Config("need at least two curve points".into()));
        }
        let critical = q;
        let mut points = Vec::with_capacity(num_points);
        for i in 0..num_points {
            let d = 0.5 * i as f64 / (num_points - 1) as f64;
            points.push(RDPoint {
                distortion: d,
                rate: binary_markov_rd(q, d)?,
                lower_bound_only: d > critical,
            });
        }
        Ok(RDCurve {
            q,
            points,
            critical_distortion: critical,
        })
    }
}

/// Minimize `R(D) + alpha * D` over the lower-bound segment: a grid scan
/// bracketing the optimum, refined by bisection on the sign of the
/// derivative. Returns `(D*, value)`.
pub fn lagrangian_envelope(q: f64, alpha: f64) -> Result<(f64, f64)> {
    if alpha <= 0.0 {
        return Err(Error::Config(format!("alpha = {alpha} must be positive")));
    }
    let objective = |d: f64| binary_entropy(q) - binary_entropy(d) + alpha * d;
    let grid = 4096;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..=grid {
        let d = q * i as f64 / grid as f64;
        let v = objective(d);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    // The objective is convex in D on (0, 1/2]; h'(D) = log2((1-D)/D).
    let slope = |d: f64| alpha - ((1.0 - d) / d).log2();
    let d_star = if best_i == 0 {
        0.0
    } else if best_i == grid {
        q
    } else {
        let mut lo = q * (best_i - 1) as f64 / grid as f64;
        let mut hi = q * (best_i + 1) as f64 / grid as f64;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok((d_star, objective(d_star)))
}
