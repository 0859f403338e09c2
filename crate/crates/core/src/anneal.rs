//! Simulated-annealing Gibbs encoder, the prior-art baseline the trellis
//! search is compared against.
//!
//! Energy of a candidate reconstruction is `n * (H_k(y) + alpha * d_n(x, y))`.
//! The sampler starts from `y = x`, picks a position uniformly at random,
//! and resamples its symbol from the Boltzmann conditional at inverse
//! temperature `beta_t`. Count bookkeeping is incremental: a single-site
//! change touches only the `k+1` windows covering it, so one move costs
//! O(k * A) regardless of the block length.

use crate::counts::{checked_pow, CountMatrix, Sequence};
use crate::distortion::Distortion;
use crate::error::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

/// Inverse-temperature schedule; non-decreasing in `t` by construction.
#[derive(Debug, Clone, Copy)]
pub enum CoolingSchedule {
    /// `beta_t = scale * ln(t)`, except that t = 1 reuses the t = 2 value:
    /// ln(1) = 0 would make the first sweep infinite-temperature.
    LogT {
        scale: f64,
    },
    Constant(f64),
}

impl CoolingSchedule {
    pub fn beta(&self, t: usize) -> f64 {
        match *self {
            CoolingSchedule::LogT { scale } => scale * (t.max(2) as f64).ln(),
            CoolingSchedule::Constant(b) => b,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnnealConfig {
    pub iterations: usize,
    pub schedule: CoolingSchedule,
    pub seed: u64,
    pub order: usize,
    pub alpha: f64,
}

impl AnnealConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("need at least one iteration".into()));
        }
        if self.alpha < 0.0 {
            return Err(Error::Config(format!("alpha {} negative", self.alpha)));
        }
        if let CoolingSchedule::Constant(b) = self.schedule {
            if b < 0.0 {
                return Err(Error::Config(format!("beta {b} negative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Checkpoint {
    pub iteration: usize,
    pub energy: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct AnnealTrace {
    pub final_y: Sequence,
    /// Exact final energy, recomputed from integer counts at the end.
    pub final_energy: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// Moves that actually changed a symbol.
    pub changed_moves: u64,
    pub iterations: usize,
    pub wall: Duration,
}

/// Maintained statistics of the working reconstruction: integer window
/// counts, from which energies and single-site deltas are computed exactly.
#[derive(Debug, Clone)]
pub struct EnergyState {
    x: Vec<u8>,
    y: Vec<u8>,
    alphabet: usize,
    order: usize,
    counts: Vec<u64>,
    alpha: f64,
    d: Distortion,
}

impl EnergyState {
    pub fn new(x: &Sequence, y: Sequence, k: usize, alpha: f64, d: &Distortion) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if y.len() < k + 1 {
            return Err(Error::InputTooShort {
                n: y.len(),
                min: k + 1,
            });
        }
        crate::viterbi::check_encode_dims(x, y.alphabet(), d)?;
        let alphabet = y.alphabet().size();
        checked_pow(alphabet, k + 1)?;
        let raw = CountMatrix::raw_from_sequence(&y, k)?;
        let counts = raw.entries().iter().map(|&v| v as u64).collect();
        Ok(EnergyState {
            x: x.symbols().to_vec(),
            y: y.symbols().to_vec(),
            alphabet,
            order: k,
            counts,
            alpha,
            d: d.clone(),
        })
    }

    pub fn reconstruction(&self) -> &[u8] {
        &self.y
    }

    /// The maintained raw count matrix.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Exact energy `n * (H_k + alpha * d_n)`, recomputed from the integer
    /// counts and the symbol arrays.
    pub fn energy(&self) -> f64 {
        let a = self.alphabet;
        let mut ent = 0.0;
        for col in self.counts.chunks(a) {
            ent += column_entropy(col);
        }
        let dist: f64 = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(&xs, &ys)| self.d.get(xs as usize, ys as usize))
            .sum();
        ent + self.alpha * dist
    }

    /// Energy change from setting `y[i] = a`, exact with respect to a full
    /// recomputation. Touches only the columns of the `k+1` windows covering
    /// position `i`.
    pub fn delta(&self, i: usize, a: u8) -> f64 {
        let cur = self.y[i];
        if a == cur {
            return 0.0;
        }
        let deltas = self.window_deltas(i, a);
        let asize = self.alphabet;
        // Distinct affected contexts.
        let mut ctxs: Vec<usize> = deltas.iter().map(|&(blk, _)| blk / asize).collect();
        ctxs.sort_unstable();
        ctxs.dedup();

        let mut change = 0.0;
        let mut col = vec![0i64; asize];
        for &ctx in &ctxs {
            for (s, c) in col.iter_mut().enumerate() {
                *c = self.counts[ctx * asize + s] as i64;
            }
            let before = column_entropy_i64(&col);
            for &(blk, dv) in &deltas {
                if blk / asize == ctx {
                    col[blk % asize] += dv;
                }
            }
            let after = column_entropy_i64(&col);
            change += after - before;
        }
        change
            + self.alpha
                * (self.d.get(self.x[i] as usize, a as usize)
                    - self.d.get(self.x[i] as usize, cur as usize))
    }

    /// Commit `y[i] = a`, updating the maintained counts.
    pub fn apply(&mut self, i: usize, a: u8) {
        if a == self.y[i] {
            return;
        }
        for (blk, dv) in self.window_deltas(i, a) {
            if dv < 0 {
                self.counts[blk] -= 1;
            } else {
                self.counts[blk] += 1;
            }
        }
        self.y[i] = a;
    }

    /// Count changes for the windows ending at i, i+1, ..., i+k (cyclic).
    fn window_deltas(&self, i: usize, a: u8) -> Vec<(usize, i64)> {
        let n = self.y.len() as isize;
        let k = self.order;
        let asize = self.alphabet;
        let mut out = Vec::with_capacity(2 * (k + 1));
        for t in 0..=k {
            let end = (i as isize + t as isize).rem_euclid(n);
            let mut old_blk = 0usize;
            let mut new_blk = 0usize;
            for off in 0..=k {
                let p = (end - k as isize + off as isize).rem_euclid(n) as usize;
                let old_sym = self.y[p] as usize;
                let new_sym = if p == i { a as usize } else { old_sym };
                old_blk = old_blk * asize + old_sym;
                new_blk = new_blk * asize + new_sym;
            }
            out.push((old_blk, -1));
            out.push((new_blk, 1));
        }
        out
    }

    /// Verify the maintained counts against a fresh recount.
    pub fn check_consistency(&self) -> Result<()> {
        let y = Sequence::new(self.y.clone(), crate::counts::Alphabet::new(self.alphabet)?)?;
        let fresh = CountMatrix::raw_from_sequence(&y, self.order)?;
        for (i, &v) in fresh.entries().iter().enumerate() {
            if self.counts[i] != v as u64 {
                return Err(Error::Internal(format!(
                    "count drift at block {i}: {} vs {}",
                    self.counts[i], v
                )));
            }
        }
        Ok(())
    }
}

fn column_entropy(col: &[u64]) -> f64 {
    let s: u64 = col.iter().sum();
    if s == 0 {
        return 0.0;
    }
    let sf = s as f64;
    col.iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 * (sf / c as f64).log2())
        .sum()
}

fn column_entropy_i64(col: &[i64]) -> f64 {
    let s: i64 = col.iter().sum();
    debug_assert!(col.iter().all(|&c| c >= 0));
    if s <= 0 {
        return 0.0;
    }
    let sf = s as f64;
    col.iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 * (sf / c as f64).log2())
        .sum()
}

/// Run the annealer. The reconstruction alphabet is the source alphabet,
/// matching the baseline's start at `y = x`.
pub fn gibbs_anneal(x: &Sequence, cfg: &AnnealConfig, d: &Distortion) -> Result<AnnealTrace> {
    cfg.validate()?;
    let start = Instant::now();
    let n = x.len();
    let a = x.alphabet().size();
    let mut state = EnergyState::new(x, x.clone(), cfg.order, cfg.alpha, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let checkpoint_every = (cfg.iterations / 200).max(1);
    let mut checkpoints = Vec::new();
    let mut changed = 0u64;
    let mut deltas = vec![0.0f64; a];
    let mut weights = vec![0.0f64; a];

    for t in 1..=cfg.iterations {
        let beta = cfg.schedule.beta(t);
        let i = rng.gen_range(0..n);
        let cur = state.y[i];
        for (sym, slot) in deltas.iter_mut().enumerate() {
            *slot = state.delta(i, sym as u8);
        }
        let min = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut total = 0.0;
        for (w, &dv) in weights.iter_mut().zip(&deltas) {
            *w = (-beta * (dv - min)).exp();
            total += *w;
        }
        let mut u = rng.gen::<f64>() * total;
        let mut pick = a - 1;
        for (sym, &w) in weights.iter().enumerate() {
            u -= w;
            if u <= 0.0 {
                pick = sym;
                break;
            }
        }
        if pick as u8 != cur {
            state.apply(i, pick as u8);
            changed += 1;
        }
        if t % checkpoint_every == 0 || t == cfg.iterations {
            checkpoints.push(Checkpoint {
                iteration: t,
                energy: state.energy(),
                beta,
            });
        }
    }

    let final_energy = state.energy();
    let final_y = Sequence::new(state.y.clone(), x.alphabet())?;
    Ok(AnnealTrace {
        final_y,
        final_energy,
        checkpoints,
        changed_moves: changed,
        iterations: cfg.iterations,
        wall: start.elapsed(),
    })
}
