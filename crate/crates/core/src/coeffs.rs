//! Linearization coefficients: the entropy gradient at a count matrix, and
//! the linearized / exact Lagrangian costs it induces.
//!
//! At a normalized count matrix the free-coordinate gradient of the
//! conditional entropy has the closed form
//! `lambda[s, b] = log2(colsum(b) / m[s, b])`, the negative log of the
//! empirical conditional probability. Entries with `m[s, b] = 0` diverge and
//! are clamped to a ceiling `lambda_max`, the per-symbol price a two-part
//! code would pay for an escape.

use crate::counts::{checked_pow, Alphabet, CountMatrix, Sequence};
use crate::distortion::Distortion;
use crate::error::{Error, Result};

/// Entropy-gradient weights, laid out like the count matrix they derive
/// from: flat over `(k+1)`-window integers.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    order: usize,
    alphabet: Alphabet,
    values: Vec<f64>,
    lambda_max: f64,
}

impl CoefficientMatrix {
    pub fn new(
        order: usize,
        alphabet: Alphabet,
        values: Vec<f64>,
        lambda_max: f64,
    ) -> Result<Self> {
        if lambda_max <= 0.0 {
            return Err(Error::Config(format!(
                "lambda_max {lambda_max} must be > 0"
            )));
        }
        let expected = checked_pow(alphabet.size(), order + 1)?;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: expected,
            });
        }
        if let Some(&bad) = values
            .iter()
            .find(|&&v| !v.is_finite() || v < 0.0 || v > lambda_max)
        {
            return Err(Error::Config(format!(
                "coefficient {bad} outside [0, {lambda_max}]"
            )));
        }
        Ok(CoefficientMatrix {
            order,
            alphabet,
            values,
            lambda_max,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, symbol: usize, context: usize) -> f64 {
        self.values[context * self.alphabet.size() + symbol]
    }

    /// Uniform coefficients, handy for degenerate trellis tests.
    pub fn uniform(order: usize, alphabet: Alphabet, value: f64, lambda_max: f64) -> Result<Self> {
        let len = checked_pow(alphabet.size(), order + 1)?;
        CoefficientMatrix::new(order, alphabet, vec![value; len], lambda_max)
    }
}

/// Default clamp ceiling: `log2(n) + log2(A)` bits.
pub fn default_lambda_max(n: usize, alphabet_size: usize) -> f64 {
    (n as f64).log2() + (alphabet_size as f64).log2()
}

/// Gradient of the conditional entropy at `m`, clamped to `lambda_max`.
/// Zero entries (and whole never-visited columns) take the clamp value.
pub fn gradient_coefficients(m: &CountMatrix, lambda_max: f64) -> Result<CoefficientMatrix> {
    if lambda_max <= 0.0 {
        return Err(Error::Config(format!(
            "lambda_max {lambda_max} must be > 0"
        )));
    }
    let a = m.alphabet().size();
    let mut values = vec![0.0; m.entries().len()];
    for ctx in 0..m.num_contexts() {
        let col = m.column(ctx);
        let s: f64 = col.iter().sum();
        for (beta, &v) in col.iter().enumerate() {
            values[ctx * a + beta] = if s > 0.0 && v > 0.0 {
                (s / v).log2().clamp(0.0, lambda_max)
            } else {
                lambda_max
            };
        }
    }
    CoefficientMatrix::new(m.order(), m.alphabet(), values, lambda_max)
}

/// A Lagrangian cost split into its rate-like and distortion parts,
/// all in per-symbol units: `total = entropy_part + alpha * distortion_part`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianCost {
    pub total: f64,
    pub entropy_part: f64,
    pub distortion_part: f64,
    pub alpha: f64,
}

impl LagrangianCost {
    pub fn new(entropy_part: f64, distortion_part: f64, alpha: f64) -> Self {
        LagrangianCost {
            total: entropy_part + alpha * distortion_part,
            entropy_part,
            distortion_part,
            alpha,
        }
    }
}

/// Compensated summation; keeps the per-symbol and matrix-form cost routes
/// in agreement at long block lengths.
pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Linearized cost of reconstructing `x` as `y`: `sum(lambda * m(y)) +
/// alpha * d_n(x, y)`, with cyclic contexts. Evaluated both through the
/// count matrix and as a per-symbol sum; the two agree to rounding error.
pub fn linearized_cost(
    x: &Sequence,
    y: &Sequence,
    lam: &CoefficientMatrix,
    alpha: f64,
    d: &Distortion,
) -> Result<LagrangianCost> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    check_dims(x, y, lam.alphabet(), d)?;
    let m = CountMatrix::from_sequence(y, lam.order())?;
    let entropy_part = kahan_sum(
        m.entries()
            .iter()
            .zip(lam.values())
            .map(|(&mv, &lv)| mv * lv),
    );
    let distortion_part = d.mean(x, y)?;

    // Per-symbol route over cyclic windows, as a cross-check.
    let per_symbol = per_symbol_linearized(x, y, lam, alpha, d);
    let matrix_total = entropy_part + alpha * distortion_part;
    debug_assert!(
        (per_symbol - matrix_total).abs() <= 1e-12 * matrix_total.abs().max(1.0),
        "cost routes disagree: {per_symbol} vs {matrix_total}"
    );

    Ok(LagrangianCost::new(entropy_part, distortion_part, alpha))
}

fn per_symbol_linearized(
    x: &Sequence,
    y: &Sequence,
    lam: &CoefficientMatrix,
    alpha: f64,
    d: &Distortion,
) -> f64 {
    let a = y.alphabet().size();
    let size = lam.values().len();
    let n = y.len();
    let len = lam.order() + 1;
    let mut blk = 0usize;
    for t in 0..len {
        let p = (n as isize - len as isize + t as isize).rem_euclid(n as isize) as usize;
        blk = blk * a + y.get(p) as usize;
    }
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        blk = (blk * a) % size + y.get(i) as usize;
        terms.push(lam.values()[blk] + alpha * d.get(x.get(i) as usize, y.get(i) as usize));
    }
    kahan_sum(terms.into_iter()) / n as f64
}

/// Exact fixed-slope cost `H_k(y) + alpha * d_n(x, y)`.
pub fn true_cost(
    x: &Sequence,
    y: &Sequence,
    alpha: f64,
    k: usize,
    d: &Distortion,
) -> Result<LagrangianCost> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    check_dims(x, y, y.alphabet(), d)?;
    let entropy_part = CountMatrix::from_sequence(y, k)?
        .conditional_entropy()?
        .bits;
    let distortion_part = d.mean(x, y)?;
    Ok(LagrangianCost::new(entropy_part, distortion_part, alpha))
}

fn check_dims(x: &Sequence, y: &Sequence, lam_alphabet: Alphabet, d: &Distortion) -> Result<()> {
    if y.alphabet() != lam_alphabet {
        return Err(Error::Config(format!(
            "reconstruction alphabet {} does not match coefficient alphabet {}",
            y.alphabet().size(),
            lam_alphabet.size()
        )));
    }
    if x.alphabet().size() > d.source_size() || y.alphabet().size() > d.recon_size() {
        return Err(Error::Config(format!(
            "distortion matrix is {}x{} but alphabets are {} and {}",
            d.source_size(),
            d.recon_size(),
            x.alphabet().size(),
            y.alphabet().size()
        )));
    }
    Ok(())
}
