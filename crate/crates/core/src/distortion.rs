//! Single-letter distortion measures between source and reconstruction
//! alphabets, which may differ in size.

use crate::counts::Sequence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Distortion {
    source_size: usize,
    recon_size: usize,
    values: Vec<f64>,
}

impl Distortion {
    pub fn new(source_size: usize, recon_size: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != source_size * recon_size {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: source_size * recon_size,
            });
        }
        if let Some(&bad) = values.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("distortion value {bad} invalid")));
        }
        Ok(Distortion {
            source_size,
            recon_size,
            values,
        })
    }

    pub fn hamming(size: usize) -> Self {
        let values = (0..size * size)
            .map(|i| if i / size == i % size { 0.0 } else { 1.0 })
            .collect();
        Distortion {
            source_size: size,
            recon_size: size,
            values,
        }
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn recon_size(&self) -> usize {
        self.recon_size
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.recon_size + y]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest strictly positive entry, if any.
    pub fn min_positive(&self) -> Option<f64> {
        self.values
            .iter()
            .cloned()
            .filter(|&v| v > 0.0)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
    }

    /// Per-symbol average distortion `d_n(x, y)`.
    pub fn mean(&self, x: &Sequence, y: &Sequence) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        let total: f64 = x
            .symbols()
            .iter()
            .zip(y.symbols())
            .map(|(&a, &b)| self.get(a as usize, b as usize))
            .sum();
        Ok(total / x.len() as f64)
    }
}
