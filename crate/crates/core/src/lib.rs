//! Fixed-slope lossy compression of discrete Markov sources.
//!
//! The encoder assigns every candidate reconstruction a cost that is linear
//! in its empirical count matrix — entropy-gradient coefficients plus a
//! slope-weighted distortion — finds the minimizer with a Viterbi search
//! over the context trellis, and describes the winner losslessly with an
//! adaptive context coder. The crate also carries the machinery around that
//! pipeline: the coefficient-selection program, a simulated-annealing
//! baseline, Markov source generators with their rate-distortion reference
//! curve, and reproducible experiment sweeps.

pub mod anneal;
pub mod codec;
pub mod coeffs;
pub mod counts;
pub mod distortion;
pub mod error;
pub mod experiments;
pub mod io;
pub mod markov;
pub mod program;
pub mod simplex;
pub mod viterbi;

pub use coeffs::{
    default_lambda_max, gradient_coefficients, linearized_cost, true_cost, CoefficientMatrix,
    LagrangianCost,
};
pub use counts::{
    entropy_functional, Alphabet, BlockDistribution, CountMatrix, EntropyValue, Sequence,
};
pub use distortion::Distortion;
pub use error::{Error, Result};
pub use viterbi::{encode_iterative, exhaustive_encode, viterbi_encode, CostModel, EncodeResult};
