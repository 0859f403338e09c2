//! File formats: sequences as raw bytes or ASCII digits, CSV tables for
//! count and coefficient matrices, and the program-solution report.

use crate::codec::Bitstream;
use crate::coeffs::CoefficientMatrix;
use crate::counts::{Alphabet, CountMatrix, Sequence};
use crate::error::{Error, Result};
use crate::program::ProgramSolution;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceFormat {
    /// One symbol per byte, alphabet fixed at 256.
    RawBytes,
    /// ASCII digit characters; whitespace ignored. Alphabet is the largest
    /// digit plus one (at least 2).
    AsciiDigits,
}

impl SequenceFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "raw" => Ok(SequenceFormat::RawBytes),
            "digits" => Ok(SequenceFormat::AsciiDigits),
            other => Err(Error::Config(format!(
                "unknown sequence format {other:?} (expected raw|digits)"
            ))),
        }
    }
}

pub fn sequence_from_bytes(bytes: &[u8], format: SequenceFormat) -> Result<Sequence> {
    match format {
        SequenceFormat::RawBytes => Sequence::new(bytes.to_vec(), Alphabet::new(256)?),
        SequenceFormat::AsciiDigits => {
            let text = std::str::from_utf8(bytes)
                .map_err(|e| Error::Parse(format!("input is not UTF-8: {e}")))?;
            let digits: Vec<u8> = text
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as u8)
                        .ok_or_else(|| Error::Parse(format!("non-digit character {c:?}")))
                })
                .collect::<Result<_>>()?;
            let max = digits.iter().max().copied().unwrap_or(0);
            Sequence::new(digits, Alphabet::new((max as usize + 1).max(2))?)
        }
    }
}

pub fn sequence_to_bytes(y: &Sequence, format: SequenceFormat) -> Result<Vec<u8>> {
    match format {
        SequenceFormat::RawBytes => Ok(y.symbols().to_vec()),
        SequenceFormat::AsciiDigits => {
            if y.alphabet().size() > 10 {
                return Err(Error::Config(format!(
                    "alphabet of {} symbols cannot be written as digits",
                    y.alphabet().size()
                )));
            }
            Ok(y.to_digits().into_bytes())
        }
    }
}

pub fn read_sequence(path: &Path, format: SequenceFormat) -> Result<Sequence> {
    sequence_from_bytes(&std::fs::read(path)?, format)
}

pub fn write_sequence(path: &Path, y: &Sequence, format: SequenceFormat) -> Result<()> {
    Ok(std::fs::write(path, sequence_to_bytes(y, format)?)?)
}

pub fn read_bitstream(path: &Path) -> Result<Bitstream> {
    Bitstream::from_bytes(&std::fs::read(path)?)
}

pub fn write_bitstream(path: &Path, b: &Bitstream) -> Result<()> {
    Ok(std::fs::write(path, b.to_bytes())?)
}

/// Count matrix as CSV: one row per symbol, one column per context integer.
pub fn count_matrix_to_csv(m: &CountMatrix) -> String {
    let a = m.alphabet().size();
    let contexts = m.num_contexts();
    let mut out = format!(
        "# mlzc count-matrix v1 k={} alphabet={} total={}\n",
        m.order(),
        a,
        m.total()
    );
    out.push_str("symbol");
    for c in 0..contexts {
        out.push_str(&format!(",ctx{c}"));
    }
    out.push('\n');
    for sym in 0..a {
        out.push_str(&sym.to_string());
        for ctx in 0..contexts {
            out.push_str(&format!(",{}", m.entry(sym, ctx)));
        }
        out.push('\n');
    }
    out
}

/// Coefficient matrix as CSV, in the count-matrix layout, with enough
/// metadata to reconstruct it exactly.
pub fn coefficients_to_csv(lam: &CoefficientMatrix) -> String {
    let a = lam.alphabet().size();
    let contexts = lam.values().len() / a;
    let mut out = format!(
        "# mlzc coefficients v1 k={} alphabet={} lambda_max={}\n",
        lam.order(),
        a,
        lam.lambda_max()
    );
    out.push_str("symbol");
    for c in 0..contexts {
        out.push_str(&format!(",ctx{c}"));
    }
    out.push('\n');
    for sym in 0..a {
        out.push_str(&sym.to_string());
        for ctx in 0..contexts {
            out.push_str(&format!(",{}", lam.value(sym, ctx)));
        }
        out.push('\n');
    }
    out
}

pub fn coefficients_from_csv(text: &str) -> Result<CoefficientMatrix> {
    let mut lines = text.lines();
    let meta = lines
        .next()
        .ok_or_else(|| Error::Parse("empty coefficient file".into()))?;
    if !meta.starts_with("# mlzc coefficients v1") {
        return Err(Error::Parse(format!("bad coefficient header: {meta}")));
    }
    let mut k = None;
    let mut alphabet = None;
    let mut lambda_max = None;
    for token in meta.split_whitespace() {
        if let Some(v) = token.strip_prefix("k=") {
            k = Some(
                v.parse::<usize>()
                    .map_err(|e| Error::Parse(e.to_string()))?,
            );
        } else if let Some(v) = token.strip_prefix("alphabet=") {
            alphabet = Some(
                v.parse::<usize>()
                    .map_err(|e| Error::Parse(e.to_string()))?,
            );
        } else if let Some(v) = token.strip_prefix("lambda_max=") {
            lambda_max = Some(v.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
        }
    }
    let (k, a, lambda_max) = match (k, alphabet, lambda_max) {
        (Some(k), Some(a), Some(l)) => (k, a, l),
        _ => {
            return Err(Error::Parse(
                "missing k/alphabet/lambda_max metadata".into(),
            ))
        }
    };
    lines.next(); // column header
    let contexts = crate::counts::checked_pow(a, k)?;
    let mut values = vec![0.0f64; contexts * a];
    let mut seen = 0;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let sym: usize = fields
            .next()
            .ok_or_else(|| Error::Parse("missing symbol field".into()))?
            .parse()
            .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?;
        for (ctx, field) in fields.enumerate() {
            if ctx >= contexts {
                return Err(Error::Parse(format!("too many columns in row {sym}")));
            }
            values[ctx * a + sym] = field
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
        }
        seen += 1;
    }
    if seen != a {
        return Err(Error::Parse(format!(
            "expected {a} symbol rows, got {seen}"
        )));
    }
    CoefficientMatrix::new(k, Alphabet::new(a)?, values, lambda_max)
}

/// Annealer checkpoints as CSV: iteration, energy, inverse temperature.
pub fn anneal_trace_csv(trace: &crate::anneal::AnnealTrace) -> String {
    let mut out = String::from("# mlzc anneal-trace v1\niteration,energy,beta\n");
    for c in &trace.checkpoints {
        out.push_str(&format!("{},{},{}\n", c.iteration, c.energy, c.beta));
    }
    out
}

/// Human-readable solution report with the induced matrix, objective trace,
/// and feasibility residuals.
pub fn program_solution_report(sol: &ProgramSolution) -> String {
    let mut out = String::from("# mlzc program-solution v1\n");
    out.push_str(&format!("objective: {}\n", sol.objective));
    out.push_str(&format!("converged: {}\n", sol.converged));
    out.push_str(&format!(
        "residuals: row_sum={} min_entry={} max_entry={} stationarity={}\n",
        sol.residuals.row_sum,
        sol.residuals.min_entry,
        sol.residuals.max_entry,
        sol.residuals.stationarity
    ));
    out.push_str("trace:");
    for v in &sol.trace {
        out.push_str(&format!(" {v}"));
    }
    out.push('\n');
    out.push_str("induced:\n");
    out.push_str(&count_matrix_to_csv(&sol.induced));
    out
}
