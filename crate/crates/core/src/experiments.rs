//! Seeded experiment sweeps: the operating-point scatter against the
//! reference curve, the trellis-vs-annealer comparison, and the LZ gap scan.
//! Cells run in parallel and merge deterministically by cell index, so a
//! fixed seed reproduces the CSV byte for byte.

use crate::anneal::{gibbs_anneal, AnnealConfig, CoolingSchedule};
use crate::codec::{entropy_encode, ziv_gap_scan, ZivScanConfig, ZivScanRow};
use crate::coeffs::{default_lambda_max, gradient_coefficients, true_cost};
use crate::counts::CountMatrix;
use crate::distortion::Distortion;
use crate::error::Result;
use crate::markov::{binary_markov_rd, MarkovSource, RDCurve};
use crate::program::{coefficients_from_program, solve_program, ProgramInstance, SolveOptions};
use crate::viterbi::{encode_iterative, viterbi_encode};
use rayon::prelude::*;
use std::time::Instant;

fn run_pool<T: Send>(workers: usize, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        job()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| crate::error::Error::Config(e.to_string()))?;
        pool.install(job)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct Fig1Config {
    pub n: usize,
    pub k: usize,
    pub q: f64,
    pub alphas: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    /// 0 means the default rayon pool.
    pub workers: usize,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Fig1Config {
            n: 5000,
            k: 7,
            q: 0.2,
            alphas: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            reps: 20,
            seed: 0x51,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Fig1Point {
    pub alpha: f64,
    pub rep: usize,
    pub distortion: f64,
    pub entropy_bits: f64,
    /// Decodable payload rate of the reconstruction, bits per symbol.
    pub coded_bits_per_symbol: f64,
    pub wall_ms: f64,
}

/// Operating points of the trellis encoder with shortcut coefficients
/// (expanded at the input's count matrix), over fresh source realizations.
pub fn run_fig1(cfg: &Fig1Config) -> Result<Vec<Fig1Point>> {
    let cells: Vec<(usize, usize)> = (0..cfg.alphas.len())
        .flat_map(|ai| (0..cfg.reps).map(move |rep| (ai, rep)))
        .collect();
    let cfg2 = cfg.clone();
    run_pool(cfg.workers, move || {
        let points: Vec<Result<Fig1Point>> = cells
            .par_iter()
            .map(|&(ai, rep)| fig1_cell(&cfg2, ai, rep))
            .collect();
        points.into_iter().collect()
    })
}

fn fig1_cell(cfg: &Fig1Config, alpha_idx: usize, rep: usize) -> Result<Fig1Point> {
    let alpha = cfg.alphas[alpha_idx];
    let stream = (alpha_idx * cfg.reps + rep) as u64;
    let src = MarkovSource::binary_symmetric(cfg.q, cfg.seed)?;
    let x = src.generate_stream(cfg.n, stream)?;
    let d = Distortion::hamming(2);
    let started = Instant::now();
    let lam = gradient_coefficients(
        &CountMatrix::from_sequence(&x, cfg.k)?,
        default_lambda_max(cfg.n, 2),
    )?;
    let res = viterbi_encode(&x, &lam, alpha, &d)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let coded = entropy_encode(&res.reconstruction, cfg.k)?;
    Ok(Fig1Point {
        alpha,
        rep,
        distortion: res.true_cost.distortion_part,
        entropy_bits: res.true_cost.entropy_part,
        coded_bits_per_symbol: coded.payload_bits() / cfg.n as f64,
        wall_ms,
    })
}

pub fn fig1_csv(cfg: &Fig1Config, points: &[Fig1Point]) -> String {
    let alphas = cfg
        .alphas
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(";");
    let mut out = format!(
        "# mlzc fig1 v1 n={} k={} q={} reps={} seed={} alphas={}\n",
        cfg.n, cfg.k, cfg.q, cfg.reps, cfg.seed, alphas
    );
    out.push_str("alpha,rep,distortion,entropy_bits,coded_bits_per_symbol,wall_ms\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{:.3}\n",
            p.alpha, p.rep, p.distortion, p.entropy_bits, p.coded_bits_per_symbol, p.wall_ms
        ));
    }
    out
}

/// Mean vertical gap between scatter points and the unclamped lower-bound
/// curve `h(q) - h(D)`, per slope value in grid order. The unclamped form
/// keeps the gap meaningful for low-slope points that land past the curve's
/// zero crossing.
pub fn fig1_mean_gaps(cfg: &Fig1Config, points: &[Fig1Point]) -> Vec<(f64, f64)> {
    cfg.alphas
        .iter()
        .map(|&alpha| {
            let cell: Vec<&Fig1Point> = points.iter().filter(|p| p.alpha == alpha).collect();
            let mean = cell
                .iter()
                .map(|p| {
                    let reference = crate::markov::binary_entropy(cfg.q)
                        - crate::markov::binary_entropy(p.distortion.min(0.5));
                    p.entropy_bits - reference
                })
                .sum::<f64>()
                / cell.len().max(1) as f64;
            (alpha, mean)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Fig3Config {
    pub n: usize,
    pub k: usize,
    pub q: f64,
    pub alphas: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    /// Annealer iterations as a multiple of n.
    pub mcmc_iteration_factor: usize,
    pub workers: usize,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Fig3Config {
            n: 5000,
            k: 7,
            q: 0.2,
            alphas: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            reps: 10,
            seed: 0x53,
            mcmc_iteration_factor: 10,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Fig3Row {
    pub alpha: f64,
    pub rep: usize,
    pub viterbi_cost: f64,
    pub viterbi_ms: f64,
    pub mcmc_cost: f64,
    pub mcmc_ms: f64,
}

/// Paired comparison on identical source realizations: trellis encoder with
/// shortcut coefficients versus the annealer at `beta_t = n ln t` and
/// `r = factor * n` iterations.
pub fn run_fig3(cfg: &Fig3Config) -> Result<Vec<Fig3Row>> {
    let cells: Vec<(usize, usize)> = (0..cfg.alphas.len())
        .flat_map(|ai| (0..cfg.reps).map(move |rep| (ai, rep)))
        .collect();
    let cfg2 = cfg.clone();
    run_pool(cfg.workers, move || {
        let rows: Vec<Result<Fig3Row>> = cells
            .par_iter()
            .map(|&(ai, rep)| fig3_cell(&cfg2, ai, rep))
            .collect();
        rows.into_iter().collect()
    })
}

fn fig3_cell(cfg: &Fig3Config, alpha_idx: usize, rep: usize) -> Result<Fig3Row> {
    let alpha = cfg.alphas[alpha_idx];
    let stream = (alpha_idx * cfg.reps + rep) as u64;
    let src = MarkovSource::binary_symmetric(cfg.q, cfg.seed)?;
    let x = src.generate_stream(cfg.n, stream)?;
    let d = Distortion::hamming(2);

    let started = Instant::now();
    let lam = gradient_coefficients(
        &CountMatrix::from_sequence(&x, cfg.k)?,
        default_lambda_max(cfg.n, 2),
    )?;
    let vit = viterbi_encode(&x, &lam, alpha, &d)?;
    let viterbi_ms = started.elapsed().as_secs_f64() * 1e3;

    let anneal_cfg = AnnealConfig {
        iterations: cfg.mcmc_iteration_factor * cfg.n,
        schedule: CoolingSchedule::LogT {
            scale: cfg.n as f64,
        },
        seed: splitmix(cfg.seed ^ stream),
        order: cfg.k,
        alpha,
    };
    let started = Instant::now();
    let trace = gibbs_anneal(&x, &anneal_cfg, &d)?;
    let mcmc_ms = started.elapsed().as_secs_f64() * 1e3;
    let mcmc_cost = true_cost(&x, &trace.final_y, alpha, cfg.k, &d)?.total;

    Ok(Fig3Row {
        alpha,
        rep,
        viterbi_cost: vit.true_cost.total,
        viterbi_ms,
        mcmc_cost,
        mcmc_ms,
    })
}

pub fn fig3_csv(cfg: &Fig3Config, rows: &[Fig3Row]) -> String {
    let alphas = cfg
        .alphas
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(";");
    let mut out = format!(
        "# mlzc fig3 v1 n={} k={} q={} reps={} seed={} factor={} alphas={}\n",
        cfg.n, cfg.k, cfg.q, cfg.reps, cfg.seed, cfg.mcmc_iteration_factor, alphas
    );
    out.push_str("alpha,rep,viterbi_cost,viterbi_ms,mcmc_cost,mcmc_ms\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.3},{},{:.3}\n",
            r.alpha, r.rep, r.viterbi_cost, r.viterbi_ms, r.mcmc_cost, r.mcmc_ms
        ));
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct Fig3Summary {
    pub alpha: f64,
    pub mean_viterbi_cost: f64,
    pub mean_mcmc_cost: f64,
    /// MCMC wall-clock over trellis wall-clock.
    pub speed_ratio: f64,
}

pub fn fig3_summary(cfg: &Fig3Config, rows: &[Fig3Row]) -> Vec<Fig3Summary> {
    cfg.alphas
        .iter()
        .map(|&alpha| {
            let cell: Vec<&Fig3Row> = rows.iter().filter(|r| r.alpha == alpha).collect();
            let len = cell.len().max(1) as f64;
            let mean_viterbi_cost = cell.iter().map(|r| r.viterbi_cost).sum::<f64>() / len;
            let mean_mcmc_cost = cell.iter().map(|r| r.mcmc_cost).sum::<f64>() / len;
            let vit_ms = cell.iter().map(|r| r.viterbi_ms).sum::<f64>();
            let mcmc_ms = cell.iter().map(|r| r.mcmc_ms).sum::<f64>();
            Fig3Summary {
                alpha,
                mean_viterbi_cost,
                mean_mcmc_cost,
                speed_ratio: mcmc_ms / vit_ms.max(1e-9),
            }
        })
        .collect()
}

pub fn rd_curve_csv(curve: &RDCurve) -> String {
    let mut out = format!(
        "# mlzc rd-curve v1 q={} critical_distortion={}\n",
        curve.q, curve.critical_distortion
    );
    out.push_str("distortion,rate,lower_bound_only\n");
    for p in &curve.points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.distortion, p.rate, p.lower_bound_only as u8
        ));
    }
    out
}

pub fn ziv_scan_csv(cfg: &ZivScanConfig, rows: &[ZivScanRow]) -> String {
    let ns = cfg
        .ns
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(";");
    let mut out = format!(
        "# mlzc ziv-scan v1 q={} seed={} ns={}\n",
        cfg.q, cfg.seed, ns
    );
    out.push_str("n,k,family,lz_bits_per_symbol,entropy_bits,excess\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n, r.k, r.family, r.lz_bits_per_symbol, r.entropy_bits, r.excess
        ));
    }
    out
}

/// Re-export for CLI convenience.
pub fn run_ziv_scan(cfg: &ZivScanConfig) -> Result<Vec<ZivScanRow>> {
    ziv_gap_scan(crate::codec::default_order_schedule, cfg)
}

/// Diagnostic: max absolute difference between the program coefficients and
/// the shortcut coefficients expanded at the converged iterative
/// reconstruction. Reported, never gated.
pub fn program_vs_shortcut_gap(n: usize, q: f64, k: usize, alpha: f64, seed: u64) -> Result<f64> {
    let src = MarkovSource::binary_symmetric(q, seed)?;
    let x = src.generate(n)?;
    let d = Distortion::hamming(2);
    let lambda_max = default_lambda_max(n, 2);

    let inst = ProgramInstance::build(&x, alpha, k, &d)?;
    let sol = solve_program(&inst, &SolveOptions::default())?;
    let program_lam = coefficients_from_program(&sol, lambda_max)?;

    let iterative = encode_iterative(&x, alpha, k, &d, 8, Some(lambda_max))?;
    let m_hat = CountMatrix::from_sequence(&iterative.best.reconstruction, k)?;
    let shortcut_lam = gradient_coefficients(&m_hat, lambda_max)?;

    let gap = program_lam
        .values()
        .iter()
        .zip(shortcut_lam.values())
        .map(|(&a, &b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(gap)
}

/// Reference rate at a measured distortion, clamped at zero.
pub fn reference_rate(q: f64, distortion: f64) -> Result<f64> {
    binary_markov_rd(q, distortion.min(0.5))
}
