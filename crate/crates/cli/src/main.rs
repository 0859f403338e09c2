//! Command-line front end: encode/decode files at a fixed slope, reproduce
//! the experiment sweeps, and emit CSV data.
//!
//! Exit codes: 0 ok, 1 usage/config, 2 I/O or malformed data, 3 budget
//! exceeded.

use clap::{Args, Parser, Subcommand};
use mlzc::codec::{entropy_encode, ZivScanConfig};
use mlzc::coeffs::{default_lambda_max, gradient_coefficients};
use mlzc::counts::CountMatrix;
use mlzc::distortion::Distortion;
use mlzc::error::Error;
use mlzc::experiments::{
    fig1_csv, fig1_mean_gaps, fig3_csv, fig3_summary, rd_curve_csv, run_fig1, run_fig3,
    run_ziv_scan, ziv_scan_csv, Fig1Config, Fig3Config,
};
use mlzc::io::{
    coefficients_to_csv, program_solution_report, read_bitstream, read_sequence, write_bitstream,
    write_sequence, SequenceFormat,
};
use mlzc::markov::RDCurve;
use mlzc::program::{coefficients_from_program, solve_program, ProgramInstance, SolveOptions};
use mlzc::viterbi::{encode_iterative, viterbi_encode};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "mlzc",
    version,
    about = "Fixed-slope lossy compressor for discrete sources"
)]
struct Cli {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode a file: trellis search plus lossless description.
    Encode(EncodeArgs),
    /// Decode a bitstream back to a sequence file.
    Decode(DecodeArgs),
    /// Operating-point sweep against the reference curve.
    Fig1(SweepArgs),
    /// Paired trellis-vs-annealer comparison.
    Fig3(SweepArgs),
    /// LZ78-rate-versus-entropy gap over growing block lengths.
    ZivScan(ZivArgs),
    /// Emit the reference rate-distortion curve.
    RdCurve(RdArgs),
}

#[derive(Args)]
struct EncodeArgs {
    /// Input sequence file.
    #[arg(long)]
    input: PathBuf,
    /// Output bitstream path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Context order of the cost and the lossless coder.
    #[arg(long)]
    k: Option<usize>,
    /// Block order for program mode (default k+1).
    #[arg(long)]
    k1: Option<usize>,
    /// Coefficient mode: shortcut | iterative | program.
    #[arg(long)]
    mode: Option<String>,
    /// Input symbol format: raw | digits.
    #[arg(long)]
    format: Option<String>,
    /// Refinement rounds in iterative mode.
    #[arg(long)]
    rounds: Option<usize>,
    /// Append a metrics row to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the coefficients used to this CSV file.
    #[arg(long)]
    save_coefficients: Option<PathBuf>,
    /// Use pinned coefficients from a CSV file instead of computing them.
    #[arg(long)]
    coefficients: Option<PathBuf>,
    /// Write the program-mode solution report here.
    #[arg(long)]
    save_program: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Output symbol format: raw | digits.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    /// Comma-separated slope grid.
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = default pool).
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reference-curve CSV path (fig1 only).
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

#[derive(Args)]
struct ZivArgs {
    /// Comma-separated block lengths.
    #[arg(long)]
    ns: Option<String>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RdArgs {
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let file_cfg = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    };
    if let Err(e) = run(cli.cmd, &file_cfg) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Decode { .. } | Error::Parse(_) => 2,
        Error::BudgetExceeded(_) => 3,
        _ => 1,
    }
}

type FileConfig = HashMap<String, String>;

fn load_config(path: Option<&Path>) -> Result<FileConfig, Error> {
    let mut map = HashMap::new();
    let Some(path) = path else {
        return Ok(map);
    };
    let text = std::fs::read_to_string(path)?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Precedence: flag > config file > default.
fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    cfg: &FileConfig,
    key: &str,
    default: T,
) -> Result<T, Error> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| Error::Config(format!("config key {key}={raw} unparseable"))),
        None => Ok(default),
    }
}

fn parse_alphas(raw: &str) -> Result<Vec<f64>, Error> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad alpha value {s:?}")))
        })
        .collect()
}

fn run(cmd: Cmd, cfg: &FileConfig) -> Result<(), Error> {
    match cmd {
        Cmd::Encode(args) => cmd_encode(args, cfg),
        Cmd::Decode(args) => cmd_decode(args, cfg),
        Cmd::Fig1(args) => cmd_fig1(args, cfg),
        Cmd::Fig3(args) => cmd_fig3(args, cfg),
        Cmd::ZivScan(args) => cmd_ziv_scan(args, cfg),
        Cmd::RdCurve(args) => cmd_rd_curve(args, cfg),
    }
}

fn cmd_encode(args: EncodeArgs, cfg: &FileConfig) -> Result<(), Error> {
    let format = SequenceFormat::parse(&resolve(args.format, cfg, "format", "digits".into())?)?;
    let alpha = resolve(args.alpha, cfg, "alpha", f64::NAN)?;
    if !(alpha > 0.0) {
        return Err(Error::Config("encoding needs a positive --alpha".into()));
    }
    let k = resolve(args.k, cfg, "k", 4)?;
    let mode = resolve(args.mode, cfg, "mode", "shortcut".to_string())?;
    let rounds = resolve(args.rounds, cfg, "rounds", 8)?;
    let out = args
        .out
        .unwrap_or_else(|| args.input.with_extension("mlzc"));

    let x = read_sequence(&args.input, format)?;
    let n = x.len();
    let a = x.alphabet().size();
    let d = Distortion::hamming(a);
    let lambda_max = default_lambda_max(n, a);

    let started = Instant::now();
    let (result, lam) = if let Some(path) = &args.coefficients {
        let lam = mlzc::io::coefficients_from_csv(&std::fs::read_to_string(path)?)?;
        if lam.order() != k {
            return Err(Error::Config(format!(
                "pinned coefficients have k = {}, expected {k}",
                lam.order()
            )));
        }
        (viterbi_encode(&x, &lam, alpha, &d)?, lam)
    } else {
        match mode.as_str() {
            "shortcut" => {
                let lam = gradient_coefficients(&CountMatrix::from_sequence(&x, k)?, lambda_max)?;
                (viterbi_encode(&x, &lam, alpha, &d)?, lam)
            }
            "iterative" => {
                let iter = encode_iterative(&x, alpha, k, &d, rounds, Some(lambda_max))?;
                let m = CountMatrix::from_sequence(&iter.best.reconstruction, k)?;
                (iter.best, gradient_coefficients(&m, lambda_max)?)
            }
            "program" => {
                let k1 = resolve(args.k1, cfg, "k1", k + 1)?;
                if k1 < k + 1 {
                    return Err(Error::Config(format!("k1 = {k1} must be at least k+1")));
                }
                let p = mlzc::counts::BlockDistribution::from_sequence(&x, k1)?;
                let inst = ProgramInstance::from_distribution(p, alpha, &d)?;
                let sol = solve_program(&inst, &SolveOptions::default()).map_err(|e| match e {
                    Error::BudgetExceeded(msg) => Error::BudgetExceeded(format!(
                        "{msg}; lower --k1 (or --k) to shrink the kernel"
                    )),
                    other => other,
                })?;
                if let Some(path) = &args.save_program {
                    std::fs::write(path, program_solution_report(&sol))?;
                }
                // Marginalize the induced matrix down to the trellis order.
                let mut m = sol.induced.clone();
                while m.order() > k {
                    m = m.marginalized()?;
                }
                let lam = if m.order() == sol.induced.order() {
                    coefficients_from_program(&sol, lambda_max)?
                } else {
                    gradient_coefficients(&m, lambda_max)?
                };
                (viterbi_encode(&x, &lam, alpha, &d)?, lam)
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown mode {other:?} (expected shortcut|iterative|program)"
                )))
            }
        }
    };

    let stream = entropy_encode(&result.reconstruction, k)?;
    write_bitstream(&out, &stream)?;
    if let Some(path) = &args.save_coefficients {
        std::fs::write(path, coefficients_to_csv(&lam))?;
    }
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let bits_per_symbol = stream.total_bits() / n as f64;
    let linearized = result.linearized.map(|c| c.total).unwrap_or(f64::NAN);
    println!(
        "n={n} k={k} alpha={alpha} mode={mode} distortion={:.6} entropy_bits={:.6} \
         linearized={:.6} bits_per_symbol={:.6} wall_ms={:.1}",
        result.true_cost.distortion_part,
        result.true_cost.entropy_part,
        linearized,
        bits_per_symbol,
        wall_ms
    );
    if let Some(path) = &args.csv {
        let mut row = String::new();
        if !path.exists() {
            row.push_str(
                "# mlzc encode v1\nn,k,alpha,mode,distortion,entropy_bits,linearized,bits_per_symbol,wall_ms\n",
            );
        }
        row.push_str(&format!(
            "{n},{k},{alpha},{mode},{},{},{},{},{:.3}\n",
            result.true_cost.distortion_part,
            result.true_cost.entropy_part,
            linearized,
            bits_per_symbol,
            wall_ms
        ));
        use std::io::Write;
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        f.write_all(row.as_bytes())?;
    }
    Ok(())
}

fn cmd_decode(args: DecodeArgs, cfg: &FileConfig) -> Result<(), Error> {
    let format = SequenceFormat::parse(&resolve(args.format, cfg, "format", "digits".into())?)?;
    let stream = read_bitstream(&args.input)?;
    let y = mlzc::codec::entropy_decode(&stream)?;
    write_sequence(&args.out, &y, format)?;
    println!(
        "decoded n={} k={} alphabet={}",
        y.len(),
        stream.header.order,
        stream.header.alphabet_size
    );
    Ok(())
}

fn cmd_fig1(args: SweepArgs, cfg: &FileConfig) -> Result<(), Error> {
    let defaults = Fig1Config::default();
    let alphas = match args.alphas {
        Some(raw) => parse_alphas(&raw)?,
        None => match cfg.get("alphas") {
            Some(raw) => parse_alphas(raw)?,
            None => defaults.alphas.clone(),
        },
    };
    let config = Fig1Config {
        n: resolve(args.n, cfg, "n", defaults.n)?,
        k: resolve(args.k, cfg, "k", defaults.k)?,
        q: resolve(args.q, cfg, "q", defaults.q)?,
        alphas,
        reps: resolve(args.reps, cfg, "reps", defaults.reps)?,
        seed: resolve(args.seed, cfg, "seed", defaults.seed)?,
        workers: resolve(args.workers, cfg, "workers", defaults.workers)?,
    };
    let out = args.out.unwrap_or_else(|| PathBuf::from("fig1_points.csv"));
    let curve_out = args
        .curve_out
        .unwrap_or_else(|| PathBuf::from("fig1_curve.csv"));

    let points = run_fig1(&config)?;
    std::fs::write(&out, fig1_csv(&config, &points))?;
    let curve = RDCurve::sample(config.q, 201)?;
    std::fs::write(&curve_out, rd_curve_csv(&curve))?;
    println!("wrote {} points to {}", points.len(), out.display());
    println!("reference curve in {}", curve_out.display());
    for (alpha, gap) in fig1_mean_gaps(&config, &points) {
        println!("alpha {alpha:>6}: mean gap to curve {gap:+.4} bits");
    }
    Ok(())
}

fn cmd_fig3(args: SweepArgs, cfg: &FileConfig) -> Result<(), Error> {
    let defaults = Fig3Config::default();
    let alphas = match args.alphas {
        Some(raw) => parse_alphas(&raw)?,
        None => match cfg.get("alphas") {
            Some(raw) => parse_alphas(raw)?,
            None => defaults.alphas.clone(),
        },
    };
    let config = Fig3Config {
        n: resolve(args.n, cfg, "n", defaults.n)?,
        k: resolve(args.k, cfg, "k", defaults.k)?,
        q: resolve(args.q, cfg, "q", defaults.q)?,
        alphas,
        reps: resolve(args.reps, cfg, "reps", defaults.reps)?,
        seed: resolve(args.seed, cfg, "seed", defaults.seed)?,
        mcmc_iteration_factor: resolve(None, cfg, "factor", defaults.mcmc_iteration_factor)?,
        workers: resolve(args.workers, cfg, "workers", defaults.workers)?,
    };
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from("fig3_compare.csv"));
    let rows = run_fig3(&config)?;
    std::fs::write(&out, fig3_csv(&config, &rows))?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    for s in fig3_summary(&config, &rows) {
        println!(
            "alpha {:>6}: trellis {:.4} vs annealer {:.4}; speed ratio {:.1}x",
            s.alpha, s.mean_viterbi_cost, s.mean_mcmc_cost, s.speed_ratio
        );
    }
    Ok(())
}

fn cmd_ziv_scan(args: ZivArgs, cfg: &FileConfig) -> Result<(), Error> {
    let defaults = ZivScanConfig::default();
    let ns = match args.ns.or_else(|| cfg.get("ns").cloned()) {
        Some(raw) => raw
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad n value {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => defaults.ns.clone(),
    };
    let config = ZivScanConfig {
        ns,
        q: resolve(args.q, cfg, "q", defaults.q)?,
        seed: resolve(args.seed, cfg, "seed", defaults.seed)?,
    };
    let out = args.out.unwrap_or_else(|| PathBuf::from("ziv_scan.csv"));
    let rows = run_ziv_scan(&config)?;
    std::fs::write(&out, ziv_scan_csv(&config, &rows))?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    for (n, excess) in mlzc::codec::max_excess_by_n(&rows) {
        println!("n {n:>8}: max excess {excess:+.4} bits/symbol");
    }
    Ok(())
}

fn cmd_rd_curve(args: RdArgs, cfg: &FileConfig) -> Result<(), Error> {
    let q = resolve(args.q, cfg, "q", 0.2)?;
    let points = resolve(args.points, cfg, "points", 201)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("rd_curve.csv"));
    let curve = RDCurve::sample(q, points)?;
    std::fs::write(&out, rd_curve_csv(&curve))?;
    println!(
        "wrote {} curve points to {}",
        curve.points.len(),
        out.display()
    );
    Ok(())
}
