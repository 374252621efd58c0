use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cayley_core::cayley::DEFAULT_BRANCH_GUARD;
use cayley_core::error::Error;
use cayley_core::haar_stats::estimate_tvd;
use cayley_core::interp::Field;
use cayley_core::io::{haar_sample_file, write_csv, CircuitFile, RunManifest, TvdRow};
use cayley_core::linalg::unitarity_residual;
use cayley_core::reduction::{
    backend_name, paturi_bound, robustness_bound, robustness_threshold, run_reduction, truncation_experiment,
    Bound, DegreeMode, GridKind, OracleModel, ReductionConfig, ReductionReport, ROBUSTNESS_NOTE,
};
use cayley_core::scalar::{Real, F1024, F128, F256, F512};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "cayley", version, about = "Cayley-path interpolation, rational decoding and reduction experiments")]
struct Cli {
    /// Worker threads for grid and Monte-Carlo loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write Haar-random unitaries as a circuit file.
    HaarSample {
        /// Matrix dimension, 2 or 4.
        #[arg(long = "N", value_parser = parse_dim)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unitarity residuals and endpoint checks along the path.
    PathCheck {
        circuit: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
        thetas: Vec<f64>,
        /// Seed for the Haar companions.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Worst-to-average reduction: sample, decode, extrapolate to theta = 0.
    Reduce(ReduceArgs),
    /// Distance from Haar of the deformed eigenphase distribution.
    Tvd {
        #[arg(long = "N")]
        dim: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 160_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also estimate at theta = 1 + delta.
        #[arg(long)]
        both_sides: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paturi and robustness bounds.
    Bounds {
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Polynomial degree for the Paturi bound (default 16 m).
        #[arg(long)]
        d: Option<usize>,
        /// Qubit count for the robustness threshold.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated-Taylor geodesic against the exact path.
    Truncate {
        circuit: PathBuf,
        #[arg(long = "K")]
        order: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
        thetas: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModelArg {
    Exact,
    Corrupt,
    Noise,
    CorruptNoise,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Spaced,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Polynomial,
    Rational,
}

#[derive(clap::Args)]
struct ReduceArgs {
    circuit: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Grid size.
    #[arg(long = "L", default_value_t = 40)]
    points: usize,
    /// Error budget for decoding.
    #[arg(long, default_value_t = 0)]
    t: usize,
    #[arg(long, value_enum, default_value = "spaced")]
    grid: GridArg,
    #[arg(long, value_enum, default_value = "exact")]
    model: ModelArg,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    frac: f64,
    /// 53 (machine), 128, 256, 512 or 1024.
    #[arg(long, env = "CAYLEY_PRECISION_BITS", default_value_t = 512)]
    precision_bits: u32,
    /// Seeds the companions, the random grid and the oracle.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "polynomial")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-node samples as CSV.
    #[arg(long)]
    samples_out: Option<PathBuf>,
}

fn parse_dim(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(d @ (2 | 4)) => Ok(d),
        _ => Err(format!("N must be 2 or 4, got `{s}`")),
    }
}

/// Writes `text` to `out`, or stdout when absent.
fn emit(out: Option<&Path>, text: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text)?;
            Ok(())
        }
    }
}

fn emit_json<S: Serialize>(out: Option<&Path>, value: &S) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(out, s.as_bytes())
}

fn emit_csv<S: Serialize>(out: Option<&Path>, rows: &[S]) -> Result<()> {
    match out {
        Some(p) => write_csv(File::create(p).with_context(|| format!("writing {}", p.display()))?, rows)?,
        None => write_csv(io::stdout().lock(), rows)?,
    }
    Ok(())
}

/// Manifest goes next to the output file, or to stderr.
fn emit_manifest(out: Option<&Path>, mut manifest: RunManifest, start: Instant) -> Result<()> {
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    match out {
        Some(p) => {
            let mut name = p.as_os_str().to_owned();
            name.push(".manifest.json");
            std::fs::write(&name, text).with_context(|| format!("writing {}", PathBuf::from(&name).display()))
        }
        None => {
            io::stderr().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct PathCheckRow {
    theta: f64,
    gate_residuals: Vec<f64>,
    max_residual: f64,
    /// `C_k(0) == C_k` for every gate, at `theta = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    endpoint_equals_worst: Option<bool>,
    /// `C_k(1) == C_k H_k` for every gate, at `theta = 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    endpoint_product_form: Option<bool>,
}

#[derive(Serialize)]
struct PathCheckReport {
    rows: Vec<PathCheckRow>,
    tolerance: f64,
    all_residuals_below_tolerance: bool,
}

const PATH_TOL: f64 = 1e-10;

fn path_check(circuit: &Path, thetas: &[f64], seed: u64, out: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let file = CircuitFile::load(circuit)?;
    let c = file.build_circuit::<f64>(seed, DEFAULT_BRANCH_GUARD)?;
    let rows: Vec<PathCheckRow> = thetas
        .iter()
        .map(|&th| {
            let gates = c.gates_at(&th);
            let gate_residuals: Vec<f64> = gates.iter().map(unitarity_residual).collect();
            let endpoint = |target: &dyn Fn(usize) -> cayley_core::linalg::Matrix<f64>| {
                gates.iter().enumerate().all(|(k, g)| g.max_abs_diff(&target(k)) < PATH_TOL)
            };
            PathCheckRow {
                theta: th,
                max_residual: gate_residuals.iter().copied().fold(0.0, f64::max),
                gate_residuals,
                endpoint_equals_worst: (th == 0.0).then(|| endpoint(&|k| c.gates()[k].worst_gate().clone())),
                endpoint_product_form: (th == 1.0)
                    .then(|| endpoint(&|k| c.gates()[k].worst_gate().matmul(c.gates()[k].companion()))),
            }
        })
        .collect();
    let ok = rows.iter().all(|r| r.max_residual < PATH_TOL);
    emit_json(out, &PathCheckReport { rows, tolerance: PATH_TOL, all_residuals_below_tolerance: ok })?;
    let manifest = RunManifest::new(
        "path-check",
        serde_json::json!({ "circuit": circuit, "thetas": thetas }),
        vec![seed],
        backend_name::<f64>(),
        53,
    );
    emit_manifest(out, manifest, start)
}

fn run_reduce_at<T: Real + Field>(
    file: &CircuitFile,
    config: &ReductionConfig,
    model: &OracleModel,
) -> Result<std::result::Result<ReductionReport, Error>> {
    let circuit = file.build_circuit::<T>(config.seed, DEFAULT_BRANCH_GUARD)?;
    match run_reduction(&circuit, config, model) {
        Ok(r) => Ok(Ok(r)),
        Err(e @ (Error::DecodeFailed(_) | Error::PrecisionInsufficient(_))) => Ok(Err(e)),
        Err(e) => Err(e.into()),
    }
}

fn reduce(args: &ReduceArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let file = CircuitFile::load(&args.circuit)?;
    let config = ReductionConfig {
        delta: args.delta,
        points: args.points,
        t: args.t,
        grid: match args.grid {
            GridArg::Spaced => GridKind::UniformSpaced,
            GridArg::Random => GridKind::UniformRandom,
        },
        precision_bits: args.precision_bits,
        degree_mode: match args.mode {
            ModeArg::Polynomial => DegreeMode::Polynomial,
            ModeArg::Rational => DegreeMode::Rational,
        },
        seed: args.seed,
        rel_tol: args.rel_tol,
        repetitions: args.repetitions,
    };
    let model = match args.model {
        ModelArg::Exact => OracleModel::exact().with_seed(args.seed),
        ModelArg::Corrupt => OracleModel::corrupt(args.frac, args.seed),
        ModelArg::Noise => OracleModel::additive_noise(args.eps, args.seed),
        ModelArg::CorruptNoise => OracleModel::corrupt_and_noise(args.frac, args.eps, args.seed),
    };
    model.validate()?;
    config.validate(file.architecture()?.degree_sum())?;
    let outcome = match args.precision_bits {
        53 => run_reduce_at::<f64>(&file, &config, &model)?,
        128 => run_reduce_at::<F128>(&file, &config, &model)?,
        256 => run_reduce_at::<F256>(&file, &config, &model)?,
        512 => run_reduce_at::<F512>(&file, &config, &model)?,
        1024 => run_reduce_at::<F1024>(&file, &config, &model)?,
        other => bail!("unsupported precision {other} bits; use 53, 128, 256, 512 or 1024"),
    };
    let (report, code) = match outcome {
        Ok(r) => (r, 0),
        Err(Error::DecodeFailed(r)) => (*r, 2),
        Err(Error::PrecisionInsufficient(r)) => (*r, 3),
        Err(e) => return Err(e.into()),
    };
    if code != 0 {
        eprintln!("{:?}: {}", report.decode_status, report.decode_detail);
    }
    emit_json(args.out.as_deref(), &report)?;
    if let Some(p) = &args.samples_out {
        emit_csv(Some(p), &report.samples)?;
    }
    let manifest = RunManifest::new(
        "reduce",
        serde_json::json!({ "circuit": args.circuit, "config": config, "model": model }),
        vec![args.seed],
        report.backend.clone(),
        args.precision_bits,
    );
    emit_manifest(args.out.as_deref(), manifest, start)?;
    Ok(ExitCode::from(code))
}

#[derive(Serialize)]
struct BoundsReport {
    m: usize,
    n: usize,
    delta: f64,
    eps: f64,
    d: usize,
    paturi: Bound,
    robustness: Bound,
    robustness_threshold: Bound,
    note: &'static str,
}

#[derive(Serialize)]
struct TruncationCsvRow {
    theta: f64,
    order: usize,
    max_gate_residual: f64,
    max_matrix_residual: f64,
    truncated_p0: f64,
    geodesic_p0: f64,
    amplitude_deviation: f64,
    endpoint_deviation: Option<f64>,
    truncated_degree: usize,
    cayley_degree: usize,
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let start = Instant::now();
    match cli.command {
        Command::HaarSample { dim, count, seed, out } => {
            haar_sample_file(dim, count, seed)?.save(&out)?;
            let manifest = RunManifest::new(
                "haar-sample",
                serde_json::json!({ "N": dim, "count": count }),
                vec![seed],
                backend_name::<f64>(),
                53,
            );
            emit_manifest(Some(&out), manifest, start)?;
        }
        Command::PathCheck { circuit, thetas, seed, out } => path_check(&circuit, &thetas, seed, out.as_deref())?,
        Command::Reduce(args) => return reduce(&args),
        Command::Tvd { dim, deltas, samples, seed, both_sides, out } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = Vec::new();
            for &delta in &deltas {
                let sides: &[f64] = if both_sides { &[-1.0, 1.0] } else { &[-1.0] };
                for s in sides {
                    let theta = 1.0 + s * delta;
                    let e = estimate_tvd(dim, theta, samples, &mut rng)?;
                    rows.push(TvdRow { delta, theta, tvd: e.value, std_error: e.std_error, samples: e.samples });
                }
            }
            emit_csv(out.as_deref(), &rows)?;
            let manifest = RunManifest::new(
                "tvd",
                serde_json::json!({ "N": dim, "deltas": deltas, "samples": samples, "both_sides": both_sides }),
                vec![seed],
                backend_name::<f64>(),
                53,
            );
            emit_manifest(out.as_deref(), manifest, start)?;
        }
        Command::Bounds { m, delta, eps, d, n, out } => {
            if !(delta > 0.0) || !(eps >= 0.0) || m == 0 {
                bail!("bounds need m >= 1, delta > 0 and eps >= 0");
            }
            let d = d.unwrap_or(16 * m);
            let report = BoundsReport {
                m,
                n,
                delta,
                eps,
                d,
                paturi: paturi_bound(d, delta, eps),
                robustness: robustness_bound(m, delta, eps),
                robustness_threshold: robustness_threshold(n, m, delta),
                note: ROBUSTNESS_NOTE,
            };
            emit_json(out.as_deref(), &report)?;
            let manifest = RunManifest::new(
                "bounds",
                serde_json::json!({ "m": m, "n": n, "delta": delta, "eps": eps, "d": d }),
                Vec::new(),
                backend_name::<f64>(),
                53,
            );
            emit_manifest(out.as_deref(), manifest, start)?;
        }
        Command::Truncate { circuit, order, thetas, seed, out } => {
            let c = CircuitFile::load(&circuit)?.build_circuit::<f64>(seed, DEFAULT_BRANCH_GUARD)?;
            let report = truncation_experiment(&c, &thetas, order)?;
            let rows: Vec<TruncationCsvRow> = report
                .rows
                .iter()
                .map(|r| TruncationCsvRow {
                    theta: r.theta,
                    order,
                    max_gate_residual: r.gate_residuals.iter().copied().fold(0.0, f64::max),
                    max_matrix_residual: r.gate_matrix_residuals.iter().copied().fold(0.0, f64::max),
                    truncated_p0: r.truncated_p0,
                    geodesic_p0: r.geodesic_p0,
                    amplitude_deviation: r.amplitude_deviation,
                    endpoint_deviation: r.endpoint_deviation,
                    truncated_degree: report.truncated_degree,
                    cayley_degree: report.cayley_degree,
                })
                .collect();
            emit_csv(out.as_deref(), &rows)?;
            let manifest = RunManifest::new(
                "truncate",
                serde_json::json!({ "circuit": circuit, "K": order, "thetas": thetas }),
                vec![seed],
                backend_name::<f64>(),
                53,
            );
            emit_manifest(out.as_deref(), manifest, start)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
