use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use bergman_gaf::config::{parse_config, parse_tool_config, RunConfig};
use bergman_gaf::experiments::{stream_ids, ExperimentKind, Runner};
use bergman_gaf::gaf::sample_gaf;
use bergman_gaf::geometry::Point;
use bergman_gaf::run::{cache_for, run, with_workers, EXIT_ERROR};
use bergman_gaf::zeros::find_zeros;
use bergman_gaf::{Error, Result};

#[derive(Parser)]
#[command(name = "gaf", version, about = "Weighted Bergman kernels and Gaussian analytic functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load from the cache) the orthonormal basis for each n and print a summary.
    Basis(Common),
    /// Evaluate B_n(z, z), S_n(z) and u_n(z) at the given points.
    Kernel {
        #[command(flatten)]
        common: Common,
        /// Points as `re,im` (disk) or `re,im,re,im` (bidisc); repeatable.
        #[arg(long = "at", required = true, allow_hyphen_values = true)]
        at: Vec<String>,
    },
    /// Draw one GAF and print its coefficients.
    Sample(SampleArgs),
    /// Draw one GAF and write its zeros in K as CSV.
    Zeros(SampleArgs),
    /// Sandwich bounds for the Bergman envelope u_n.
    Sandwich(Common),
    /// Pointwise convergence of (1/n) log|f_n|.
    Pointwise(Common),
    /// L¹(K) convergence of (1/n) log|f_n|.
    L1(Common),
    /// Tail probabilities of ball averages.
    Tails(Common),
    /// Empirical zero density against the predicted density.
    ZeroDensity(Common),
    /// Emit one explicit polynomial per n with its L¹ error.
    Horcor(Common),
    /// sup_K |f| / ‖f‖_{L²(ω)} over samples and basis functions.
    SupL2(Common),
    /// Covariance of f against the kernel and the law of |f|² / S_n².
    Covariance(Common),
    /// Mean squared L²(K) norm against the sum of basis norms.
    TailVariance(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config file with flat dotted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline override `key=value`; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Clone)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    /// Degree parameter n; defaults to the last entry of the n list.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

impl Common {
    fn resolve(&self, experiment: Option<ExperimentKind>) -> Result<RunConfig> {
        let mut rc = match experiment {
            Some(kind) => parse_config(self.config.as_deref(), &self.set, Some(kind))?,
            None => parse_tool_config(self.config.as_deref(), &self.set, ExperimentKind::L1)?,
        };
        if let Some(s) = self.seed {
            rc.config.seed = s;
        }
        if let Some(t) = self.trials {
            rc.config.trials = t;
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(Error::Config("workers: must be >= 1".into()));
            }
            rc.workers = Some(w);
        }
        if let Some(o) = &self.out {
            rc.output_dir = o.clone();
        }
        rc.verbosity = rc.verbosity.max(self.verbose);
        rc.config.validate()?;
        init_logging(rc.verbosity);
        Ok(rc)
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
}

fn parse_point(text: &str, dim: usize) -> Result<Point> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("--at {text}: {e}"))))
        .collect::<Result<_>>()?;
    match (dim, parts.as_slice()) {
        (1, [re, im]) => Ok(Point::one(Complex64::new(*re, *im))),
        (2, [a, b, c, d]) => Ok(Point::two(Complex64::new(*a, *b), Complex64::new(*c, *d))),
        _ => Err(Error::Config(format!("--at {text}: expected {} comma-separated numbers", 2 * dim))),
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn basis_command(common: &Common) -> Result<i32> {
    let rc = common.resolve(None)?;
    let cache = cache_for(&rc);
    let rows = with_workers(rc.workers, || -> Result<Vec<serde_json::Value>> {
        rc.config
            .n
            .iter()
            .map(|&n| {
                let request = rc.config.basis_request(n);
                let (built, outcome) = cache.get_or_build(&request)?;
                let b = &built.basis;
                Ok(json!({
                    "n": n,
                    "degree": b.degree(),
                    "dim": b.dim(),
                    "orthonormality_residual": b.residual(),
                    "condition": b.condition(),
                    "truncation": built.truncation,
                    "hash": request.hash(),
                    "cache": format!("{outcome:?}").to_lowercase(),
                    "path": cache.path_for(&request.hash()),
                }))
            })
            .collect()
    })??;
    print_json(&serde_json::Value::Array(rows))?;
    Ok(0)
}

fn kernel_command(common: &Common, at: &[String]) -> Result<i32> {
    let rc = common.resolve(None)?;
    let dim = rc.config.domain.dim();
    let points: Vec<Point> = at.iter().map(|s| parse_point(s, dim)).collect::<Result<_>>()?;
    let runner = with_workers(rc.workers, || Runner::with_cache(cache_for(&rc)))?;
    let mut rows = Vec::new();
    for &n in &rc.config.n {
        let (basis, _) = with_workers(rc.workers, || runner.basis(&rc.config, n))??;
        let mut ev = basis.evaluator();
        for z in &points {
            if !rc.config.domain.contains(z, 0.0) {
                return Err(Error::OutsideDomain { point: z.to_string() });
            }
            let log_b = ev.log_kernel_diag(z);
            rows.push(json!({
                "n": n,
                "z": z,
                "kernel_diag": log_b.exp(),
                "log_kernel_diag": log_b,
                "s_n": (0.5 * log_b).exp(),
                "u_n": ev.demailly_envelope(z),
                "u": rc.config.weight.value(z),
            }));
        }
    }
    print_json(&serde_json::Value::Array(rows))?;
    Ok(0)
}

fn sample_command(args: &SampleArgs, zeros: bool) -> Result<i32> {
    let rc = args.common.resolve(None)?;
    let n = args.n.unwrap_or(*rc.config.n.last().expect("validated n list"));
    let runner = with_workers(rc.workers, || Runner::with_cache(cache_for(&rc)))?;
    let (basis, _) = with_workers(rc.workers, || runner.basis(&rc.config, n))??;
    let experiment = if zeros { stream_ids::ZEROS } else { stream_ids::SAMPLE };
    let sample = sample_gaf(&basis, rc.config.stream(experiment, n, args.trial));
    if zeros {
        let set = find_zeros(&sample, &rc.config.compact)?;
        let csv = set.to_csv();
        match &args.common.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("zeros.csv"), csv)?;
            }
            None => print!("{csv}"),
        }
        return Ok(0);
    }
    let value = json!({
        "n": n,
        "seed": rc.config.seed,
        "stream": experiment,
        "trial": args.trial,
        "exponents": basis.monomials().exponents(),
        "monomial_coefficients": sample.monomial_coefficients().iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        "basis_coefficients": sample.coefficients().iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
    });
    match &args.common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("sample.json"), serde_json::to_string_pretty(&value)?)?;
        }
        None => print_json(&value)?,
    }
    Ok(0)
}

fn experiment_command(common: &Common, kind: ExperimentKind) -> Result<i32> {
    let rc = common.resolve(Some(kind))?;
    let outcome = run(&rc)?;
    let r = &outcome.report;
    println!(
        "{}: {} ({} rows) -> {}",
        r.experiment,
        if r.passed { "PASS" } else { "FAIL" },
        r.rows.len(),
        rc.output_dir.display()
    );
    for note in &r.notes {
        println!("note: {note}");
    }
    Ok(outcome.exit_code())
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Basis(c) => basis_command(&c),
        Command::Kernel { common, at } => kernel_command(&common, &at),
        Command::Sample(a) => sample_command(&a, false),
        Command::Zeros(a) => sample_command(&a, true),
        Command::Sandwich(c) => experiment_command(&c, ExperimentKind::Sandwich),
        Command::Pointwise(c) => experiment_command(&c, ExperimentKind::Pointwise),
        Command::L1(c) => experiment_command(&c, ExperimentKind::L1),
        Command::Tails(c) => experiment_command(&c, ExperimentKind::Tails),
        Command::ZeroDensity(c) => experiment_command(&c, ExperimentKind::ZeroDensity),
        Command::Horcor(c) => experiment_command(&c, ExperimentKind::Horcor),
        Command::SupL2(c) => experiment_command(&c, ExperimentKind::SupL2),
        Command::Covariance(c) => experiment_command(&c, ExperimentKind::Covariance),
        Command::TailVariance(c) => experiment_command(&c, ExperimentKind::TailVariance),
    }
}

fn main() -> ExitCode {
    // usage errors exit 1, keeping 2 for a failed predicate
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
