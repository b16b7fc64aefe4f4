use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use dwmd::csvio::{load_csv, write_dataset};
use dwmd::experiment::{run_experiment, run_sweep, SweepParam, UdaExperiment};
use dwmd::metric::{compute, render_text, Metric, MetricOptions};
use dwmd::{gen_gaussian_shift, gen_moons, write_report, write_sweep, DomainPair};
use dwmd_core::discrepancy::{Bandwidth, DwmdConfig, IntervalWidth};
use dwmd_core::CPolicy;

/// Moment discrepancies between feature sets, and domain-adaptation
/// experiments regularized by them.
#[derive(Parser, Debug)]
#[command(name = "dwmd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discrepancy between two CSV feature tables.
    Discrepancy(DiscrepancyArgs),
    /// Run an experiment config and write its report directory.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Report directory [default: `output` from the config, else `report`].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment once per value of one hyperparameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "c")]
        param: SweepParam,
        /// Comma-separated values [default for c: 0.01,0.03,0.05,0.07,0.1,0.5,1].
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Write a synthetic task as source.csv and target.csv.
    Gen {
        #[command(subcommand)]
        task: GenTask,
    },
}

#[derive(Subcommand, Debug)]
enum GenTask {
    /// Two moons; the target is rotated.
    Moons {
        /// Points per domain (even, at least 40).
        #[arg(long, default_value_t = 200)]
        m: usize,
        /// Target rotation in degrees, in [0, 90].
        #[arg(long, default_value_t = 40.0)]
        rotation: f64,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Two Gaussian classes; target is `scale * x + offset` per dimension.
    Gaussian {
        #[arg(long, default_value_t = 1000)]
        m: usize,
        /// Comma-separated per-dimension offset; its length sets the dimension.
        #[arg(long, value_delimiter = ',', required = true)]
        offset: Vec<f64>,
        /// Comma-separated per-dimension scale [default: all ones].
        #[arg(long, value_delimiter = ',')]
        scale: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum CPolicyArg {
    /// The constant given by --c.
    Scalar,
    /// The first entry of the raw gap vector.
    TauFirst,
    /// The raw gap vector, per dimension.
    TauVector,
}

#[derive(clap::Args, Debug)]
struct DiscrepancyArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long, value_enum, default_value = "dwmd")]
    metric: Metric,
    /// Column to drop from both files before comparing, such as a label.
    #[arg(long)]
    ignore_column: Option<String>,
    /// Highest moment order.
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Decay rate of the order weights.
    #[arg(long, default_value_t = 1.0)]
    psi: f64,
    /// Exponent on the moment gaps, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Saturation constant for --c-policy scalar.
    #[arg(long, default_value_t = 0.05)]
    c: f64,
    #[arg(long, value_enum, default_value = "scalar")]
    c_policy: CPolicyArg,
    /// Fraction of points trimmed from each dimension before the robust means, in [0, 0.5).
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Standardize both sets with pooled per-dimension mean and std first.
    #[arg(long)]
    standardize: bool,
    /// MMD kernel width: `median` or a positive number.
    #[arg(long, default_value = "median", value_parser = parse_bandwidth)]
    bandwidth: Bandwidth,
    /// CMD interval width: `pooled-range`, `unit` or a positive number.
    #[arg(long, default_value = "pooled-range", value_parser = parse_width)]
    cmd_width: IntervalWidth,
    /// Print the full report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    if s == "median" {
        return Ok(Bandwidth::MedianHeuristic);
    }
    match s.parse::<f64>() {
        Ok(sigma) if sigma > 0.0 && sigma.is_finite() => Ok(Bandwidth::Fixed { sigma }),
        _ => Err(format!("`{s}` is neither `median` nor a positive number")),
    }
}

fn parse_width(s: &str) -> Result<IntervalWidth, String> {
    match s {
        "pooled-range" => Ok(IntervalWidth::PooledRange),
        "unit" => Ok(IntervalWidth::Unit),
        _ => match s.parse::<f64>() {
            Ok(width) if width > 0.0 && width.is_finite() => Ok(IntervalWidth::Fixed { width }),
            _ => Err(format!("`{s}` is not `pooled-range`, `unit` or a positive number")),
        },
    }
}

fn discrepancy(args: DiscrepancyArgs) -> anyhow::Result<()> {
    let load = |p: &Path| -> anyhow::Result<dwmd_core::SampleMatrix> {
        let features = match &args.ignore_column {
            Some(col) => load_csv(p, Some(col)),
            None => load_csv(p, None),
        };
        Ok(features?.samples)
    };
    let source = load(&args.source)?;
    let target = load(&args.target)?;
    let c_policy = match args.c_policy {
        CPolicyArg::Scalar => CPolicy::Scalar { value: args.c },
        CPolicyArg::TauFirst => CPolicy::TauFirst,
        CPolicyArg::TauVector => CPolicy::TauVector,
    };
    let opts = MetricOptions {
        dwmd: DwmdConfig {
            n: args.n,
            psi: args.psi,
            beta: args.beta,
            c_policy,
            alpha: args.alpha,
            standardize: args.standardize,
        },
        cmd_width: args.cmd_width,
        bandwidth: args.bandwidth,
    };
    let out = compute(args.metric, &source, &target, &opts)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        print!("{}", render_text(&out));
    }
    Ok(())
}

fn write_pair(pair: &DomainPair, dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_dataset(&dir.join("source.csv"), &pair.source)?;
    write_dataset(&dir.join("target.csv"), &pair.target)?;
    println!("wrote {} and {}", dir.join("source.csv").display(), dir.join("target.csv").display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Discrepancy(args) => discrepancy(args),
        Command::Train { config, out } => {
            let exp = UdaExperiment::load(&config)?;
            let dir = out.or_else(|| exp.output.clone()).unwrap_or_else(|| PathBuf::from("report"));
            let report = run_experiment(&exp)?;
            write_report(&report, &dir)?;
            for s in &report.seeds {
                match &s.outcome {
                    Ok(r) => println!("seed {} accuracy {}", s.seed, r.target_accuracy),
                    Err(e) => println!("seed {} failed: {e}", s.seed),
                }
            }
            println!("mean {} std {}", report.mean_accuracy, report.std_accuracy);
            Ok(())
        }
        Command::Sweep { config, param, values, out } => {
            let exp = UdaExperiment::load(&config)?;
            let values = if values.is_empty() {
                match param.default_values() {
                    Some(v) => v,
                    None => bail!("--values is required when sweeping {}", param.name()),
                }
            } else {
                values
            };
            let points = run_sweep(&exp, param, &values)?;
            write_sweep(&points, param.name(), &out)?;
            for p in &points {
                println!("{} {} mean {} std {}", param.name(), p.value, p.report.mean_accuracy, p.report.std_accuracy);
            }
            Ok(())
        }
        Command::Gen { task } => match task {
            GenTask::Moons { m, rotation, noise, seed, out } => write_pair(&gen_moons(m, rotation, noise, seed)?, &out),
            GenTask::Gaussian { m, offset, scale, seed, out } => {
                let scale = if scale.is_empty() { vec![1.0; offset.len()] } else { scale };
                write_pair(&gen_gaussian_shift(m, &offset, &scale, seed)?, &out)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
