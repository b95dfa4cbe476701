//! Command-line front end: stream generation, one-pass sketching, merge,
//! estimation, the brute-force oracle, and the CSV experiment harnesses.
//!
//! Exit codes: 0 on success, 2 for usage errors (clap), 3 for domain,
//! numeric, and I/O failures.

use clap::{Parser, Subcommand, ValueEnum};
use skewsketch::error::Error;
use skewsketch::estimators::Method;
use skewsketch::experiment::{
    bounds_csv, bounds_table_alpha, bounds_table_delta, experiment_csv, fmt_g, tails_experiment,
    variance_experiment,
};
use skewsketch::sketch::SkewedSketch;
use skewsketch::stream::{
    exact_moment, generate_stream, parse_stream, write_stream, GenConfig, GenDistribution,
    UpdateReader,
};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "skewsketch",
    version,
    about = "Frequency moments of Turnstile streams via skewed stable projections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableMode {
    /// Tabulate over a grid of moment indices.
    Alpha,
    /// Tabulate over offsets from alpha = 1 with the near-one approximation.
    Delta,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic Turnstile stream file.
    Gen {
        /// Index domain size.
        #[arg(long, default_value_t = 10_000)]
        domain: u64,
        /// Number of updates to emit.
        #[arg(long, default_value_t = 100_000)]
        updates: u64,
        /// Index distribution: `uniform` or `zipf:<s>`.
        #[arg(long, default_value = "zipf:1.1", value_parser = GenDistribution::from_str)]
        dist: GenDistribution,
        /// Probability that an update deletes mass from a live index.
        #[arg(long, default_value_t = 0.0)]
        deletion_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a sketch from a stream file in one pass.
    Sketch {
        /// Stream file; stdin when omitted.
        input: Option<PathBuf>,
        /// Moment index in (0, 2], not 1.
        #[arg(long)]
        alpha: f64,
        /// Number of projections.
        #[arg(long, default_value_t = 100)]
        k: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accumulate with compensated summation.
        #[arg(long)]
        compensated: bool,
        /// Sketch output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge sketches built with identical (alpha, k, seed).
    Merge {
        /// Sketch files to combine.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Merged sketch output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the frequency moment from a sketch file.
    Estimate {
        /// Sketch file.
        input: PathBuf,
        #[arg(long, default_value = "gm", value_parser = Method::from_str)]
        method: Method,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact brute-force moment of a stream file.
    Exact {
        /// Stream file; stdin when omitted.
        input: Option<PathBuf>,
        /// Moment index in (0, 2]; alpha = 1 is allowed here.
        #[arg(long)]
        alpha: f64,
    },
    /// Monte Carlo variance factors against theory, as CSV.
    ExperimentVariance {
        /// Moment index; repeat for a grid.
        #[arg(long = "alpha", required = true)]
        alpha: Vec<f64>,
        /// Also run the general-skewness geometric mean at this beta.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 100)]
        k: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo tail frequencies against the Chernoff bounds, as CSV.
    ExperimentTails {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "gm", value_parser = Method::from_str)]
        method: Method,
        /// Relative error; repeat for a grid.
        #[arg(long = "epsilon", required = true)]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        k: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Normalizer size for the geometric-means left bound; defaults to k.
        #[arg(long)]
        k0: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate sample-size constants G = eps^2 / rate, as CSV.
    BoundsTable {
        #[arg(long, value_enum, default_value_t = TableMode::Alpha)]
        mode: TableMode,
        /// Moment index grid (alpha mode).
        #[arg(long = "alpha")]
        alpha: Vec<f64>,
        /// Offset grid from alpha = 1 (delta mode).
        #[arg(long = "delta")]
        delta: Vec<f64>,
        /// Relative error; repeat for a grid.
        #[arg(long = "epsilon", required = true)]
        epsilon: Vec<f64>,
        #[arg(long, default_value = "gm", value_parser = Method::from_str)]
        method: Method,
        /// Two-sided confidence target; adds the sample-size column.
        #[arg(long)]
        delta_prob: Option<f64>,
        /// Finite normalizer size for the geometric-means left bound.
        #[arg(long)]
        k0: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// IO errors leaving this binary name the file they concern.
fn name_path<T>(r: skewsketch::Result<T>, path: &Path) -> skewsketch::Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => {
            Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display())))
        }
        other => other,
    })
}

fn open_input(path: Option<&Path>) -> io::Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(
            File::open(p).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn write_output(path: Option<&Path>, content: &str) -> skewsketch::Result<()> {
    match path {
        Some(p) => name_path(std::fs::write(p, content).map_err(Error::from), p)?,
        None => io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> skewsketch::Result<()> {
    match cli.command {
        Command::Gen {
            domain,
            updates,
            dist,
            deletion_fraction,
            seed,
            out,
        } => {
            let stream = generate_stream(&GenConfig {
                domain,
                updates,
                dist,
                deletion_fraction,
                seed,
            })?;
            let mut text = Vec::new();
            write_stream(&mut text, &stream)?;
            write_output(
                out.as_deref(),
                std::str::from_utf8(&text).expect("ascii stream text"),
            )
        }
        Command::Sketch {
            input,
            alpha,
            k,
            seed,
            compensated,
            out,
        } => {
            let mut sketch = SkewedSketch::new(alpha, k, seed)?;
            if compensated {
                sketch = sketch.with_compensated_summation();
            }
            for update in UpdateReader::new(open_input(input.as_deref())?) {
                sketch.update(update?)?;
            }
            name_path(sketch.save(&out), &out)
        }
        Command::Merge { inputs, out } => {
            let mut merged = name_path(SkewedSketch::load(&inputs[0]), &inputs[0])?;
            for path in &inputs[1..] {
                merged.merge_from(&name_path(SkewedSketch::load(path), path)?)?;
            }
            name_path(merged.save(&out), &out)
        }
        Command::Estimate { input, method, out } => {
            let report = name_path(SkewedSketch::load(&input), &input)?.estimate(method)?;
            let csv = format!(
                "estimate,method,alpha,k,asymptotic_variance_factor,degenerate\n{},{},{},{},{},{}\n",
                fmt_g(report.estimate),
                report.method,
                fmt_g(report.alpha),
                report.k,
                fmt_g(report.asymptotic_variance_factor),
                report.degenerate,
            );
            write_output(out.as_deref(), &csv)
        }
        Command::Exact { input, alpha } => {
            let updates = parse_stream(open_input(input.as_deref())?)?;
            let moment = exact_moment(&updates, alpha)?;
            write_output(None, &format!("{}\n", fmt_g(moment)))
        }
        Command::ExperimentVariance {
            alpha,
            beta,
            k,
            trials,
            seed,
            out,
        } => {
            let rows = variance_experiment(&alpha, beta, k, trials, seed)?;
            write_output(out.as_deref(), &experiment_csv(&rows))
        }
        Command::ExperimentTails {
            alpha,
            method,
            epsilon,
            k,
            trials,
            seed,
            k0,
            out,
        } => {
            let rows = tails_experiment(alpha, method, &epsilon, k, trials, seed, k0)?;
            write_output(out.as_deref(), &experiment_csv(&rows))
        }
        Command::BoundsTable {
            mode,
            alpha,
            delta,
            epsilon,
            method,
            delta_prob,
            k0,
            out,
        } => {
            let rows = match mode {
                TableMode::Alpha => {
                    if !delta.is_empty() {
                        return Err(Error::Config(
                            "--delta applies to delta mode; use --alpha here".into(),
                        ));
                    }
                    bounds_table_alpha(&alpha, &epsilon, method, delta_prob, k0)?
                }
                TableMode::Delta => {
                    if !alpha.is_empty() {
                        return Err(Error::Config(
                            "--alpha applies to alpha mode; use --delta here".into(),
                        ));
                    }
                    if k0.is_some() {
                        return Err(Error::Config(
                            "the near-one table is right-tail only; --k0 has no effect".into(),
                        ));
                    }
                    bounds_table_delta(&delta, &epsilon, method, delta_prob)?
                }
            };
            write_output(out.as_deref(), &bounds_csv(&rows, delta_prob.is_some()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
