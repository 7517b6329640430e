use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use brownian_bench::config::ConfigFile;
use brownian_bench::experiments::{run_finite_time_1d, run_longtime_1d, run_lj_rdf, run_ou_verify};
use brownian_bench::output::{fit_rows, read_results_csv, write_fits_csv};
use brownian_bench::{emit_results, ExperimentOutput, Scale};

/// Weak-convergence benchmarks for overdamped Langevin integrators.
#[derive(Debug, Parser)]
#[command(name = "bdbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file; sections missing from it fall back to the scale's defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Built-in size preset.
    #[arg(long, global = true, value_enum)]
    scale: Option<Scale>,

    /// Overrides the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,

    /// Worker threads (defaults to all cores); never changes the results.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ornstein-Uhlenbeck ensemble moments against closed forms.
    OuVerify,
    /// Long-time distribution error on the cosine potential.
    #[command(name = "longtime-1d")]
    Longtime1d,
    /// Finite-time distribution error on the cosine potential.
    #[command(name = "finite-time-1d")]
    FiniteTime1d,
    /// Radial distribution function error for the Lennard-Jones box.
    LjRdf,
    /// Fits log-log slopes of every metric in a results CSV.
    FitOrder {
        /// Results CSV written by one of the experiments.
        results: PathBuf,
        /// Metrics to fit (default: all).
        #[arg(long)]
        metric: Vec<String>,
    },
}

fn load_config(cli: &Cli) -> Result<ConfigFile> {
    let file = match &cli.config {
        Some(p) => Some(ConfigFile::load(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let scale = cli
        .scale
        .or(file.as_ref().and_then(|f| f.scale))
        .unwrap_or(Scale::Desk);
    let defaults = ConfigFile::builtin(scale);
    let file = file.unwrap_or_default();
    Ok(ConfigFile {
        scale: Some(scale),
        ou_verify: file.ou_verify.or(defaults.ou_verify),
        longtime_1d: file.longtime_1d.or(defaults.longtime_1d),
        finite_time_1d: file.finite_time_1d.or(defaults.finite_time_1d),
        lj_rdf: file.lj_rdf.or(defaults.lj_rdf),
    })
}

fn run(cli: &Cli) -> Result<()> {
    if let Command::FitOrder { results, metric } = &cli.command {
        let rows = read_results_csv(results)?;
        let metrics: Vec<&str> = if metric.is_empty() {
            let mut m: Vec<&str> = rows.iter().map(|r| r.metric.as_str()).collect();
            m.dedup();
            m.sort_unstable();
            m.dedup();
            m
        } else {
            metric.iter().map(String::as_str).collect()
        };
        let fits = fit_rows(&rows, &metrics);
        std::fs::create_dir_all(&cli.out)?;
        let stem = results
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "results".into());
        let path = cli.out.join(format!("{stem}.refit.csv"));
        write_fits_csv(&fits, &path)?;
        for f in &fits {
            let time = f.time.map(|t| format!(" t={t}")).unwrap_or_default();
            println!(
                "{} {}{} {}: slope {:.4} (r^2 {:.4}, {} points)",
                f.experiment, f.scheme, time, f.metric, f.slope, f.r_squared, f.points
            );
        }
        println!("wrote {}", path.display());
        return Ok(());
    }

    let mut cfg = load_config(cli)?;
    let output: ExperimentOutput = match cli.command {
        Command::OuVerify => {
            let mut c = cfg.ou_verify.take().expect("defaults present");
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            run_ou_verify(&c)?
        }
        Command::Longtime1d => {
            let mut c = cfg.longtime_1d.take().expect("defaults present");
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            run_longtime_1d(&c)?
        }
        Command::FiniteTime1d => {
            let mut c = cfg.finite_time_1d.take().expect("defaults present");
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            run_finite_time_1d(&c)?
        }
        Command::LjRdf => {
            let mut c = cfg.lj_rdf.take().expect("defaults present");
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            run_lj_rdf(&c)?
        }
        Command::FitOrder { .. } => unreachable!(),
    };
    let path = emit_results(&output, &cli.out)?;
    for f in &output.fits {
        let time = f.time.map(|t| format!(" t={t}")).unwrap_or_default();
        println!("{}{} {}: slope {:.4}", f.scheme, time, f.metric, f.slope);
    }
    println!("wrote {} ({} rows)", path.display(), output.rows.len());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    run(&cli)
}
