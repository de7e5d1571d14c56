//! Command-line front end for the quantile inference workflows.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use bayes_quantile::experiments::config::{RunConfig, Workflow};
use bayes_quantile::experiments::workflows::{run, RunOutput};

#[derive(Debug, Parser)]
#[command(
    name = "bquant",
    version,
    about = "Bayesian inference for quantiles on a discrete support"
)]
struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration. Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact posterior of the quantile for each group separately.
    Single(DataArgs),
    /// Hierarchical fit without censoring.
    Hier(HierArgs),
    /// Hierarchical fit with right-censored scores.
    Censored(HierArgs),
    /// Monte Carlo comparison of quantile estimators.
    Mc(McArgs),
    /// One hierarchical fit per level, written as quantile functions.
    QuantileFunction(QuantileFunctionArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Score file with header group_id,score,censored.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Quantile level in (0, 1).
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Debug, Args)]
struct GibbsArgs {
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    kept: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Update subpopulations on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct HierArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    gibbs: GibbsArgs,
}

#[derive(Debug, Args)]
struct QuantileFunctionArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated quantile levels.
    #[arg(long, value_delimiter = ',')]
    tau_grid: Option<Vec<f64>>,
    #[command(flatten)]
    gibbs: GibbsArgs,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long)]
    tau: Option<f64>,
    /// Sample size per replication.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    /// Comma-separated subset of clt, boot, discrete, data.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Prior centre offset above the true quantile.
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<f64>,
    #[arg(long)]
    bootstrap_resamples: Option<usize>,
    /// Run replications on one thread.
    #[arg(long)]
    sequential: bool,
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl GibbsArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.gibbs.burn_in, self.burn_in);
        set(&mut cfg.gibbs.kept, self.kept);
        set(&mut cfg.gibbs.thin, self.thin);
        cfg.gibbs.sequential |= self.sequential;
    }
}

impl DataArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.data, self.data);
        set(&mut cfg.tau, self.tau);
    }
}

/// Loads the config file, if any, and applies command-line overrides.
fn resolve(cli: Cli) -> Result<(Workflow, RunConfig)> {
    let mut cfg = match &cli.config {
        Some(path) => {
            RunConfig::load(path).with_context(|| format!("reading config {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.out, cli.out);
    let workflow = match cli.command {
        Command::Single(a) => {
            a.apply(&mut cfg);
            Workflow::Single
        }
        Command::Hier(a) => {
            a.data.apply(&mut cfg);
            a.gibbs.apply(&mut cfg);
            Workflow::Hier
        }
        Command::Censored(a) => {
            a.data.apply(&mut cfg);
            a.gibbs.apply(&mut cfg);
            Workflow::Censored
        }
        Command::QuantileFunction(a) => {
            set(&mut cfg.data, a.data);
            set(&mut cfg.tau_grid, a.tau_grid);
            a.gibbs.apply(&mut cfg);
            Workflow::QuantileFunction
        }
        Command::Mc(a) => {
            set(&mut cfg.tau, a.tau);
            set(&mut cfg.mc.n, a.n);
            set(&mut cfg.mc.replications, a.replications);
            set(&mut cfg.mc.estimators, a.estimators);
            set(&mut cfg.mc.offset, a.offset);
            set(&mut cfg.mc.bootstrap_resamples, a.bootstrap_resamples);
            cfg.mc.sequential |= a.sequential;
            Workflow::Mc
        }
    };
    if let Some(w) = cfg.workflow {
        if w != workflow {
            anyhow::bail!(
                "config declares workflow {w:?} but the {workflow:?} subcommand was given"
            );
        }
    }
    Ok((workflow, cfg))
}

fn print_output(out: &RunOutput) {
    if let Some(report) = &out.ingest {
        eprintln!(
            "read {} rows, {} rejected, censored fraction {:.3}",
            report.rows_read,
            report.rejects.len(),
            report.censor_fraction()
        );
        for r in &report.rejects {
            eprintln!("  line {}: {}", r.line, r.reason);
        }
    }
    for f in &out.files {
        println!("{}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli).and_then(|(workflow, cfg)| Ok(run(workflow, &cfg)?));
    match result {
        Ok(out) => {
            print_output(&out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
