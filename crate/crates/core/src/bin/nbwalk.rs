use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nbwalk::harness::{self, Config, DatasetKind, Method, WeightingKind};
use nbwalk::{Metric, Result};

#[derive(Parser)]
#[command(name = "nbwalk", version, about = "Semi-supervised clustering with a non-backtracking walk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the synthetic block model.
    Synth(Common),
    /// Sweep a dataset and report mean accuracy per grid point.
    Cluster(Common),
    /// Compute error bounds, optionally against density evolution.
    Theory(Common),
    /// Time the sampling, iteration and decision phases.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (.csv or .json); standard output otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated mean degrees.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Comma-separated revealed fractions.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// nblw, lp or both.
    #[arg(long)]
    method: Option<Method>,
    /// euclidean or cosine.
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long)]
    q: Option<usize>,
    /// model, blobs, mnist or csv.
    #[arg(long, value_parser = parse_dataset)]
    dataset: Option<DatasetKind>,
    /// Dataset directory (mnist) or file (csv).
    #[arg(long)]
    path: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated digits kept from MNIST.
    #[arg(long, value_delimiter = ',')]
    digits: Option<Vec<u8>>,
    /// Within-cluster similarity law, e.g. normal:0.5,1.
    #[arg(long)]
    p_in: Option<String>,
    #[arg(long)]
    p_out: Option<String>,
    /// centered, identity or optimal.
    #[arg(long, value_parser = parse_weighting)]
    weighting: Option<WeightingKind>,
    /// Density-evolution population for `theory`.
    #[arg(long)]
    de_population: Option<usize>,
}

fn parse_dataset(s: &str) -> std::result::Result<DatasetKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

fn parse_weighting(s: &str) -> std::result::Result<WeightingKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

impl Common {
    fn resolve(self, default_dataset: DatasetKind) -> Result<(Config, Option<PathBuf>)> {
        let mut c = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config {
                dataset: default_dataset,
                ..Config::default()
            },
        };
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        set!(seed, alpha, eta, kmax, reps, method, metric, q, dataset, n, digits, p_in, p_out, weighting, de_population);
        if self.path.is_some() {
            c.path = self.path;
        }
        Ok((c, self.out))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => {
            let (c, out) = args.resolve(DatasetKind::Model)?;
            harness::write_rows(&harness::cmd_synth(&c)?, out.as_deref())
        }
        Command::Cluster(args) => {
            let (c, out) = args.resolve(DatasetKind::Blobs)?;
            harness::write_rows(&harness::cmd_cluster(&c)?, out.as_deref())
        }
        Command::Theory(args) => {
            let (c, out) = args.resolve(DatasetKind::Model)?;
            harness::write_rows(&harness::cmd_theory(&c)?, out.as_deref())
        }
        Command::Bench(args) => {
            let (c, out) = args.resolve(DatasetKind::Model)?;
            harness::write_rows(&harness::cmd_bench(&c)?, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nbwalk: {e}");
            ExitCode::FAILURE
        }
    }
}
