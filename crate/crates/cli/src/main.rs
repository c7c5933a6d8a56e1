use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use jointspec_cli::commands::{
    self, CliError, ClusterConfig, GenModel, InitChoice, KindArg, LayerArg, Method, WeightArg,
};
use jointspec_cli::io;

/// Spectral clustering of multi-layer graphs.
#[derive(Parser)]
#[command(name = "jointspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a multi-layer block model into edge-list and label files.
    Gen(GenArgs),
    /// Cluster the shared vertices of one or more layers.
    Cluster(ClusterArgs),
    /// Compare predicted labels with ground truth.
    Eval(EvalArgs),
    /// Print the leading eigenpairs of one layer's Laplacian.
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Layer edge probabilities `P_IN,P_OUT`, or `P_IN,P_OUT,noise` for a
    /// layer that ignores the blocks. Repeat once per layer.
    #[arg(long = "layer", value_name = "SPEC", conflicts_with = "complementary")]
    layers: Vec<LayerArg>,
    /// Two layers that each resolve only half of the block structure (even k).
    #[arg(long)]
    complementary: bool,
    /// Edge weights: `unit` or `poisson:MEAN`.
    #[arg(long, default_value = "unit", conflicts_with = "complementary")]
    weights: WeightArg,
    /// Explicit block sizes, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "complementary")]
    block_sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for `layerN.edges` and `labels.txt`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    k: usize,
    /// Number of vertices shared by all layers.
    #[arg(long)]
    n: usize,
    /// Edge-list files, one per layer (`--layer a --layer b` or `--layers a b`).
    #[arg(long = "layer", visible_alias = "layers", num_args = 1.., required = true)]
    layers: Vec<PathBuf>,
    /// sc-ged: weight of the factor norm penalty [default: 10].
    #[arg(long)]
    alpha: Option<f64>,
    /// sc-ged: weight of the inverse-consistency penalty [default: 100].
    #[arg(long)]
    beta: Option<f64>,
    /// sc-ged: layer whose eigenvectors start the solver, or `auto` [default: 0].
    #[arg(long)]
    init_layer: Option<InitChoice>,
    /// sc-ged: outer iteration limit [default: 50].
    #[arg(long)]
    max_outer: Option<usize>,
    /// sc-ged: relative objective decrease that stops the solver [default: 1e-6].
    #[arg(long)]
    outer_tol: Option<f64>,
    /// sc-sr: regularization weight per combination step, comma separated.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// sc-sr: layers to visit first, comma separated; the rest are chosen greedily.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
    /// k-kmeans: eigenvectors per layer kernel [default: k].
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON result here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted labels, one per line.
    pred: PathBuf,
    /// Ground-truth labels, one per line.
    truth: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    layer: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "random-walk")]
    kind: KindArg,
    /// Number of leading eigenpairs to print.
    #[arg(long)]
    count: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn emit<T: Serialize>(doc: &T, output: Option<&PathBuf>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc).expect("documents serialize") + "\n";
    match output {
        Some(path) => io::write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => {
            let model = if a.complementary {
                GenModel::Complementary
            } else {
                GenModel::Blocks {
                    layers: a.layers.iter().map(|l| l.0).collect(),
                    weights: a.weights.0,
                    block_sizes: a.block_sizes,
                }
            };
            emit(&commands::gen(&model, a.n, a.k, a.seed, &a.out)?, None)
        }
        Command::Cluster(a) => {
            let cfg = ClusterConfig {
                alpha: a.alpha,
                beta: a.beta,
                init_layer: a.init_layer,
                max_outer: a.max_outer,
                outer_tol: a.outer_tol,
                lambda: a.lambda,
                order: a.order,
                d: a.d,
                restarts: a.restarts,
                seed: a.seed,
                ..ClusterConfig::new(a.method, a.k, a.n, a.layers)
            };
            emit(&commands::cluster(&cfg)?, a.output.as_ref())
        }
        Command::Eval(a) => emit(&commands::eval(&a.pred, &a.truth)?, a.output.as_ref()),
        Command::Spectrum(a) => {
            emit(&commands::spectrum(&a.layer, a.n, a.kind, a.count)?, a.output.as_ref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jointspec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
