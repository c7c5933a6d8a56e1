//! The four subcommands as plain functions returning serializable documents.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use jointspec::baselines::{kernel_kmeans_sum, sc_al, sc_sum};
use jointspec::ged::{cluster_ged_detailed, GedSolverConfig, GedWeights, InitLayer};
use jointspec::metrics::{confusion_matrix, ConfusionMatrix, MetricReport};
use jointspec::sr::{cluster_sr_detailed, SrConfig};
use jointspec::synth::{self, LayerSpec, MsbmConfig, WeightMode};
use jointspec::{decompose, spectral_cluster, KMeansConfig, LaplacianKind};

use crate::io::{self, IoError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid flag combination; exit status 2.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Core(#[from] jointspec::Error),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Adds the fields of object `more` to object `params`.
fn extra(params: &mut Value, more: Value) {
    if let (Some(p), Value::Object(m)) = (params.as_object_mut(), more) {
        p.extend(m);
    }
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Normalized spectral clustering of a single layer.
    Sc,
    /// Joint eigenvector factorization.
    ScGed,
    /// Greedy spectral regularization.
    ScSr,
    /// Sum of adjacency matrices.
    ScSum,
    /// Sum of normalized adjacency matrices.
    ScSumNorm,
    /// Kernel k-means on summed spectral kernels.
    KKmeans,
    /// Averaged random-walk Laplacian.
    ScAl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sc => "sc",
            Method::ScGed => "sc-ged",
            Method::ScSr => "sc-sr",
            Method::ScSum => "sc-sum",
            Method::ScSumNorm => "sc-sum-norm",
            Method::KKmeans => "k-kmeans",
            Method::ScAl => "sc-al",
        }
    }
}

/// Initial layer of the joint factorization: a fixed index or `auto`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitChoice {
    Auto,
    Layer(usize),
}

impl std::str::FromStr for InitChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(InitChoice::Auto);
        }
        s.parse().map(InitChoice::Layer).map_err(|_| format!("expected `auto` or a layer index, got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub method: Method,
    pub k: usize,
    pub n: usize,
    pub layers: Vec<PathBuf>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub init_layer: Option<InitChoice>,
    pub max_outer: Option<usize>,
    pub outer_tol: Option<f64>,
    pub lambda: Option<Vec<f64>>,
    pub order: Option<Vec<usize>>,
    pub d: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
}

impl ClusterConfig {
    pub fn new(method: Method, k: usize, n: usize, layers: Vec<PathBuf>) -> Self {
        Self {
            method,
            k,
            n,
            layers,
            alpha: None,
            beta: None,
            init_layer: None,
            max_outer: None,
            outer_tol: None,
            lambda: None,
            order: None,
            d: None,
            restarts: KMeansConfig::default().restarts,
            seed: 0,
        }
    }

    /// Checks flag combinations before any file is read.
    pub fn validate(&self) -> Result<(), CliError> {
        let m = self.layers.len();
        if m == 0 {
            return Err(usage("at least one --layer is required"));
        }
        if self.n == 0 {
            return Err(usage("--n must be positive"));
        }
        if self.k == 0 || self.k > self.n {
            return Err(usage(format!("--k must lie in 1..={} (got {})", self.n, self.k)));
        }
        if self.restarts == 0 {
            return Err(usage("--restarts must be positive"));
        }
        if self.method == Method::Sc && m != 1 {
            return Err(usage(format!("method sc clusters exactly one layer, got {m}")));
        }
        let method = self.method;
        let only = |given: bool, flag: &str, allowed: Method| {
            if given && method != allowed {
                Err(usage(format!("{flag} only applies to --method {}", allowed.name())))
            } else {
                Ok(())
            }
        };
        only(self.alpha.is_some(), "--alpha", Method::ScGed)?;
        only(self.beta.is_some(), "--beta", Method::ScGed)?;
        only(self.init_layer.is_some(), "--init-layer", Method::ScGed)?;
        only(self.max_outer.is_some(), "--max-outer", Method::ScGed)?;
        only(self.outer_tol.is_some(), "--outer-tol", Method::ScGed)?;
        only(self.lambda.is_some(), "--lambda", Method::ScSr)?;
        only(self.order.is_some(), "--order", Method::ScSr)?;
        only(self.d.is_some(), "--d", Method::KKmeans)?;

        for (flag, v) in [("--alpha", self.alpha), ("--beta", self.beta), ("--outer-tol", self.outer_tol)] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(usage(format!("{flag} must be a finite non-negative number")));
                }
            }
        }
        if self.max_outer == Some(0) {
            return Err(usage("--max-outer must be positive"));
        }
        if let Some(InitChoice::Layer(i)) = self.init_layer {
            if i >= m {
                return Err(usage(format!("--init-layer {i} is not below the layer count {m}")));
            }
        }
        if let Some(lambda) = &self.lambda {
            if lambda.len() > m - 1 {
                return Err(usage(format!(
                    "--lambda has {} values but {m} layers allow only {} combination steps",
                    lambda.len(),
                    m - 1
                )));
            }
            if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
                return Err(usage("--lambda values must be positive"));
            }
        }
        if let Some(order) = &self.order {
            let mut seen = vec![false; m];
            for &i in order {
                if i >= m || std::mem::replace(&mut seen[i], true) {
                    return Err(usage(format!("--order must list distinct layer indices below {m}")));
                }
            }
        }
        if let Some(d) = self.d {
            if d == 0 || d > self.n {
                return Err(usage(format!("--d must lie in 1..={}", self.n)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterReport {
    pub method: Method,
    pub k: usize,
    pub n: usize,
    pub params: Value,
    pub labels: Vec<usize>,
    pub timings_ms: BTreeMap<String, f64>,
    pub seed: u64,
}

pub fn cluster(cfg: &ClusterConfig) -> Result<ClusterReport, CliError> {
    cfg.validate()?;
    let total = Instant::now();
    let mut timings = BTreeMap::new();

    let start = Instant::now();
    let mlg = io::load_multilayer(&cfg.layers, cfg.n)?;
    timings.insert("load".to_string(), millis(start));

    let km = KMeansConfig { restarts: cfg.restarts, seed: cfg.seed, ..Default::default() };
    let k = cfg.k;
    let start = Instant::now();
    let mut params = json!({ "restarts": cfg.restarts, "layers": cfg.layers });
    let clustering = match cfg.method {
        Method::Sc => spectral_cluster(mlg.layer(0), k, &km)?,
        Method::ScGed => {
            let defaults = GedWeights::default();
            let weights = GedWeights {
                alpha: cfg.alpha.unwrap_or(defaults.alpha),
                beta: cfg.beta.unwrap_or(defaults.beta),
            };
            let base = GedSolverConfig::default();
            let solver = GedSolverConfig {
                init_layer: match cfg.init_layer.unwrap_or(InitChoice::Layer(0)) {
                    InitChoice::Auto => InitLayer::MostConnected,
                    InitChoice::Layer(i) => InitLayer::Index(i),
                },
                max_outer: cfg.max_outer.unwrap_or(base.max_outer),
                outer_tol: cfg.outer_tol.unwrap_or(base.outer_tol),
                ..base
            };
            let (clustering, sol) = cluster_ged_detailed(&mlg, k, weights, &solver, &km)?;
            extra(
                &mut params,
                json!({
                    "alpha": weights.alpha,
                    "beta": weights.beta,
                    "init_layer": sol.init_layer,
                    "max_outer": solver.max_outer,
                    "outer_tol": solver.outer_tol,
                    "outer_iterations": sol.objective_trace.len() - 1,
                    "final_objective": sol.objective_trace.last(),
                }),
            );
            clustering
        }
        Method::ScSr => {
            let sr = SrConfig { lambda_schedule: cfg.lambda.clone(), order: cfg.order.clone(), km };
            let report = cluster_sr_detailed(&mlg, k, &sr)?;
            extra(&mut params, json!({ "order": report.order, "lambda": report.lambdas }));
            report.clustering
        }
        Method::ScSum | Method::ScSumNorm => {
            let normalized = cfg.method == Method::ScSumNorm;
            extra(&mut params, json!({ "normalized": normalized }));
            sc_sum(&mlg, k, normalized, &km)?
        }
        Method::KKmeans => {
            let d = cfg.d.unwrap_or(k);
            extra(&mut params, json!({ "d": d }));
            kernel_kmeans_sum(&mlg, k, Some(d), &km)?
        }
        Method::ScAl => sc_al(&mlg, k, &km)?,
    };
    timings.insert("cluster".to_string(), millis(start));
    timings.insert("total".to_string(), millis(total));

    Ok(ClusterReport {
        method: cfg.method,
        k,
        n: cfg.n,
        params,
        labels: clustering.into_labels(),
        timings_ms: timings,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionDoc {
    /// Rows are classes, columns are clusters.
    pub counts: Vec<Vec<usize>>,
    /// Cluster id shown in each column.
    pub column_order: Vec<usize>,
}

impl From<ConfusionMatrix> for ConfusionDoc {
    fn from(m: ConfusionMatrix) -> Self {
        Self { counts: m.counts, column_order: m.column_order }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionPair {
    pub raw: ConfusionDoc,
    pub matched: ConfusionDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub n: usize,
    pub purity: f64,
    pub nmi: f64,
    pub rand_index: f64,
    pub confusion: ConfusionPair,
}

pub fn eval(pred_path: &Path, truth_path: &Path) -> Result<EvalReport, CliError> {
    let pred = io::load_labels(pred_path)?;
    let truth = io::load_labels(truth_path)?;
    for (path, labels) in [(pred_path, &pred), (truth_path, &truth)] {
        if labels.is_empty() {
            return Err(CliError::Input(format!("{}: no labels", path.display())));
        }
    }
    if pred.len() != truth.len() {
        return Err(CliError::Input(format!(
            "{} has {} labels but {} has {}",
            pred_path.display(),
            pred.len(),
            truth_path.display(),
            truth.len()
        )));
    }
    if pred.len() < 2 {
        return Err(CliError::Input("the Rand index needs at least two vertices".into()));
    }
    let report = MetricReport::from_labels(&pred, &truth)?;
    Ok(EvalReport {
        n: pred.len(),
        purity: report.purity,
        nmi: report.nmi,
        rand_index: report.rand_index,
        confusion: ConfusionPair {
            raw: confusion_matrix(&pred, &truth, false)?.into(),
            matched: confusion_matrix(&pred, &truth, true)?.into(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Combinatorial,
    Symmetric,
    RandomWalk,
}

impl From<KindArg> for LaplacianKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Combinatorial => LaplacianKind::Combinatorial,
            KindArg::Symmetric => LaplacianKind::Symmetric,
            KindArg::RandomWalk => LaplacianKind::RandomWalk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumReport {
    pub kind: KindArg,
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[j]` pairs with `eigenvalues[j]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

pub fn spectrum(path: &Path, n: usize, kind: KindArg, count: usize) -> Result<SpectrumReport, CliError> {
    if n == 0 {
        return Err(usage("--n must be positive"));
    }
    if count == 0 || count > n {
        return Err(usage(format!("--count must lie in 1..={n} (got {count})")));
    }
    let g = io::load_layer(path, n)?;
    let dec = decompose(&g, kind.into())?;
    Ok(SpectrumReport {
        kind,
        n,
        eigenvalues: dec.eigenvalues[..count].to_vec(),
        eigenvectors: (0..count).map(|j| dec.eigenvectors.column(j).iter().copied().collect()).collect(),
    })
}

/// Layer description on the command line: `P_IN,P_OUT` or `P_IN,P_OUT,noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerArg(pub LayerSpec);

impl std::str::FromStr for LayerArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let prob = |t: &str| t.parse::<f64>().map_err(|_| format!("bad probability {t:?} in {s:?}"));
        match parts[..] {
            [a, b] => Ok(LayerArg(LayerSpec::informative(prob(a)?, prob(b)?))),
            [a, b, "noise"] => Ok(LayerArg(LayerSpec::noise(prob(a)?, prob(b)?))),
            _ => Err(format!("expected P_IN,P_OUT or P_IN,P_OUT,noise, got {s:?}")),
        }
    }
}

/// Edge weights of generated layers: `unit` or `poisson:MEAN`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightArg(pub WeightMode);

impl std::str::FromStr for WeightArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "unit" {
            return Ok(WeightArg(WeightMode::Unit));
        }
        let mean = s
            .strip_prefix("poisson:")
            .and_then(|m| m.parse().ok())
            .ok_or_else(|| format!("expected `unit` or `poisson:MEAN`, got {s:?}"))?;
        Ok(WeightArg(WeightMode::Poisson { mean }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenModel {
    Blocks { layers: Vec<LayerSpec>, weights: WeightMode, block_sizes: Option<Vec<usize>> },
    Complementary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenReport {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub layers: Vec<PathBuf>,
    pub labels: PathBuf,
    pub edge_counts: Vec<usize>,
}

/// Writes `layer{i}.edges` and `labels.txt` into `out`.
pub fn gen(model: &GenModel, n: usize, k: usize, seed: u64, out: &Path) -> Result<GenReport, CliError> {
    let (mlg, truth) = match model {
        GenModel::Complementary => synth::complementary_pair(n, k, seed)?,
        GenModel::Blocks { layers, weights, block_sizes } => {
            if layers.is_empty() {
                return Err(usage("give --complementary or at least one --layer"));
            }
            let cfg = MsbmConfig {
                n,
                k,
                block_sizes: block_sizes.clone(),
                layers: layers.clone(),
                weight_mode: *weights,
                seed,
            };
            synth::generate(&cfg)?
        }
    };
    std::fs::create_dir_all(out)
        .map_err(|source| IoError::Access { path: out.into(), source })?;
    let mut paths = Vec::new();
    let mut edge_counts = Vec::new();
    for (i, layer) in mlg.layers().iter().enumerate() {
        let path = out.join(format!("layer{i}.edges"));
        io::write_file(&path, &io::format_layer(layer))?;
        paths.push(path);
        edge_counts.push(layer.edge_count());
    }
    let labels = out.join("labels.txt");
    io::write_file(&labels, &io::format_labels(truth.labels()))?;
    Ok(GenReport { n, k, seed, layers: paths, labels, edge_counts })
}
