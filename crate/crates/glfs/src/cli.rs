//! Command-line pipelines over the library: selection, baselines, synthetic
//! data, and the evaluation harness.
//!
//! Every flag can also be set through an environment variable with the
//! `GLFS_` prefix (for example `GLFS_LAMBDA1`). All randomness flows from
//! `--seed`; identical flags and seed reproduce outputs byte for byte. On any
//! failure the process exits nonzero with a one-line `CODE: message` on
//! stderr and removes output files it had already written.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::baselines::{greedy_variance_select, laplacian_score, GreedyCriterion};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::eval::{
    kfold_cv, kmeans, laprls_fit, laprls_predict, loo_1nn_accuracy, nmi, ranking_score,
    simulate, spectral_cluster, top_k_features, CvConfig, SimulationConfig,
};
use crate::graph::{build_knn_heat_graph, laplacian, manifold_kernel, KernelWidth};
use crate::io;
use crate::optimizer::{
    lambda_search_with, owd_minimize, owd_minimize_traced, OptimizerConfig, PenaltySchedule,
};
use crate::FeatureWeights;

#[derive(Parser, Debug)]
#[command(name = "glfs", version, about = "Graph-based feature selection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select features by penalized variance minimization over the sample
    /// graph; writes a ranked weights TSV and a JSON run summary.
    Select(SelectArgs),
    /// Rank features with a reference selector (lapscore, lapaofs, lapdofs).
    Baseline(BaselineArgs),
    /// Generate a synthetic clustered dataset with planted features.
    Simulate(SimulateArgs),
    /// Score a weights file against the planted feature ids.
    Score(ScoreArgs),
    /// Cluster in the selected feature space and report NMI vs labels.
    EvalCluster(EvalClusterArgs),
    /// Leave-one-out 1-NN accuracy in the selected feature space.
    EvalKnn(EvalKnnArgs),
    /// Cross-validated classification on the selected features.
    Classify(ClassifyArgs),
    /// Support size as a function of the penalty, as CSV.
    SweepLambda(SweepLambdaArgs),
}

#[derive(Args, Debug, Clone)]
struct GraphArgs {
    /// Neighbor count for the sample affinity graph.
    #[arg(long, default_value_t = 5, env = "GLFS_GRAPH_K")]
    graph_k: usize,
    /// Heat kernel width: "auto" or a positive value.
    #[arg(long, default_value = "auto", env = "GLFS_WIDTH")]
    width: KernelWidth,
}

#[derive(Args, Debug, Clone)]
struct RegArgs {
    /// Graph smoothness regularization weight.
    #[arg(long, default_value_t = 0.1, env = "GLFS_LAMBDA1")]
    lambda1: f64,
    /// Ridge regularization weight.
    #[arg(long, default_value_t = 0.01, env = "GLFS_LAMBDA2")]
    lambda2: f64,
}

#[derive(Args, Debug, Clone)]
struct OptArgs {
    /// Iteration cap for the descent solver.
    #[arg(long, default_value_t = 500, env = "GLFS_MAX_ITER")]
    max_iter: usize,
    /// Relative objective-change tolerance.
    #[arg(long, default_value_t = 1e-8, env = "GLFS_TOL_OBJ")]
    tol_obj: f64,
    /// Projected-gradient infinity-norm tolerance.
    #[arg(long, default_value_t = 1e-6, env = "GLFS_TOL_GRAD")]
    tol_grad: f64,
}

impl OptArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_iter: self.max_iter,
            tol_obj: self.tol_obj,
            tol_grad: self.tol_grad,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// Input matrix CSV, one feature per row.
    #[arg(long, env = "GLFS_INPUT")]
    input: PathBuf,
    /// Ranked weights TSV output.
    #[arg(long, default_value = "weights.tsv", env = "GLFS_OUTPUT")]
    output: PathBuf,
    /// JSON run summary output; defaults to the TSV path with a .json extension.
    #[arg(long, env = "GLFS_SUMMARY")]
    summary: Option<PathBuf>,
    #[command(flatten)]
    reg: RegArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    opt: OptArgs,
    /// Initial penalty for the line search.
    #[arg(long, default_value_t = 1e-4, env = "GLFS_LAMBDA0")]
    lambda0: f64,
    /// Penalty growth constant of the line search.
    #[arg(long, default_value_t = 1024.0, env = "GLFS_GROWTH")]
    growth: f64,
    #[arg(long, default_value_t = 0, env = "GLFS_SEED")]
    seed: u64,
    /// Write the solver iteration log to stderr.
    #[arg(long, env = "GLFS_TRACE")]
    trace: bool,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[arg(long, env = "GLFS_INPUT")]
    input: PathBuf,
    /// Selector: lapscore, lapaofs (greedy trace), or lapdofs (greedy
    /// log-determinant).
    #[arg(long, env = "GLFS_METHOD")]
    method: String,
    /// Number of features the greedy selectors keep; ignored by lapscore.
    #[arg(long, env = "GLFS_NUM_FEATURES")]
    num_features: Option<usize>,
    #[arg(long, default_value = "weights.tsv", env = "GLFS_OUTPUT")]
    output: PathBuf,
    #[arg(long, env = "GLFS_SUMMARY")]
    summary: Option<PathBuf>,
    #[command(flatten)]
    reg: RegArgs,
    #[command(flatten)]
    graph: GraphArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 400, env = "GLFS_SAMPLES")]
    samples: usize,
    #[arg(long, default_value_t = 4, env = "GLFS_INFORMATIVE")]
    informative: usize,
    #[arg(long, default_value_t = 1000, env = "GLFS_NOISE_FEATURES")]
    noise_features: usize,
    /// Standard deviation of the pure-noise features.
    #[arg(long, default_value_t = 0.2, env = "GLFS_SIGMA")]
    sigma: f64,
    #[arg(long, default_value_t = 4, env = "GLFS_CLUSTERS")]
    clusters: usize,
    #[arg(long, default_value_t = 0, env = "GLFS_SEED")]
    seed: u64,
    #[arg(long, default_value = "X.csv", env = "GLFS_OUTPUT_MATRIX")]
    output_matrix: PathBuf,
    #[arg(long, default_value = "labels.txt", env = "GLFS_OUTPUT_LABELS")]
    output_labels: PathBuf,
    #[arg(long, default_value = "true_ids.txt", env = "GLFS_OUTPUT_TRUE_IDS")]
    output_true_ids: PathBuf,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Ranked weights TSV from `select` or `baseline`.
    #[arg(long, env = "GLFS_WEIGHTS")]
    weights: PathBuf,
    /// Planted feature ids, one per line.
    #[arg(long, env = "GLFS_TRUE_IDS")]
    true_ids: PathBuf,
}

#[derive(Args, Debug)]
struct EvalClusterArgs {
    #[arg(long, env = "GLFS_INPUT")]
    input: PathBuf,
    #[arg(long, env = "GLFS_LABELS")]
    labels: PathBuf,
    #[arg(long, env = "GLFS_WEIGHTS")]
    weights: PathBuf,
    /// Number of top-ranked features to keep.
    #[arg(long, env = "GLFS_TOP_K")]
    top_k: usize,
    /// Clustering method: kmeans or spectral.
    #[arg(long, default_value = "kmeans", env = "GLFS_METHOD")]
    method: String,
    #[arg(long, env = "GLFS_CLUSTERS")]
    clusters: usize,
    #[arg(long, default_value_t = 10, env = "GLFS_RESTARTS")]
    restarts: usize,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 0, env = "GLFS_SEED")]
    seed: u64,
}

#[derive(Args, Debug)]
struct EvalKnnArgs {
    #[arg(long, env = "GLFS_INPUT")]
    input: PathBuf,
    #[arg(long, env = "GLFS_LABELS")]
    labels: PathBuf,
    #[arg(long, env = "GLFS_WEIGHTS")]
    weights: PathBuf,
    #[arg(long, env = "GLFS_TOP_K")]
    top_k: usize,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long, env = "GLFS_TRAIN")]
    train: PathBuf,
    #[arg(long, env = "GLFS_TRAIN_LABELS")]
    train_labels: PathBuf,
    /// Held-out matrix; when given, a final model is fit on the training set
    /// and test errors are reported.
    #[arg(long, env = "GLFS_TEST")]
    test: Option<PathBuf>,
    #[arg(long, env = "GLFS_TEST_LABELS")]
    test_labels: Option<PathBuf>,
    /// Comma-separated penalty grid searched by cross-validation.
    #[arg(long, default_value = "1e-4,1e-3,1e-2,1e-1,1", env = "GLFS_LAMBDA_GRID")]
    lambda_grid: String,
    #[arg(long, default_value_t = 10, env = "GLFS_FOLDS")]
    folds: usize,
    #[command(flatten)]
    reg: RegArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    opt: OptArgs,
    #[arg(long, default_value_t = 0, env = "GLFS_SEED")]
    seed: u64,
    #[arg(long, env = "GLFS_SUMMARY")]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepLambdaArgs {
    #[arg(long, env = "GLFS_INPUT")]
    input: PathBuf,
    /// Comma-separated penalty grid.
    #[arg(long, env = "GLFS_GRID")]
    grid: String,
    #[arg(long, default_value = "sweep.csv", env = "GLFS_OUTPUT")]
    output: PathBuf,
    #[command(flatten)]
    reg: RegArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    opt: OptArgs,
}

/// Tracks files written by the current run so a later failure can remove
/// partial outputs.
#[derive(Default)]
struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    fn record<T>(&mut self, path: &Path, r: Result<T>) -> Result<T> {
        if r.is_ok() {
            self.written.push(path.to_path_buf());
        }
        r
    }

    fn rollback(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

pub fn main() {
    let cli = Cli::parse();
    let mut outputs = Outputs::default();
    if let Err(e) = run(cli.command, &mut outputs) {
        outputs.rollback();
        eprintln!("{}: {e}", e.code());
        std::process::exit(1);
    }
}

fn run(command: Command, outputs: &mut Outputs) -> Result<()> {
    match command {
        Command::Select(a) => cmd_select(a, outputs),
        Command::Baseline(a) => cmd_baseline(a, outputs),
        Command::Simulate(a) => cmd_simulate(a, outputs),
        Command::Score(a) => cmd_score(a),
        Command::EvalCluster(a) => cmd_eval_cluster(a),
        Command::EvalKnn(a) => cmd_eval_knn(a),
        Command::Classify(a) => cmd_classify(a, outputs),
        Command::SweepLambda(a) => cmd_sweep_lambda(a, outputs),
    }
}

fn summary_path(explicit: &Option<PathBuf>, tsv: &Path) -> PathBuf {
    explicit.clone().unwrap_or_else(|| tsv.with_extension("json"))
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let mut grid = Vec::new();
    for tok in text.split(',') {
        let v: f64 = tok
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("invalid penalty value {:?}", tok.trim())))?;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!("penalty must be finite and nonnegative, got {v}")));
        }
        grid.push(v);
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty penalty grid".into()));
    }
    Ok(grid)
}

fn cmd_select(a: SelectArgs, outputs: &mut Outputs) -> Result<()> {
    let x = io::load_matrix(&a.input)?;
    let graph = build_knn_heat_graph(&x, a.graph.graph_k, a.graph.width)?;
    let kernel = manifold_kernel(&laplacian(&graph), a.reg.lambda1, a.reg.lambda2)?;
    let cfg = a.opt.config();
    let schedule = PenaltySchedule { lambda0: a.lambda0, c: a.growth };
    let beta0 = FeatureWeights::ones(x.n_features());
    let trace = a.trace;
    let search = lambda_search_with(
        |lambda| {
            if trace {
                let mut err = std::io::stderr().lock();
                use std::io::Write;
                let _ = writeln!(err, "penalty {lambda:e}");
                owd_minimize_traced(&x, &kernel, lambda, &beta0, &cfg, Some(&mut err))
            } else {
                owd_minimize(&x, &kernel, lambda, &beta0, &cfg)
            }
        },
        &schedule,
    )?;

    let weights: Vec<f64> = search.result.beta.as_vector().iter().copied().collect();
    outputs.record(&a.output, io::save_weights(&a.output, &weights))?;
    let summary = summary_path(&a.summary, &a.output);
    let value = json!({
        "command": "select",
        "penalty": io::sig12(search.lambda),
        "support_size": search.result.support_size,
        "objective": io::sig12(search.result.objective_value),
        "iterations": search.result.iterations,
        "converged": search.result.converged,
        "search_history": search
            .history
            .iter()
            .map(|(l, s)| json!([io::sig12(*l), s]))
            .collect::<Vec<_>>(),
        "seed": a.seed,
    });
    outputs.record(&summary, io::save_json(&summary, &value))?;
    println!("penalty\t{:?}", io::sig12(search.lambda));
    println!("support_size\t{}", search.result.support_size);
    println!("objective\t{:?}", io::sig12(search.result.objective_value));
    Ok(())
}

fn cmd_baseline(a: BaselineArgs, outputs: &mut Outputs) -> Result<()> {
    let x = io::load_matrix(&a.input)?;
    let graph = build_knn_heat_graph(&x, a.graph.graph_k, a.graph.width)?;
    let method = a.method.to_ascii_lowercase();
    // Weights are oriented so larger means more important, keeping the ranked
    // TSV contract uniform across selectors.
    let weights: Vec<f64> = match method.as_str() {
        "lapscore" => laplacian_score(&x, &graph)?.iter().map(|s| -s).collect(),
        "lapaofs" | "lapdofs" => {
            let k = a.num_features.ok_or_else(|| {
                Error::InvalidParameter("--num-features is required for greedy selectors".into())
            })?;
            let criterion = if method == "lapaofs" {
                GreedyCriterion::Trace
            } else {
                GreedyCriterion::Determinant
            };
            let picked = greedy_variance_select(
                &x,
                &laplacian(&graph),
                a.reg.lambda1,
                a.reg.lambda2,
                k,
                criterion,
            )?;
            let mut w = vec![0.0; x.n_features()];
            for (pos, &f) in picked.iter().enumerate() {
                w[f] = (k - pos) as f64;
            }
            w
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown method {other:?}; expected lapscore, lapaofs, or lapdofs"
            )))
        }
    };
    outputs.record(&a.output, io::save_weights(&a.output, &weights))?;
    let summary = summary_path(&a.summary, &a.output);
    let value = json!({
        "command": "baseline",
        "method": method,
        "n_features": x.n_features(),
        "num_features": a.num_features,
    });
    outputs.record(&summary, io::save_json(&summary, &value))?;
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, outputs: &mut Outputs) -> Result<()> {
    let cfg = SimulationConfig {
        n_samples: a.samples,
        n_informative: a.informative,
        n_noise: a.noise_features,
        noise_sigma: a.sigma,
        n_clusters: a.clusters,
        ..SimulationConfig::default()
    };
    let ds = simulate(&cfg, a.seed)?;
    outputs.record(&a.output_matrix, io::save_matrix(&a.output_matrix, &ds.x))?;
    outputs.record(&a.output_labels, io::save_labels(&a.output_labels, &ds.labels))?;
    let ids = ds.true_feature_ids.expect("simulation always plants features");
    outputs.record(&a.output_true_ids, io::save_labels(&a.output_true_ids, &ids))?;
    Ok(())
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let weights = io::load_weights(&a.weights)?;
    let true_ids = io::load_labels(&a.true_ids)?;
    let score = ranking_score(&weights, &true_ids)?;
    println!("{:?}", io::sig12(score));
    Ok(())
}

fn selected_matrix(input: &Path, weights_path: &Path, top_k: usize) -> Result<(DataMatrix, Vec<usize>)> {
    let x = io::load_matrix(input)?;
    let mut weights = io::load_weights(weights_path)?;
    // A weights file may omit trailing zero-weight features.
    if weights.len() < x.n_features() {
        weights.resize(x.n_features(), 0.0);
    } else if weights.len() > x.n_features() {
        return Err(Error::InvalidInput(format!(
            "weights cover {} features but the matrix has {}",
            weights.len(),
            x.n_features()
        )));
    }
    let picked = top_k_features(&weights, top_k)?;
    Ok((x.select_features(&picked)?, picked))
}

fn cmd_eval_cluster(a: EvalClusterArgs) -> Result<()> {
    let (sel, picked) = selected_matrix(&a.input, &a.weights, a.top_k)?;
    let labels = io::load_labels(&a.labels)?;
    let assignment = match a.method.to_ascii_lowercase().as_str() {
        "kmeans" => kmeans(&sel, a.clusters, a.restarts, a.seed)?,
        "spectral" => {
            let graph = build_knn_heat_graph(&sel, a.graph.graph_k, a.graph.width)?;
            spectral_cluster(&graph, a.clusters, a.seed)?
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown method {other:?}; expected kmeans or spectral"
            )))
        }
    };
    let score = nmi(&assignment, &labels)?;
    println!("nmi\t{:?}", io::sig12(score));
    println!("selected\t{}", picked.len());
    Ok(())
}

fn cmd_eval_knn(a: EvalKnnArgs) -> Result<()> {
    let (sel, picked) = selected_matrix(&a.input, &a.weights, a.top_k)?;
    let labels = io::load_labels(&a.labels)?;
    let acc = loo_1nn_accuracy(&sel, &labels)?;
    println!("accuracy\t{:?}", io::sig12(acc));
    println!("selected\t{}", picked.len());
    Ok(())
}

fn cmd_classify(a: ClassifyArgs, outputs: &mut Outputs) -> Result<()> {
    let x = io::load_matrix(&a.train)?;
    let labels = io::load_labels(&a.train_labels)?;
    let grid = parse_grid(&a.lambda_grid)?;
    let dataset = crate::eval::LabeledDataset { x, labels, true_feature_ids: None };
    let cfg = CvConfig {
        lambda1: a.reg.lambda1,
        lambda2: a.reg.lambda2,
        graph_k: a.graph.graph_k,
        kernel_width: a.graph.width,
        optimizer: a.opt.config(),
    };
    let outcome = kfold_cv(&dataset, a.folds, &grid, a.seed, &cfg)?;

    let mut test_errors: Option<usize> = None;
    if let Some(test_path) = &a.test {
        let test_labels_path = a
            .test_labels
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("--test requires --test-labels".into()))?;
        let x_test = io::load_matrix(test_path)?;
        let y_test = io::load_labels(test_labels_path)?;
        if y_test.len() != x_test.n_samples() {
            return Err(Error::InvalidInput("test labels do not match test samples".into()));
        }
        let errors = if outcome.support.is_empty() {
            y_test.iter().filter(|&&l| l != 0).count()
        } else {
            let train_sel = dataset.x.select_features(&outcome.support)?;
            let test_sel = x_test.select_features(&outcome.support)?;
            let y: Vec<f64> = dataset.labels.iter().map(|&l| l as f64).collect();
            let graph = build_knn_heat_graph(&train_sel, a.graph.graph_k, a.graph.width)?;
            let model = laprls_fit(&train_sel, &y, a.reg.lambda1, a.reg.lambda2, &laplacian(&graph))?;
            let pred = laprls_predict(&model, &test_sel)?;
            pred.iter().zip(&y_test).filter(|(p, l)| p != l).count()
        };
        test_errors = Some(errors);
    }

    println!("cv_errors\t{}", outcome.errors);
    println!("best_penalty\t{:?}", io::sig12(outcome.best_lambda));
    println!("selected\t{}", outcome.support.len());
    if let Some(e) = test_errors {
        println!("test_errors\t{e}");
    }
    if let Some(summary) = &a.summary {
        let value = json!({
            "command": "classify",
            "cv_errors": outcome.errors,
            "best_penalty": io::sig12(outcome.best_lambda),
            "selected": outcome.support,
            "per_penalty": outcome
                .per_lambda
                .iter()
                .map(|(l, e, s)| json!([io::sig12(*l), e, s]))
                .collect::<Vec<_>>(),
            "test_errors": test_errors,
            "seed": a.seed,
        });
        outputs.record(summary, io::save_json(summary, &value))?;
    }
    Ok(())
}

fn cmd_sweep_lambda(a: SweepLambdaArgs, outputs: &mut Outputs) -> Result<()> {
    let x = io::load_matrix(&a.input)?;
    let grid = parse_grid(&a.grid)?;
    let graph = build_knn_heat_graph(&x, a.graph.graph_k, a.graph.width)?;
    let kernel = manifold_kernel(&laplacian(&graph), a.reg.lambda1, a.reg.lambda2)?;
    let cfg = a.opt.config();
    let beta0 = FeatureWeights::ones(x.n_features());
    let mut rows = Vec::with_capacity(grid.len());
    for &lambda in &grid {
        let r = owd_minimize(&x, &kernel, lambda, &beta0, &cfg)?;
        rows.push((lambda, r.support_size));
    }
    let mut text = String::from("lambda,support_size\n");
    for (lambda, support) in &rows {
        text.push_str(&format!("{lambda:e},{support}\n"));
    }
    let write = fs::write(&a.output, text).map_err(|source| Error::Io {
        path: a.output.display().to_string(),
        source,
    });
    outputs.record(&a.output, write)?;
    Ok(())
}
