//! Command-line front end.
//!
//! `parse_args` turns argv into a validated [`RunSpec`]; `run` executes it.
//! Partition runs write `PREFIX.labels.csv` (best run by modularity, ties to
//! the earliest seed) and `PREFIX.batch.csv`, plus `PREFIX.trace.csv` and
//! `PREFIX.u.csv` with `--trace`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::construct::{knn_graph, planted_partition, two_moons, TWO_MOONS_NOISE};
use crate::eigen::{clamp_n_eig, EigenCache, EigenOptions};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::io;
use crate::mbo::{InitKind, MboConfig, MboResult};
use crate::metrics::{classification_rate, purity, BatchField, RunBatch, RunRecord};
use crate::partition::{Labels, Supervision};
use crate::partitioner::{fixed_partition, recursive_partition, sweep_nhat, PartitionStrategy, RecursiveParams};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "BALANCED_TV_THREADS";

#[derive(Parser, Debug)]
#[command(name = "balanced-tv", version, about = "Modularity community detection with balanced-TV MBO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic data set.
    #[command(subcommand)]
    Generate(Generator),
    /// Build a self-tuning k-NN graph from a feature CSV.
    BuildGraph(BuildGraphArgs),
    /// Partition a graph.
    Partition(Box<PartitionArgs>),
    /// Score a labelling against ground truth.
    Metrics(MetricsArgs),
}

#[derive(Subcommand, Debug)]
enum Generator {
    /// Two noisy half-circles embedded in `dim` dimensions (features CSV).
    TwoMoons {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        dim: usize,
        #[arg(long, default_value_t = TWO_MOONS_NOISE)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Features CSV.
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth labels CSV [default: OUT with extension `truth.csv`].
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
    /// Equal-block planted partition graph (edge list).
    PlantedPartition {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        communities: usize,
        /// Expected within-block degree.
        #[arg(long)]
        avg_in: f64,
        /// Expected between-block degree.
        #[arg(long)]
        avg_out: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge list.
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth labels CSV [default: OUT with extension `truth.csv`].
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct KnnArgs {
    /// Neighbours per point.
    #[arg(long = "knn", default_value_t = 13)]
    k: usize,
    /// Neighbour whose distance sets the local scale [default: K].
    #[arg(long)]
    scaling_neighbor: Option<usize>,
}

#[derive(Args, Debug)]
struct BuildGraphArgs {
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    knn: KnnArgs,
    /// Edge list.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    Random,
    Kmeans,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["edges", "features"])))]
struct PartitionArgs {
    /// Edge list input.
    #[arg(long, conflicts_with = "features")]
    edges: Option<PathBuf>,
    /// Feature CSV input, turned into a k-NN graph.
    #[arg(long)]
    features: Option<PathBuf>,
    #[command(flatten)]
    knn: KnnArgs,
    /// Resolution parameter.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Number of communities for a fixed run.
    #[arg(long, conflicts_with_all = ["sweep", "recursive"])]
    nhat: Option<usize>,
    /// Try every n̂ in MIN..MAX on one eigenbasis and keep the best.
    #[arg(long, value_parser = parse_range, conflicts_with = "recursive")]
    sweep: Option<(usize, usize)>,
    /// Split communities recursively while modularity increases.
    #[arg(long)]
    recursive: bool,
    /// Pieces per recursive split.
    #[arg(long, default_value_t = 2, requires = "recursive")]
    split_factor: usize,
    /// Communities smaller than this are not split.
    #[arg(long, default_value_t = 4, requires = "recursive")]
    min_size: usize,
    /// Minimum modularity gain for accepting a split.
    #[arg(long, default_value_t = 1e-10, requires = "recursive")]
    gain_tol: f64,
    /// Eigenpairs kept [default: 5·n̂].
    #[arg(long)]
    neig: Option<usize>,
    /// Fixed timestep [default: chosen from the spectrum].
    #[arg(long)]
    dt: Option<f64>,
    /// Seed of the first run; run r uses SEED + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long, default_value_t = 300)]
    max_iters: usize,
    /// Skip the smaller-timestep continuation.
    #[arg(long)]
    no_refine: bool,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    init: InitArg,
    /// Known labels, CSV `node,label`.
    #[arg(long)]
    supervision: Option<PathBuf>,
    /// Fidelity weight λ for supervised nodes.
    #[arg(long, default_value_t = 100.0)]
    supervision_weight: f64,
    /// Ground-truth labels for scoring, CSV `node,label`.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output path prefix.
    #[arg(long, default_value = "balanced-tv")]
    out: PathBuf,
    /// Also write the energy trace and final partition matrix of the best run.
    #[arg(long)]
    trace: bool,
    /// Directory for persisted eigenbases.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Predicted labels CSV.
    #[arg(long)]
    labels: PathBuf,
    /// Ground-truth labels CSV.
    #[arg(long)]
    truth: PathBuf,
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected MIN..MAX, got `{s}`"))?;
    let lo: usize = a.trim().parse().map_err(|_| format!("bad lower bound `{a}`"))?;
    let hi: usize = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad upper bound `{b}`"))?;
    if lo == 0 || lo > hi {
        return Err(format!("range {lo}..{hi} must be nonempty and start at 1 or more"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnParams {
    pub k: usize,
    pub scaling_neighbor: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Edges(PathBuf),
    Features { path: PathBuf, knn: KnnParams },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub input: InputSource,
    pub config: MboConfig,
    pub strategy: PartitionStrategy,
    pub supervision: Option<(PathBuf, f64)>,
    pub truth: Option<PathBuf>,
    pub out: PathBuf,
    pub trace: bool,
    pub repeat: usize,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunSpec {
    TwoMoons {
        n: usize,
        dim: usize,
        noise: f64,
        seed: u64,
        out: PathBuf,
        truth_out: PathBuf,
    },
    PlantedPartition {
        n: usize,
        communities: usize,
        avg_in: f64,
        avg_out: f64,
        seed: u64,
        out: PathBuf,
        truth_out: PathBuf,
    },
    BuildGraph {
        features: PathBuf,
        knn: KnnParams,
        out: PathBuf,
    },
    Partition(PartitionSpec),
    Metrics {
        labels: PathBuf,
        truth: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) => e.exit_code(),
            CliError::Run(_) => 1,
        }
    }
}

fn knn_params(a: &KnnArgs) -> KnnParams {
    KnnParams {
        k: a.k,
        scaling_neighbor: a.scaling_neighbor.unwrap_or(a.k),
    }
}

fn readable(path: &Path) -> Result<PathBuf> {
    std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn default_truth_path(out: &Path) -> PathBuf {
    out.with_extension("truth.csv")
}

/// Parses and validates argv (including the program name).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let spec = match cli.command {
        Command::Generate(Generator::TwoMoons { n, dim, noise, seed, out, truth_out }) => RunSpec::TwoMoons {
            n,
            dim,
            noise,
            seed,
            truth_out: truth_out.unwrap_or_else(|| default_truth_path(&out)),
            out,
        },
        Command::Generate(Generator::PlantedPartition { n, communities, avg_in, avg_out, seed, out, truth_out }) => {
            RunSpec::PlantedPartition {
                n,
                communities,
                avg_in,
                avg_out,
                seed,
                truth_out: truth_out.unwrap_or_else(|| default_truth_path(&out)),
                out,
            }
        }
        Command::BuildGraph(a) => RunSpec::BuildGraph {
            features: readable(&a.features)?,
            knn: knn_params(&a.knn),
            out: a.out,
        },
        Command::Partition(a) => RunSpec::Partition(partition_spec(*a)?),
        Command::Metrics(a) => RunSpec::Metrics {
            labels: readable(&a.labels)?,
            truth: readable(&a.truth)?,
        },
    };
    Ok(spec)
}

fn partition_spec(a: PartitionArgs) -> Result<PartitionSpec> {
    let input = match (a.edges, a.features) {
        (Some(e), None) => InputSource::Edges(readable(&e)?),
        (None, Some(f)) => InputSource::Features {
            path: readable(&f)?,
            knn: knn_params(&a.knn),
        },
        _ => return Err(Error::param("input", "give exactly one of --edges and --features")),
    };
    let strategy = if a.recursive {
        PartitionStrategy::Recursive(RecursiveParams {
            split_factor: a.split_factor,
            min_size: a.min_size,
            gain_tol: a.gain_tol,
        })
    } else if let Some((lo, hi)) = a.sweep {
        PartitionStrategy::Sweep(lo, hi)
    } else {
        PartitionStrategy::Fixed(a.nhat.unwrap_or(2))
    };
    strategy.validate()?;
    if a.repeat == 0 {
        return Err(Error::param("repeat", "must be at least 1"));
    }
    let supervision = match a.supervision {
        Some(p) if !matches!(strategy, PartitionStrategy::Fixed(_)) => {
            return Err(Error::param(
                "supervision",
                format!("{} is only supported with a fixed --nhat", p.display()),
            ))
        }
        Some(p) => Some((readable(&p)?, a.supervision_weight)),
        None => None,
    };
    let nhat = match strategy {
        PartitionStrategy::Fixed(n) => n,
        PartitionStrategy::Sweep(_, hi) => hi,
        PartitionStrategy::Recursive(p) => p.split_factor,
    };
    let config = MboConfig {
        n_eig: a.neig,
        dt: a.dt,
        max_iters: a.max_iters,
        seed: a.seed,
        refine: !a.no_refine,
        init: match a.init {
            InitArg::Random => InitKind::Random,
            InitArg::Kmeans => InitKind::KMeans,
        },
        ..MboConfig::new(a.gamma, nhat)
    };
    config.validate()?;
    Ok(PartitionSpec {
        input,
        config,
        strategy,
        supervision,
        truth: a.truth.map(|t| readable(&t)).transpose()?,
        out: a.out,
        trace: a.trace,
        repeat: a.repeat,
        cache_dir: a.cache_dir,
    })
}

/// Builds the rayon pool, honouring [`THREADS_ENV`]. Later calls are no-ops.
pub fn init_thread_pool() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 && rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialised");
        }
    }
}

/// `PREFIX` + `suffix`, e.g. `runs/a` + `.labels.csv`.
pub fn output_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_input(input: &InputSource) -> Result<SparseGraph> {
    match input {
        InputSource::Edges(p) => io::load_edge_list(p),
        InputSource::Features { path, knn } => {
            let f = io::load_features(path)?;
            knn_graph(&f, knn.k, knn.scaling_neighbor)
        }
    }
}

/// Everything a partition run produced.
#[derive(Debug, Clone)]
pub struct PartitionReport {
    pub batch: RunBatch,
    pub best_labels: Labels,
    pub best_seed: u64,
}

struct SingleRun {
    labels: Labels,
    modularity: f64,
    mbo: Option<MboResult>,
    wall_time_ms: f64,
}

/// Runs the partition pipeline and writes its outputs.
pub fn run_partition(spec: &PartitionSpec) -> Result<PartitionReport> {
    let graph = load_input(&spec.input)?;
    let truth = spec.truth.as_deref().map(io::load_labels).transpose()?;
    if let Some(t) = &truth {
        if t.len() != graph.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} truth labels", graph.n_nodes()),
                actual: format!("{}", t.len()),
            });
        }
    }
    let supervision = match &spec.supervision {
        Some((path, weight)) => {
            let known = io::load_node_labels(path)?;
            Some(Supervision::from_known_labels(&known, spec.config.nhat, *weight)?)
        }
        None => None,
    };
    let cache = match &spec.cache_dir {
        Some(d) => EigenCache::with_dir(d),
        None => EigenCache::in_memory(),
    };
    // Compute the shared basis up front so parallel repeats only read it.
    let opts = EigenOptions {
        seed: spec.config.seed,
        ..EigenOptions::default()
    };
    match spec.strategy {
        PartitionStrategy::Fixed(_) => {
            cache.get_or_compute(&graph, spec.config.gamma, clamp_n_eig(spec.config.n_eig(), graph.n_nodes()), &opts)?;
        }
        PartitionStrategy::Sweep(_, hi) => {
            cache.get_or_compute(&graph, spec.config.gamma, clamp_n_eig(5 * hi, graph.n_nodes()), &opts)?;
        }
        PartitionStrategy::Recursive(_) => {}
    }

    let runs: Vec<SingleRun> = (0..spec.repeat as u64)
        .into_par_iter()
        .map(|r| {
            let config = spec.config.clone().with_seed(spec.config.seed + r);
            let start = Instant::now();
            let (labels, modularity, mbo) = match spec.strategy {
                PartitionStrategy::Fixed(_) => {
                    let res = fixed_partition(&graph, &config, supervision.as_ref(), &cache)?;
                    (res.labels.clone(), res.modularity, Some(res))
                }
                PartitionStrategy::Sweep(lo, hi) => {
                    let res = sweep_nhat(&graph, lo..=hi, &config, &cache)?.best;
                    (res.labels.clone(), res.modularity, Some(res))
                }
                PartitionStrategy::Recursive(p) => {
                    let res = recursive_partition(&graph, &config, &p)?;
                    (res.labels, res.modularity, None)
                }
            };
            Ok(SingleRun {
                labels,
                modularity,
                mbo,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<Result<_>>()?;

    let mut batch = RunBatch::default();
    for (r, run) in runs.iter().enumerate() {
        batch.push(RunRecord {
            seed: spec.config.seed + r as u64,
            modularity: run.modularity,
            classification: truth.as_ref().map(|t| classification_rate(&run.labels, t)).transpose()?,
            wall_time_ms: run.wall_time_ms,
        });
    }
    let best = (0..runs.len())
        .reduce(|a, b| if runs[b].modularity > runs[a].modularity { b } else { a })
        .expect("repeat >= 1");
    let best_run = &runs[best];
    io::save_labels(&output_path(&spec.out, ".labels.csv"), &best_run.labels)?;
    io::save_batch(&output_path(&spec.out, ".batch.csv"), &batch)?;
    if spec.trace {
        match &best_run.mbo {
            Some(res) => {
                io::save_trace(&output_path(&spec.out, ".trace.csv"), res, &graph)?;
                io::save_matrix(&output_path(&spec.out, ".u.csv"), &res.u.to_dense())?;
            }
            None => log::warn!("recursive runs have no single energy trace; skipping --trace output"),
        }
    }
    Ok(PartitionReport {
        batch,
        best_labels: best_run.labels.clone(),
        best_seed: spec.config.seed + best as u64,
    })
}

/// Executes a spec, printing a short report to stdout.
pub fn run(spec: &RunSpec) -> Result<()> {
    match spec {
        RunSpec::TwoMoons { n, dim, noise, seed, out, truth_out } => {
            let (f, truth) = two_moons(*n, *dim, *noise, *seed)?;
            io::save_features(out, &f)?;
            io::save_labels(truth_out, &truth)?;
            println!("wrote {} points to {} and labels to {}", n, out.display(), truth_out.display());
        }
        RunSpec::PlantedPartition { n, communities, avg_in, avg_out, seed, out, truth_out } => {
            let (g, truth) = planted_partition(*n, *communities, *avg_in, *avg_out, *seed)?;
            io::save_edge_list(out, &g)?;
            io::save_labels(truth_out, &truth)?;
            println!("wrote {} edges to {} and labels to {}", g.n_edges(), out.display(), truth_out.display());
        }
        RunSpec::BuildGraph { features, knn, out } => {
            let f = io::load_features(features)?;
            let g = knn_graph(&f, knn.k, knn.scaling_neighbor)?;
            io::save_edge_list(out, &g)?;
            println!("wrote {} nodes, {} edges to {}", g.n_nodes(), g.n_edges(), out.display());
        }
        RunSpec::Partition(p) => {
            let report = run_partition(p)?;
            let b = &report.batch;
            println!("runs: {}", b.runs.len());
            println!("best modularity: {:.6} (seed {})", b.best(BatchField::Modularity).unwrap(), report.best_seed);
            if let Some(c) = b.best(BatchField::Classification) {
                println!("best classification: {c:.6}");
            }
            println!("communities: {}", report.best_labels.n_communities());
            println!("median time: {:.1} ms", b.median_time_ms().unwrap());
        }
        RunSpec::Metrics { labels, truth } => {
            let l = io::load_labels(labels)?;
            let t = io::load_labels(truth)?;
            println!("purity: {:.6}", purity(&l, &t)?);
            println!("classification: {:.6}", classification_rate(&l, &t)?);
        }
    }
    Ok(())
}

/// Parses argv, runs, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let spec = match parse_args(argv) {
        Ok(s) => s,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    init_thread_pool();
    match run(&spec) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
