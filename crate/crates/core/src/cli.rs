//! Command-line front end. Every command is deterministic given its
//! [`RunManifest`]: no clocks, no ambient randomness, ordered output.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::fiber_mcmc::{estimate_pvalue, run_chains, ChainConfig, ChainObserver, ChainReport};
use crate::graph_model::{
    degree_sequence, parse_capacities, parse_degree_sequence, parse_edge_list, Capacities, DegreeSequence, EdgeList,
    EdgeVector, Graph, LoopPolicy, Move,
};
use crate::graver_gen::{sample_graver_element, GenMode, DEFAULT_MAX_ATTEMPTS};
use crate::oracles::{enumerate_fiber_limited, DEFAULT_NODE_LIMIT};
use crate::statistics::{fit_beta_mle, BetaFit, StatKind, StatTracker, DEFAULT_MAX_ITER, DEFAULT_TOL};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "graver-mcmc",
    version,
    about = "Graver-basis MCMC for graphs with fixed degrees"
)]
pub struct Cli {
    /// Write the run manifest here instead of stderr.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Draw random primitive moves supported on a graph.
    SampleMove(SampleMoveArgs),
    /// Conditional goodness-of-fit test of the beta model.
    TestBeta(TestBetaArgs),
    /// List every element of a fiber.
    Enumerate(EnumerateArgs),
    /// Fit the beta model by maximum likelihood.
    Fit(FitArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SampleMove(_) => "sample-move",
            Command::TestBeta(_) => "test-beta",
            Command::Enumerate(_) => "enumerate",
            Command::Fit(_) => "fit",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GraphInput {
    /// Edge list, one `i j` pair per line with 1-based labels.
    pub graph: PathBuf,
    /// Number of vertices (defaults to the largest label).
    #[arg(long)]
    pub vertices: Option<usize>,
    /// Drop self-loops instead of rejecting the file.
    #[arg(long)]
    pub drop_loops: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleMoveArgs {
    #[command(flatten)]
    pub input: GraphInput,
    /// Only generate square-free moves.
    #[arg(long)]
    pub square_free: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Rejection attempts per move.
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TestBetaArgs {
    /// Observed graph.
    #[command(flatten)]
    pub input: GraphInput,
    /// Underlying graph the model lives on.
    #[arg(long, conflicts_with = "complete")]
    pub underlying: Option<PathBuf>,
    /// Use the complete graph as the underlying graph (the default).
    #[arg(long)]
    pub complete: bool,
    /// Total chain steps per chain, burn-in included.
    #[arg(long, default_value_t = 10_100_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 100_000)]
    pub burn_in: u64,
    #[arg(long, default_value_t = 1)]
    pub thinning: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent chains, run concurrently on seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, value_delimiter = ',', default_value = "chi2,clustering,triangles")]
    pub stats: Vec<StatKind>,
    /// Histogram bins per statistic.
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Directory for report.json, histogram CSVs and manifest.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also write every sampled statistic value to samples.csv.
    #[arg(long, requires = "out_dir")]
    pub samples_csv: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub input: GraphInput,
    /// Degree sequence file: one comma-separated line.
    pub degrees: PathBuf,
    /// `one`, `unbounded`, or a file of `i j cap` lines.
    #[arg(long, default_value = "one")]
    pub caps: String,
    /// Abort once the search visits this many nodes.
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    pub max_nodes: u64,
    /// Print only the count.
    #[arg(long)]
    pub count_only: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Observed graph; its degrees are the sufficient statistic.
    #[arg(long, required_unless_present = "degrees", conflicts_with = "degrees")]
    pub graph: Option<PathBuf>,
    /// Degree sequence file instead of an observed graph.
    #[arg(long)]
    pub degrees: Option<PathBuf>,
    /// Underlying graph (defaults to the complete graph).
    #[arg(long)]
    pub underlying: Option<PathBuf>,
    #[arg(long)]
    pub drop_loops: bool,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub flags: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Reads input files and records their digests for the manifest.
#[derive(Debug, Default)]
struct Inputs {
    digests: Vec<InputDigest>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> anyhow::Result<String> {
        let bytes = fs::read(path)
            .map_err(Error::from)
            .with_context(|| format!("cannot read {}", path.display()))?;
        self.digests.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes)
            .map_err(|_| Error::InvalidGraph(format!("{} is not UTF-8", path.display())))
            .map_err(Into::into)
    }

    fn edge_list(&mut self, path: &Path, drop_loops: bool) -> anyhow::Result<EdgeList> {
        let policy = if drop_loops {
            LoopPolicy::Drop
        } else {
            LoopPolicy::Reject
        };
        let text = self.read(path)?;
        let list = parse_edge_list(&text, policy).with_context(|| format!("in {}", path.display()))?;
        for v in &list.dropped_loops {
            eprintln!("warning: dropped loop at vertex {v} in {}", path.display());
        }
        Ok(list)
    }

    fn graph(&mut self, input: &GraphInput) -> anyhow::Result<Graph> {
        let list = self.edge_list(&input.graph, input.drop_loops)?;
        vertex_count(&list, input.vertices)
            .and_then(|n| list.to_graph(Some(n)))
            .with_context(|| format!("in {}", input.graph.display()))
    }
}

fn vertex_count(list: &EdgeList, vertices: Option<usize>) -> crate::Result<usize> {
    match vertices {
        Some(n) if n < list.max_label => Err(Error::InvalidGraph(format!(
            "--vertices {n} is smaller than the largest label {}",
            list.max_label
        ))),
        Some(n) => Ok(n),
        None => Ok(list.max_label),
    }
}

/// Exit status for an error: 2 input, 3 configuration, 4 guard or budget,
/// 5 degenerate model.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Io(_)
            | Error::Parse { .. }
            | Error::InvalidGraph(_)
            | Error::InvalidEdge(..)
            | Error::InvalidWalk(_)
            | Error::InvalidMove(_)
            | Error::NotPrimitive,
        ) => 2,
        Some(Error::Config(_) | Error::EmptySamples) => 3,
        Some(Error::InstanceTooLarge { .. } | Error::Exhausted { .. } | Error::BudgetTooSmall { .. }) => 4,
        Some(Error::BoundaryMle { .. } | Error::DegenerateProbability(..) | Error::DegenerateTree(_)) => 5,
        None => 1,
    }
}

/// Parses `args`, runs the command with output on stdout and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = run(&cli, &mut out);
    let flushed = out.flush();
    match result.and(flushed.map_err(|e| Error::from(e).into())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Runs a parsed command, writing its primary output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut inputs = Inputs::default();
    let (seed, out_dir) = match &cli.command {
        Command::SampleMove(a) => (Some(a.seed), None),
        Command::TestBeta(a) => (Some(a.seed), a.out_dir.as_deref()),
        Command::Enumerate(_) | Command::Fit(_) => (None, None),
    };
    let result = match &cli.command {
        Command::SampleMove(a) => sample_move(a, &mut inputs, out),
        Command::TestBeta(a) => test_beta(a, &mut inputs, out),
        Command::Enumerate(a) => enumerate(a, &mut inputs, out),
        Command::Fit(a) => fit(a, &mut inputs, out),
    };
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        command: cli.command.name().to_string(),
        flags: serde_json::to_value(&cli.command)?,
        seed,
        inputs: inputs.digests,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    let target = cli
        .manifest
        .clone()
        .or_else(|| out_dir.filter(|d| d.is_dir()).map(|d| d.join("manifest.json")));
    match target {
        Some(path) => write_file(&path, text.as_bytes())?,
        None => eprint!("{text}"),
    }
    result
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes)
        .map_err(Error::from)
        .with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out).map_err(Error::from)?;
    Ok(())
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
enum MoveSlot {
    Ok {
        schema_version: u32,
        slot: usize,
        walk: String,
        /// `[i, j, z_ij]` with 1-based labels, nonzero entries only.
        edges: Vec<(usize, usize, i32)>,
    },
    Exhausted {
        schema_version: u32,
        slot: usize,
        attempts: usize,
    },
}

fn move_entries(z: &Move) -> Vec<(usize, usize, i32)> {
    z.iter().map(|(e, v)| (e.lo() + 1, e.hi() + 1, v)).collect()
}

fn sample_move(args: &SampleMoveArgs, inputs: &mut Inputs, out: &mut dyn Write) -> anyhow::Result<()> {
    let graph = inputs.graph(&args.input)?;
    let mode = GenMode::new(args.square_free, args.max_attempts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut exhausted = 0;
    for slot in 0..args.count {
        let record = match sample_graver_element(&graph, mode, &mut rng) {
            Ok(el) => MoveSlot::Ok {
                schema_version: SCHEMA_VERSION,
                slot,
                walk: el.walk.to_string(),
                edges: move_entries(&el.mv),
            },
            Err(Error::Exhausted { attempts }) => {
                exhausted += 1;
                MoveSlot::Exhausted {
                    schema_version: SCHEMA_VERSION,
                    slot,
                    attempts,
                }
            }
            Err(e) => return Err(e.into()),
        };
        write_json(out, &record)?;
    }
    if exhausted > 0 {
        return Err(anyhow!(Error::Exhausted {
            attempts: args.max_attempts
        }))
        .context(format!("{exhausted} of {} move slots exhausted", args.count));
    }
    Ok(())
}

/// Statistic values of every retained sample, one column per statistic.
struct StatCollector {
    tracker: StatTracker,
    columns: Vec<Vec<f64>>,
}

impl ChainObserver for StatCollector {
    fn on_accept(&mut self, _state: &EdgeVector, mv: &Move) {
        self.tracker.apply(mv);
    }

    fn on_sample(&mut self, _state: &EdgeVector) {
        for (col, v) in self.columns.iter_mut().zip(self.tracker.values()) {
            col.push(v);
        }
    }
}

#[derive(Serialize)]
struct FitSummary<'a> {
    converged: bool,
    iterations: usize,
    residual: f64,
    alpha: &'a [f64],
}

#[derive(Serialize)]
struct BetaReport<'a> {
    schema_version: u32,
    vertices: usize,
    underlying_edges: usize,
    observed_edges: usize,
    degrees: String,
    fit: FitSummary<'a>,
    observed: BTreeMap<&'static str, f64>,
    p_values: BTreeMap<&'static str, f64>,
    chain: ChainReport,
    chains: Vec<ChainReport>,
}

/// Equal-width histogram over the sampled range: `(lower, upper, count)`.
/// A constant sample gives a single zero-width bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, u64)> {
    let Some(lo) = values.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    let hi = values.iter().copied().fold(lo, f64::max);
    if hi == lo || bins == 0 {
        return vec![(lo, hi, values.len() as u64)];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let upper = if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 };
            (lo + width * k as f64, upper, c)
        })
        .collect()
}

fn test_beta(args: &TestBetaArgs, inputs: &mut Inputs, out: &mut dyn Write) -> anyhow::Result<()> {
    if args.stats.is_empty() {
        bail!(Error::Config("no statistics requested".into()));
    }
    let observed = inputs.edge_list(&args.input.graph, args.input.drop_loops)?;
    let underlying = match &args.underlying {
        Some(path) => {
            let list = inputs.edge_list(path, args.input.drop_loops)?;
            let n = vertex_count(&list, args.input.vertices)?.max(observed.max_label);
            list.to_graph(Some(n))
                .with_context(|| format!("in {}", path.display()))?
        }
        None => Graph::complete(vertex_count(&observed, args.input.vertices)?),
    };
    let n = underlying.vertex_count();
    let obs_graph = observed
        .to_graph(Some(n))
        .with_context(|| format!("in {}", args.input.graph.display()))?;
    let x0 = EdgeVector::from_edges(&underlying, obs_graph.edges().iter().copied())
        .context("observed graph is not a subgraph of the underlying graph")?;
    let caps = Capacities::One;
    let d = degree_sequence(&underlying, &x0);

    let mut config = ChainConfig::new(args.steps, args.burn_in, args.seed);
    config.thinning = args.thinning;
    config.mode = GenMode::new(true, args.max_attempts)?;
    config.validate()?;

    let fit = fit_beta_mle(&d, &underlying, &caps, args.tol, args.max_iter)?;
    if !fit.converged {
        eprintln!(
            "warning: MLE did not converge in {} iterations (residual {:e})",
            fit.iterations, fit.residual
        );
    }
    let needs_fit = args.stats.contains(&StatKind::Chi2);
    let fit_ref = needs_fit.then_some(&fit);
    let observed_tracker = StatTracker::new(&underlying, &x0, &args.stats, fit_ref, &caps)?;

    let runs = run_chains(&x0, &underlying, &caps, &config, args.chains, |_| {
        Ok(StatCollector {
            tracker: observed_tracker.clone(),
            columns: vec![Vec::new(); args.stats.len()],
        })
    })?;
    let reports: Vec<ChainReport> = runs.iter().map(|(_, r)| r.clone()).collect();
    let merged = ChainReport::merged(&reports).expect("at least one chain");

    let mut observed_values = BTreeMap::new();
    let mut p_values = BTreeMap::new();
    let mut pooled = Vec::with_capacity(args.stats.len());
    for (k, &kind) in args.stats.iter().enumerate() {
        let all: Vec<f64> = runs.iter().flat_map(|(c, _)| c.columns[k].iter().copied()).collect();
        let obs = observed_tracker.value(kind);
        observed_values.insert(kind.name(), obs);
        p_values.insert(kind.name(), estimate_pvalue(&all, obs)?);
        pooled.push(all);
    }

    let report = BetaReport {
        schema_version: SCHEMA_VERSION,
        vertices: n,
        underlying_edges: underlying.edge_count(),
        observed_edges: x0.support_len(),
        degrees: d.to_string(),
        fit: FitSummary {
            converged: fit.converged,
            iterations: fit.iterations,
            residual: fit.residual,
            alpha: &fit.alphas,
        },
        observed: observed_values,
        p_values,
        chain: merged,
        chains: reports,
    };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    out.write_all(text.as_bytes()).map_err(Error::from)?;

    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)
            .map_err(Error::from)
            .with_context(|| format!("cannot create {}", dir.display()))?;
        write_file(&dir.join("report.json"), text.as_bytes())?;
        for (kind, values) in args.stats.iter().zip(&pooled) {
            let mut csv = String::from("bin_lower,bin_upper,count\n");
            for (lo, hi, c) in histogram(values, args.bins) {
                csv.push_str(&format!("{lo},{hi},{c}\n"));
            }
            write_file(&dir.join(format!("{}_histogram.csv", kind.name())), csv.as_bytes())?;
        }
        if args.samples_csv {
            write_samples_csv(&dir.join("samples.csv"), &args.stats, &runs)?;
        }
    }
    Ok(())
}

fn write_samples_csv(path: &Path, kinds: &[StatKind], runs: &[(StatCollector, ChainReport)]) -> anyhow::Result<()> {
    let file = fs::File::create(path)
        .map_err(Error::from)
        .with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = io::BufWriter::new(file);
    let header: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
    writeln!(w, "chain,sample,{}", header.join(",")).map_err(Error::from)?;
    for (c, (collector, _)) in runs.iter().enumerate() {
        let len = collector.columns.first().map_or(0, Vec::len);
        for s in 0..len {
            let row: Vec<String> = collector.columns.iter().map(|col| col[s].to_string()).collect();
            writeln!(w, "{c},{s},{}", row.join(",")).map_err(Error::from)?;
        }
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn enumerate(args: &EnumerateArgs, inputs: &mut Inputs, out: &mut dyn Write) -> anyhow::Result<()> {
    let list = inputs.edge_list(&args.input.graph, args.input.drop_loops)?;
    let text = inputs.read(&args.degrees)?;
    let d = parse_degree_sequence(&text).with_context(|| format!("in {}", args.degrees.display()))?;
    let n = match args.input.vertices {
        Some(n) => n,
        None => d.len().max(list.max_label),
    };
    if d.len() != n || list.max_label > n {
        bail!(Error::InvalidGraph(format!(
            "degree sequence has {} entries but the graph has {} vertices",
            d.len(),
            n.max(list.max_label)
        )));
    }
    let graph = list.to_graph(Some(n))?;
    let caps = match args.caps.as_str() {
        "one" => Capacities::One,
        "unbounded" => Capacities::Unbounded,
        path => {
            let path = Path::new(path);
            let text = inputs.read(path)?;
            parse_capacities(&text, &graph).with_context(|| format!("in {}", path.display()))?
        }
    };
    let fiber = enumerate_fiber_limited(&d, &graph, &caps, args.max_nodes)?;
    if !args.count_only {
        for x in &fiber {
            writeln!(out, "{x}").map_err(Error::from)?;
        }
    }
    writeln!(out, "# count {}", fiber.len()).map_err(Error::from)?;
    Ok(())
}

#[derive(Serialize)]
struct FitOutput<'a> {
    schema_version: u32,
    #[serde(flatten)]
    fit: &'a BetaFit,
    beta: Vec<f64>,
}

fn fit(args: &FitArgs, inputs: &mut Inputs, out: &mut dyn Write) -> anyhow::Result<()> {
    let (d, min_n): (DegreeSequence, usize) = match (&args.graph, &args.degrees) {
        (Some(path), _) => {
            let list = inputs.edge_list(path, args.drop_loops)?;
            let g = list.to_graph(None)?;
            let x = EdgeVector::from_edges(&g, g.edges().iter().copied())?;
            (degree_sequence(&g, &x), list.max_label)
        }
        (None, Some(path)) => {
            let text = inputs.read(path)?;
            let d = parse_degree_sequence(&text).with_context(|| format!("in {}", path.display()))?;
            let n = d.len();
            (d, n)
        }
        (None, None) => bail!(Error::Config("either --graph or --degrees is required".into())),
    };
    let underlying = match &args.underlying {
        Some(path) => {
            let list = inputs.edge_list(path, args.drop_loops)?;
            list.to_graph(Some(list.max_label.max(min_n)))?
        }
        None => Graph::complete(min_n),
    };
    let d = if d.len() < underlying.vertex_count() {
        let mut padded = d.as_slice().to_vec();
        padded.resize(underlying.vertex_count(), 0);
        DegreeSequence::new(padded)?
    } else {
        d
    };
    let caps = Capacities::One;
    let fit = fit_beta_mle(&d, &underlying, &caps, args.tol, args.max_iter)?;
    let output = FitOutput {
        schema_version: SCHEMA_VERSION,
        beta: fit.betas(),
        fit: &fit,
    };
    let text = serde_json::to_string_pretty(&output)? + "\n";
    out.write_all(text.as_bytes()).map_err(Error::from)?;
    Ok(())
}
