//! Command implementations behind the `meshpart` binary.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use meshpart::metrics::{evaluate, geometric_mean, harmonic_mean};
use meshpart::{
    balanced_kmeans, generate_grid_mesh, generate_random_geometric, load_metis_graph,
    rcb_partition, read_partition, sfc_partition, write_partition, GeometricGraph, KMeansSettings,
    MetricsReport, Partition, RankWorld,
};

#[derive(Debug, Parser)]
#[command(name = "meshpart", version, about = "Geometric mesh partitioning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated mesh as METIS graph and coordinate files.
    Generate(GenerateArgs),
    /// Partition a mesh and write one block id per line.
    Partition(PartitionArgs),
    /// Report quality metrics of a partition.
    Evaluate(EvaluateArgs),
    /// Run several algorithms on several meshes and compare them.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeshKind {
    Grid,
    Rgg,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: MeshKind,
    /// Vertices per axis (grid).
    #[arg(long, default_value_t = 16)]
    pub side: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Vertex count (rgg).
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Target average degree (rgg).
    #[arg(long, default_value_t = 12.0)]
    pub deg: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub coords: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Geographer,
    Rcb,
    Sfc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Geographer => "geographer",
            Algorithm::Rcb => "rcb",
            Algorithm::Sfc => "sfc",
        }
    }
}

/// Parameters shared by `partition` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct RunParams {
    /// Number of blocks.
    #[arg(long)]
    pub k: usize,
    /// Simulated rank count; defaults to k.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 0.03)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl RunParams {
    fn validate(&self) -> Result<()> {
        ensure!(self.k >= 1, "--k must be at least 1");
        ensure!(self.p != Some(0), "--p must be at least 1");
        ensure!(self.epsilon >= 0.0, "--epsilon must be nonnegative");
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long, value_enum, default_value = "geographer")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub params: RunParams,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub coords: PathBuf,
    /// Partition output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional machine-readable metrics of the result.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub coords: PathBuf,
    #[arg(long)]
    pub partition: PathBuf,
    /// Block count; defaults to the largest block id plus one.
    #[arg(long)]
    pub k: Option<usize>,
    /// Machine-readable copy of the report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Graph files, paired in order with --coords.
    #[arg(long, required = true)]
    pub graph: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub coords: Vec<PathBuf>,
    /// Algorithms to run; ratios are taken against geographer.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "geographer,rcb,sfc"
    )]
    pub algo: Vec<Algorithm>,
    #[command(flatten)]
    pub params: RunParams,
    /// One record per (instance, algorithm).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Process exit status of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// The partition was written but violates the imbalance bound.
    Unbalanced,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Unbalanced => 2,
        }
    }
}

pub fn run(cli: Cli, out: &mut impl Write) -> Result<Outcome> {
    match cli.command {
        Command::Generate(args) => cmd_generate(&args, out),
        Command::Partition(args) => cmd_partition(&args, out),
        Command::Evaluate(args) => cmd_evaluate(&args, out),
        Command::Compare(args) => cmd_compare(&args, out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

pub fn load_graph(graph: &Path, coords: &Path) -> Result<GeometricGraph> {
    load_metis_graph(open(graph)?, open(coords)?)
        .with_context(|| format!("loading {} with {}", graph.display(), coords.display()))
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut impl Write) -> Result<Outcome> {
    let graph = match args.kind {
        MeshKind::Grid => generate_grid_mesh(args.side, args.dim)?,
        MeshKind::Rgg => generate_random_geometric(args.n, args.dim, args.deg, args.seed)?,
    };
    let mut g = create(&args.graph)?;
    meshpart::mesh::write_metis_graph(&graph, &mut g)?;
    g.flush()?;
    let mut c = create(&args.coords)?;
    meshpart::mesh::write_coordinates(&graph, &mut c)?;
    c.flush()?;
    writeln!(
        out,
        "generated {} vertices, {} edges",
        graph.num_vertices(),
        graph.num_edges()
    )?;
    Ok(Outcome::Success)
}

/// Result of running one algorithm.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub partition: Partition,
    pub imbalance: f64,
    pub balanced: bool,
    /// Movement iterations; zero for the one-shot baselines.
    pub iterations: usize,
    pub seconds: f64,
}

pub fn run_algorithm(
    graph: &GeometricGraph,
    algo: Algorithm,
    params: &RunParams,
) -> Result<RunResult> {
    params.validate()?;
    let start = Instant::now();
    let (partition, iterations) = match algo {
        Algorithm::Geographer => {
            let mut settings = KMeansSettings::new(params.k);
            settings.epsilon = params.epsilon;
            settings.seed = params.seed;
            let world = RankWorld::scatter(graph, params.p.unwrap_or(params.k))?;
            let outcome = balanced_kmeans(graph, &settings, world)?;
            (outcome.partition, outcome.iterations.len())
        }
        Algorithm::Rcb => (rcb_partition(graph, params.k)?, 0),
        Algorithm::Sfc => (sfc_partition(graph, params.k)?, 0),
    };
    let seconds = start.elapsed().as_secs_f64();
    let imbalance = meshpart::metrics::imbalance(graph, &partition)?;
    Ok(RunResult {
        partition,
        imbalance,
        balanced: imbalance <= params.epsilon,
        iterations,
        seconds,
    })
}

pub fn cmd_partition(args: &PartitionArgs, out: &mut impl Write) -> Result<Outcome> {
    let graph = load_graph(&args.graph, &args.coords)?;
    let result = run_algorithm(&graph, args.algo, &args.params)?;
    let mut sink = create(&args.out)?;
    write_partition(&result.partition, &mut sink)?;
    sink.flush()?;
    let cut = meshpart::metrics::edge_cut(&graph, &result.partition)?;
    if let Some(path) = &args.report {
        let report = evaluate(&graph, &result.partition)?;
        std::fs::write(path, report.to_tsv())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    writeln!(
        out,
        "algo={} k={} epsilon={} imbalance={:.6} balanced={} iterations={} cut={} time={:.3}s",
        args.algo.name(),
        args.params.k,
        args.params.epsilon,
        result.imbalance,
        result.balanced,
        result.iterations,
        cut,
        result.seconds
    )?;
    Ok(if result.balanced {
        Outcome::Success
    } else {
        Outcome::Unbalanced
    })
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut impl Write) -> Result<Outcome> {
    let graph = load_graph(&args.graph, &args.coords)?;
    let part = read_partition(open(&args.partition)?, args.k)
        .with_context(|| format!("reading {}", args.partition.display()))?;
    if part.len() != graph.num_vertices() {
        bail!(
            "{} has {} entries but {} has {} vertices",
            args.partition.display(),
            part.len(),
            args.graph.display(),
            graph.num_vertices()
        );
    }
    let report = evaluate(&graph, &part)?;
    write!(out, "{report}")?;
    if let Some(path) = &args.report {
        std::fs::write(path, report.to_tsv())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(Outcome::Success)
}

/// Metrics of one (instance, algorithm) cell; `None` when the run failed.
#[derive(Debug, Clone)]
pub struct Cell {
    pub instance: String,
    pub algo: String,
    pub report: Option<MetricsReport>,
    pub balanced: bool,
    pub seconds: f64,
}

pub const COMPARED_METRICS: [&str; 4] = ["edge_cut", "max_comm", "total_comm", "diameter"];

/// Aggregated ratios of one algorithm against the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub algo: String,
    /// Per metric in [`COMPARED_METRICS`] order; `None` when no instance
    /// has both cells.
    pub ratios: [Option<f64>; 4],
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

fn metric_values(r: &MetricsReport) -> [f64; 4] {
    [
        r.edge_cut,
        r.max_comm as f64,
        r.total_comm as f64,
        r.harmonic_mean_diameter.unwrap_or(f64::INFINITY),
    ]
}

/// Ratios of every algorithm against `reference`, per instance, aggregated
/// by geometric mean; diameters use the harmonic mean.
pub fn ratio_table(cells: &[Cell], reference: &str) -> Vec<RatioRow> {
    let mut algos: Vec<&str> = Vec::new();
    for c in cells {
        if !algos.contains(&c.algo.as_str()) {
            algos.push(&c.algo);
        }
    }
    algos
        .into_iter()
        .map(|algo| {
            let mut per_metric: [Vec<f64>; 4] = Default::default();
            for cell in cells.iter().filter(|c| c.algo == algo) {
                let base = cells
                    .iter()
                    .find(|c| c.algo == reference && c.instance == cell.instance)
                    .and_then(|c| c.report.as_ref());
                let (Some(mine), Some(base)) = (cell.report.as_ref(), base) else {
                    continue;
                };
                let (mine, base) = (metric_values(mine), metric_values(base));
                for m in 0..4 {
                    per_metric[m].push(ratio(mine[m], base[m]));
                }
            }
            let mut ratios = [None; 4];
            for m in 0..4 {
                if per_metric[m].is_empty() {
                    continue;
                }
                let agg = if m == 3 {
                    harmonic_mean(&per_metric[m])
                } else {
                    geometric_mean(&per_metric[m])
                };
                ratios[m] = agg.ok();
            }
            RatioRow {
                algo: algo.to_string(),
                ratios,
            }
        })
        .collect()
}

pub fn format_ratio_table(rows: &[RatioRow]) -> String {
    let mut s = format!("{:<12}", "algo");
    for m in COMPARED_METRICS {
        let _ = write!(s, " {m:>12}");
    }
    s.push('\n');
    for row in rows {
        let _ = write!(s, "{:<12}", row.algo);
        for r in row.ratios {
            match r {
                Some(v) => {
                    let _ = write!(s, " {v:>12.4}");
                }
                None => {
                    let _ = write!(s, " {:>12}", "-");
                }
            }
        }
        s.push('\n');
    }
    s
}

pub const RECORD_HEADER: &str =
    "instance\talgo\tk\tedge_cut\tmax_comm\ttotal_comm\timbalance\tharmonic_mean_diameter\tbalanced\tseconds";

/// One tab-separated record per cell, fixed field order.
pub fn format_records(cells: &[Cell], k: usize) -> String {
    let mut s = String::from(RECORD_HEADER);
    s.push('\n');
    for c in cells {
        match &c.report {
            Some(r) => {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{k}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    c.instance,
                    c.algo,
                    r.edge_cut,
                    r.max_comm,
                    r.total_comm,
                    r.imbalance,
                    r.harmonic_mean_diameter
                        .map_or_else(|| "unbounded".to_string(), |d| d.to_string()),
                    c.balanced,
                    c.seconds
                );
            }
            None => {
                let _ = writeln!(s, "{}\t{}\t{k}\tmissing", c.instance, c.algo);
            }
        }
    }
    s
}

pub fn cmd_compare(args: &CompareArgs, out: &mut impl Write) -> Result<Outcome> {
    args.params.validate()?;
    ensure!(
        args.graph.len() == args.coords.len(),
        "need one --coords per --graph ({} vs {})",
        args.graph.len(),
        args.coords.len()
    );
    ensure!(
        args.algo.len() >= 2,
        "compare needs at least two algorithms"
    );
    ensure!(
        args.algo.contains(&Algorithm::Geographer),
        "ratios are taken against geographer, include it in --algo"
    );
    let mut cells = Vec::new();
    for (graph_path, coords_path) in args.graph.iter().zip(&args.coords) {
        let instance = graph_path.display().to_string();
        let graph = load_graph(graph_path, coords_path);
        for &algo in &args.algo {
            let run = graph
                .as_ref()
                .map_err(|e| anyhow::anyhow!("{e:#}"))
                .and_then(|g| {
                    let result = run_algorithm(g, algo, &args.params)?;
                    let report = evaluate(g, &result.partition)?;
                    Ok((result, report))
                });
            let cell = match run {
                Ok((result, report)) => Cell {
                    instance: instance.clone(),
                    algo: algo.name().to_string(),
                    report: Some(report),
                    balanced: result.balanced,
                    seconds: result.seconds,
                },
                Err(e) => {
                    writeln!(out, "{instance} {}: {e:#}", algo.name())?;
                    Cell {
                        instance: instance.clone(),
                        algo: algo.name().to_string(),
                        report: None,
                        balanced: false,
                        seconds: 0.0,
                    }
                }
            };
            cells.push(cell);
        }
    }
    let rows = ratio_table(&cells, Algorithm::Geographer.name());
    write!(out, "{}", format_ratio_table(&rows))?;
    if let Some(path) = &args.report {
        std::fs::write(path, format_records(&cells, args.params.k))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(Outcome::Success)
}
