//! `mck`: command line front end for the kernel library. Subcommands run
//! individual kernels on generated or file-based inputs, drive the
//! fault-tolerant MapReduce engine, sweep benchmark suites, and print the
//! analytic models.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mck_core::apsp::{
    count_block_touches, count_sweep_touches, fw_iterative, fw_recursive, DistanceMatrix, FwConfig,
};
use mck_core::bfs::{bfs_parallel, bfs_parallel_find, bfs_seq, bfs_seq_find, UNREACHED};
use mck_core::graph::{read_weighted_edges, Graph};
use mck_core::mapreduce::{mr_matmul_full, parse_fault_plan, JobConfig};
use mck_core::{
    matmul_blocked_with, matmul_naive, matmul_parallel, matmul_strassen, Matrix,
};
use mck_cli::bench::{records_to_csv, run_suite, KernelId, SuiteSpec};
use mck_cli::gen::{self, ValueMode};
use mck_cli::model::{amdahl_bound, LatencyModel, REFERENCE_CLOCK_GHZ};

#[derive(Parser)]
#[command(name = "mck", about = "Multicore kernel playground", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multiply two square matrices.
    Matmul(MatmulArgs),
    /// Breadth-first search from a source vertex.
    Bfs(BfsArgs),
    /// All-pairs shortest paths.
    Apsp(ApspArgs),
    /// Matrix multiply on the fault-tolerant MapReduce engine.
    MrMatmul(MrMatmulArgs),
    /// Run a benchmark suite and emit CSV.
    Bench(BenchArgs),
    /// Generate a matrix or graph file.
    Gen(GenArgs),
    /// Ideal speedup bound for a parallel fraction.
    Amdahl(AmdahlArgs),
    /// Memory hierarchy latency table.
    Latency(LatencyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MatmulAlgo {
    Naive,
    Parallel,
    Blocked,
    Strassen,
    Mr,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenValueMode {
    Int,
    Float,
}

impl From<GenValueMode> for ValueMode {
    fn from(m: GenValueMode) -> ValueMode {
        match m {
            GenValueMode::Int => ValueMode::Int,
            GenValueMode::Float => ValueMode::Float,
        }
    }
}

#[derive(Args)]
struct MatmulArgs {
    /// Matrix order when generating inputs.
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = GenValueMode::Int)]
    mode: GenValueMode,
    #[arg(long, value_enum, default_value_t = MatmulAlgo::Naive)]
    algo: MatmulAlgo,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Recursion cutoff for the blocked and Strassen algorithms.
    #[arg(long, default_value_t = 64)]
    cutoff: usize,
    /// Reduce task count for the MapReduce algorithm (a power of four).
    #[arg(long, default_value_t = 1)]
    reducers: usize,
    /// Read the left operand from a matrix text file instead of generating it.
    #[arg(long)]
    a: Option<PathBuf>,
    /// Read the right operand from a matrix text file.
    #[arg(long)]
    b: Option<PathBuf>,
    /// Write the product as matrix text; print it when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check the result against the plain triple loop.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct BfsArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// seq or parallel.
    #[arg(long, default_value = "seq")]
    algo: String,
    /// Read the graph from an edge list file instead of generating it.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    source: usize,
    /// Stop at this vertex and report the hop count to it.
    #[arg(long)]
    target: Option<usize>,
}

#[derive(Args)]
struct ApspArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// iterative or recursive.
    #[arg(long, default_value = "iterative")]
    algo: String,
    /// Base block order for the recursive algorithm.
    #[arg(long, default_value_t = 64)]
    block: usize,
    /// Read a weighted edge list instead of generating one.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Print matrix entry touch counts for the blocked schedule and a
    /// whole-matrix sweep at the same tile size.
    #[arg(long)]
    touches: bool,
}

#[derive(Args)]
struct MrMatmulArgs {
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    reducers: usize,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Kill plan "worker:after_tasks[,worker:after_tasks...]".
    #[arg(long)]
    fault_plan: Option<String>,
    /// Completed tasks between checkpoints; 0 disables checkpointing.
    #[arg(long, default_value_t = 0)]
    checkpoint_interval: u64,
    /// Kill and recover the master right after this checkpoint (1-based).
    #[arg(long)]
    kill_master_at_checkpoint: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma separated kernel names.
    #[arg(long, default_value = "matmul_naive,matmul_parallel")]
    kernels: String,
    /// Comma separated problem sizes.
    #[arg(long, default_value = "64,128")]
    sizes: String,
    /// Comma separated thread counts (applied to every kernel).
    #[arg(long, default_value = "1")]
    threads: String,
    /// Kernel tuning knob (cutoff, base block order, or reducer count).
    #[arg(long, default_value_t = 0)]
    param: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Edge density for graph kernels.
    #[arg(long, default_value_t = 0.01)]
    density: f64,
    /// Also write the CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Matrix,
    Graph,
    Weighted,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = GenValueMode::Int)]
    mode: GenValueMode,
    /// Write to this file; print to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AmdahlArgs {
    /// Parallel fraction of the workload, in [0, 1).
    #[arg(long)]
    alpha: f64,
}

#[derive(Args)]
struct LatencyArgs {
    #[arg(long, default_value_t = REFERENCE_CLOCK_GHZ)]
    clock_ghz: f64,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Matmul(args) => cmd_matmul(args),
        Command::Bfs(args) => cmd_bfs(args),
        Command::Apsp(args) => cmd_apsp(args),
        Command::MrMatmul(args) => cmd_mr_matmul(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Amdahl(args) => cmd_amdahl(args),
        Command::Latency(args) => cmd_latency(args),
    }
}

fn read_to_string(path: &PathBuf) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_matrix(
    path: &Option<PathBuf>,
    n: usize,
    seed: u64,
    mode: ValueMode,
) -> anyhow::Result<Matrix> {
    match path {
        Some(p) => Ok(Matrix::from_text(&read_to_string(p)?)?),
        None => Ok(gen::gen_matrix(n, seed, mode)?),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            println!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_matmul(args: MatmulArgs) -> anyhow::Result<()> {
    let mode = args.mode.into();
    let a = load_matrix(&args.a, args.n, args.seed, mode)?;
    let b = load_matrix(&args.b, args.n, args.seed.wrapping_add(1), mode)?;
    if a.order() != b.order() {
        bail!("operand orders differ: {} vs {}", a.order(), b.order());
    }
    let c = match args.algo {
        MatmulAlgo::Naive => {
            let (c, stats) = matmul_naive(&a, &b)?;
            eprintln!("scalar multiplications: {}", stats.scalar_multiplications);
            c
        }
        MatmulAlgo::Parallel => matmul_parallel(&a, &b, args.threads)?,
        MatmulAlgo::Blocked => matmul_blocked_with(&a, &b, args.threads, args.cutoff)?,
        MatmulAlgo::Strassen => {
            let (c, stats) = matmul_strassen(&a, &b, args.cutoff)?;
            eprintln!("scalar multiplications: {}", stats.scalar_multiplications);
            c
        }
        MatmulAlgo::Mr => {
            let cfg = JobConfig {
                num_workers: args.threads.max(1),
                seed: args.seed,
                ..JobConfig::default()
            };
            let (c, report) = mr_matmul_full(&a, &b, args.reducers, &cfg)?;
            eprint!("{}", report.text_summary());
            c
        }
    };
    if args.verify {
        let (want, _) = matmul_naive(&a, &b)?;
        if c != want {
            bail!("result differs from the plain triple loop");
        }
        eprintln!("verified against the plain triple loop");
    }
    emit(&args.out, &c.to_text())
}

fn cmd_bfs(args: BfsArgs) -> anyhow::Result<()> {
    let g = match &args.input {
        Some(p) => Graph::from_text(&read_to_string(p)?)?,
        None => gen::gen_graph(args.n, args.density, args.seed)?,
    };
    let result = match (args.algo.as_str(), args.target) {
        ("seq", None) => bfs_seq(&g, args.source)?,
        ("seq", Some(t)) => bfs_seq_find(&g, args.source, |v| v == t)?,
        ("parallel", None) => bfs_parallel(&g, args.source, args.threads)?,
        ("parallel", Some(t)) => bfs_parallel_find(&g, args.source, args.threads, |v| v == t)?,
        (other, _) => bail!("unknown bfs algorithm {other:?}; expected seq or parallel"),
    };
    let reached = result.level.iter().filter(|&&l| l != UNREACHED).count();
    println!(
        "source {}: reached {} of {} vertices",
        result.source,
        reached,
        g.vertex_count()
    );
    if let Some(t) = args.target {
        match result.found {
            Some(v) => println!("target {t} found at vertex {v}, level {}", result.level[v]),
            None => println!("target {t} not reachable"),
        }
    } else {
        for (v, l) in result.level.iter().enumerate() {
            if *l == UNREACHED {
                println!("{v} unreached");
            } else {
                println!("{v} {l}");
            }
        }
    }
    Ok(())
}

fn cmd_apsp(args: ApspArgs) -> anyhow::Result<()> {
    let w = match &args.input {
        Some(p) => {
            let (n, edges) = read_weighted_edges(&read_to_string(p)?)?;
            DistanceMatrix::from_edges(n, &edges)?
        }
        None => DistanceMatrix::from_edges(
            args.n,
            &gen::gen_weighted_edges(args.n, args.density, args.seed)?,
        )?,
    };
    if args.touches {
        let cfg = FwConfig::new(args.block)?;
        let blocked = count_block_touches(&w, &cfg)?;
        let sweep = count_sweep_touches(w.order(), args.block);
        println!("blocked schedule touches: {blocked}");
        println!("whole matrix sweep touches: {sweep}");
        return Ok(());
    }
    let dist = match args.algo.as_str() {
        "iterative" => fw_iterative(w)?,
        "recursive" => fw_recursive(w, &FwConfig::new(args.block)?)?,
        other => bail!("unknown apsp algorithm {other:?}; expected iterative or recursive"),
    };
    print!("{}", dist.to_text());
    Ok(())
}

fn cmd_mr_matmul(args: MrMatmulArgs) -> anyhow::Result<()> {
    let a = gen::gen_matrix(args.n, args.seed, ValueMode::Int)?;
    let b = gen::gen_matrix(args.n, args.seed.wrapping_add(1), ValueMode::Int)?;
    let fault_plan = match &args.fault_plan {
        Some(text) => parse_fault_plan(text)?,
        None => Vec::new(),
    };
    let cfg = JobConfig {
        num_workers: args.workers,
        checkpoint_interval: args.checkpoint_interval,
        fault_plan,
        kill_master_at_checkpoint: args.kill_master_at_checkpoint,
        seed: args.seed,
        ..JobConfig::default()
    };
    let (c, report) = mr_matmul_full(&a, &b, args.reducers, &cfg)?;
    print!("{}", report.text_summary());
    let (want, _) = matmul_naive(&a, &b)?;
    if c != want {
        bail!("MapReduce product differs from the plain triple loop");
    }
    println!("product matches the plain triple loop bit for bit");
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("bad {what} {s:?}: {e}")))
        .collect()
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<()> {
    let kernels: Vec<KernelId> = parse_list(&args.kernels, "kernel")?;
    let sizes: Vec<usize> = parse_list(&args.sizes, "size")?;
    let threads: Vec<usize> = parse_list(&args.threads, "thread count")?;
    if kernels.is_empty() || sizes.is_empty() || threads.is_empty() {
        bail!("kernels, sizes, and threads must each name at least one value");
    }
    let mut specs = Vec::new();
    for &kernel in &kernels {
        for &n in &sizes {
            for &t in &threads {
                specs.push(SuiteSpec {
                    kernel,
                    n,
                    threads: t,
                    param: args.param,
                    repeats: args.repeats,
                    seed: args.seed,
                    density: args.density,
                });
            }
        }
    }
    let records = run_suite(&specs)?;
    let csv = records_to_csv(&records);
    print!("{csv}");
    if let Some(p) = &args.out {
        fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    let text = match args.kind {
        GenKind::Matrix => gen::gen_matrix(args.n, args.seed, args.mode.into())?.to_text(),
        GenKind::Graph => gen::gen_graph(args.n, args.density, args.seed)?.to_text(),
        GenKind::Weighted => {
            let edges = gen::gen_weighted_edges(args.n, args.density, args.seed)?;
            mck_core::graph::weighted_edges_to_text(args.n, &edges)
        }
    };
    emit(&args.out, &text)
}

fn cmd_amdahl(args: AmdahlArgs) -> anyhow::Result<()> {
    let bound = amdahl_bound(args.alpha)?;
    println!("parallel fraction {}: ideal speedup bound {}", args.alpha, bound);
    Ok(())
}

fn cmd_latency(args: LatencyArgs) -> anyhow::Result<()> {
    let model = LatencyModel::new(args.clock_ghz)?;
    print!("{}", model.table_text());
    Ok(())
}
