//! Measurement harness. A suite is a list of (kernel, size, threads,
//! parameter) points; each point is run once to warm up, `repeats` more
//! times for timing, and the median is reported together with the speedup
//! over the kernel's sequential baseline. Every parallel or restructured
//! kernel's output is checked against its baseline's output before the
//! measurement is recorded; inputs are integer valued, so the check is
//! exact equality. Input generation is seeded, never timed, and shared
//! between a kernel and its baseline.

use std::collections::HashMap;
use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use anyhow::bail;
use mck_core::apsp::{fw_iterative, fw_recursive, DistanceMatrix, FwConfig};
use mck_core::bfs::{bfs_parallel, bfs_seq};
use mck_core::graph::Graph;
use mck_core::mapreduce::{mr_matmul, JobConfig};
use mck_core::{matmul_blocked_with, matmul_naive, matmul_parallel, matmul_strassen, Matrix};

use crate::gen::{self, ValueMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelId {
    MatmulNaive,
    MatmulParallel,
    MatmulBlocked,
    MatmulStrassen,
    MrMatmul,
    BfsSeq,
    BfsParallel,
    FwIterative,
    FwRecursive,
}

impl KernelId {
    pub const ALL: [KernelId; 9] = [
        KernelId::MatmulNaive,
        KernelId::MatmulParallel,
        KernelId::MatmulBlocked,
        KernelId::MatmulStrassen,
        KernelId::MrMatmul,
        KernelId::BfsSeq,
        KernelId::BfsParallel,
        KernelId::FwIterative,
        KernelId::FwRecursive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelId::MatmulNaive => "matmul_naive",
            KernelId::MatmulParallel => "matmul_parallel",
            KernelId::MatmulBlocked => "matmul_blocked",
            KernelId::MatmulStrassen => "matmul_strassen",
            KernelId::MrMatmul => "mr_matmul",
            KernelId::BfsSeq => "bfs_seq",
            KernelId::BfsParallel => "bfs_parallel",
            KernelId::FwIterative => "fw_iterative",
            KernelId::FwRecursive => "fw_recursive",
        }
    }

    /// Sequential kernel this one is verified against and measured
    /// relative to. `None` means the kernel is itself a baseline.
    pub fn baseline(self) -> Option<KernelId> {
        match self {
            KernelId::MatmulParallel
            | KernelId::MatmulBlocked
            | KernelId::MatmulStrassen
            | KernelId::MrMatmul => Some(KernelId::MatmulNaive),
            KernelId::BfsParallel => Some(KernelId::BfsSeq),
            KernelId::FwRecursive => Some(KernelId::FwIterative),
            KernelId::MatmulNaive | KernelId::BfsSeq | KernelId::FwIterative => None,
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelId {
    type Err = mck_core::Error;

    fn from_str(s: &str) -> Result<KernelId, Self::Err> {
        KernelId::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = KernelId::ALL.iter().map(|k| k.name()).collect();
                mck_core::Error::InvalidArgument(format!(
                    "unknown kernel {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// One measurement point.
#[derive(Debug, Clone)]
pub struct SuiteSpec {
    pub kernel: KernelId,
    pub n: usize,
    pub threads: usize,
    /// Kernel tuning knob: cutoff for the recursive multiplies, base block
    /// order for the recursive shortest paths, reduce task count for the
    /// MapReduce multiply. 0 selects the kernel's default.
    pub param: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Edge density for graph kernels.
    pub density: f64,
}

impl SuiteSpec {
    pub fn new(kernel: KernelId, n: usize) -> SuiteSpec {
        SuiteSpec {
            kernel,
            n,
            threads: 1,
            param: 0,
            repeats: 3,
            seed: 1,
            density: 0.01,
        }
    }
}

pub const CSV_HEADER: &str = "kernel,n,threads,param,repeats,median_seconds,speedup";

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub kernel: KernelId,
    pub n: usize,
    pub threads: usize,
    pub param: usize,
    pub repeats: usize,
    pub median_seconds: f64,
    pub speedup: f64,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.kernel,
            self.n,
            self.threads,
            self.param,
            self.repeats,
            self.median_seconds,
            self.speedup
        )
    }
}

pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

enum Inputs {
    Matrices(Matrix, Matrix),
    Graph(Graph),
    Dist(DistanceMatrix),
}

#[derive(Debug, Clone, PartialEq)]
enum Output {
    Matrix(Matrix),
    Levels(Vec<u32>),
    Dist(DistanceMatrix),
}

fn effective_param(kernel: KernelId, param: usize) -> usize {
    if param != 0 {
        return param;
    }
    match kernel {
        KernelId::MatmulBlocked | KernelId::MatmulStrassen | KernelId::FwRecursive => 64,
        KernelId::MrMatmul => 1,
        _ => 0,
    }
}

fn build_inputs(spec: &SuiteSpec) -> anyhow::Result<Inputs> {
    Ok(match spec.kernel {
        KernelId::MatmulNaive
        | KernelId::MatmulParallel
        | KernelId::MatmulBlocked
        | KernelId::MatmulStrassen
        | KernelId::MrMatmul => Inputs::Matrices(
            gen::gen_matrix(spec.n, spec.seed, ValueMode::Int)?,
            gen::gen_matrix(spec.n, spec.seed.wrapping_add(1), ValueMode::Int)?,
        ),
        KernelId::BfsSeq | KernelId::BfsParallel => {
            Inputs::Graph(gen::gen_graph(spec.n, spec.density, spec.seed)?)
        }
        KernelId::FwIterative | KernelId::FwRecursive => Inputs::Dist(DistanceMatrix::from_edges(
            spec.n,
            &gen::gen_weighted_edges(spec.n, spec.density, spec.seed)?,
        )?),
    })
}

fn execute(spec: &SuiteSpec, inputs: &Inputs) -> anyhow::Result<Output> {
    let threads = spec.threads.max(1);
    let param = effective_param(spec.kernel, spec.param);
    let out = match (spec.kernel, inputs) {
        (KernelId::MatmulNaive, Inputs::Matrices(a, b)) => {
            Output::Matrix(matmul_naive(black_box(a), black_box(b))?.0)
        }
        (KernelId::MatmulParallel, Inputs::Matrices(a, b)) => {
            Output::Matrix(matmul_parallel(black_box(a), black_box(b), threads)?)
        }
        (KernelId::MatmulBlocked, Inputs::Matrices(a, b)) => {
            Output::Matrix(matmul_blocked_with(black_box(a), black_box(b), threads, param)?)
        }
        (KernelId::MatmulStrassen, Inputs::Matrices(a, b)) => {
            Output::Matrix(matmul_strassen(black_box(a), black_box(b), param)?.0)
        }
        (KernelId::MrMatmul, Inputs::Matrices(a, b)) => {
            let cfg = JobConfig {
                num_workers: threads,
                seed: spec.seed,
                ..JobConfig::default()
            };
            Output::Matrix(mr_matmul(black_box(a), black_box(b), param, &cfg)?)
        }
        (KernelId::BfsSeq, Inputs::Graph(g)) => Output::Levels(bfs_seq(black_box(g), 0)?.level),
        (KernelId::BfsParallel, Inputs::Graph(g)) => {
            Output::Levels(bfs_parallel(black_box(g), 0, threads)?.level)
        }
        (KernelId::FwIterative, Inputs::Dist(w)) => {
            Output::Dist(fw_iterative(black_box(w.clone()))?)
        }
        (KernelId::FwRecursive, Inputs::Dist(w)) => {
            let cfg = FwConfig::new(param)?;
            Output::Dist(fw_recursive(black_box(w.clone()), &cfg)?)
        }
        _ => bail!("internal: inputs do not match kernel {}", spec.kernel),
    };
    Ok(out)
}

fn median(times: &mut [f64]) -> f64 {
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let mid = times.len() / 2;
    if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2.0
    }
}

/// Warm-up run (used for verification), then `repeats` timed runs.
fn run_one(spec: &SuiteSpec, inputs: &Inputs) -> anyhow::Result<(f64, Output)> {
    let warmup = execute(spec, inputs)?;
    let repeats = spec.repeats.max(1);
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        let out = execute(spec, inputs)?;
        times.push(start.elapsed().as_secs_f64());
        black_box(&out);
    }
    Ok((median(&mut times), warmup))
}

fn check_matches_baseline(spec: &SuiteSpec, got: &Output, want: &Output) -> anyhow::Result<()> {
    if got != want {
        bail!(
            "kernel {} disagrees with its baseline {} at n={} threads={} param={}",
            spec.kernel,
            spec.kernel.baseline().expect("checked kernels have a baseline"),
            spec.n,
            spec.threads,
            spec.param
        );
    }
    Ok(())
}

type BaselineKey = (KernelId, usize, u64, u64);

fn baseline_key(kernel: KernelId, spec: &SuiteSpec) -> BaselineKey {
    (kernel, spec.n, spec.seed, spec.density.to_bits())
}

/// Runs every spec in order and returns one record per spec. Baselines
/// needed for verification or speedups are measured at most once per
/// input shape and reused.
pub fn run_suite(specs: &[SuiteSpec]) -> anyhow::Result<Vec<BenchRecord>> {
    let mut baselines: HashMap<BaselineKey, (f64, Output)> = HashMap::new();
    let mut records = Vec::with_capacity(specs.len());
    for spec in specs {
        let inputs = build_inputs(spec)?;
        let (median_seconds, output) = run_one(spec, &inputs)?;
        let speedup = match spec.kernel.baseline() {
            None => {
                baselines.insert(baseline_key(spec.kernel, spec), (median_seconds, output));
                1.0
            }
            Some(base) => {
                let key = baseline_key(base, spec);
                if !baselines.contains_key(&key) {
                    let base_spec = SuiteSpec {
                        kernel: base,
                        threads: 1,
                        param: 0,
                        ..spec.clone()
                    };
                    let measured = run_one(&base_spec, &inputs)?;
                    baselines.insert(key, measured);
                }
                let (base_median, base_output) = &baselines[&key];
                check_matches_baseline(spec, &output, base_output)?;
                base_median / median_seconds
            }
        };
        records.push(BenchRecord {
            kernel: spec.kernel,
            n: spec.n,
            threads: spec.threads,
            param: spec.param,
            repeats: spec.repeats.max(1),
            median_seconds,
            speedup,
        });
    }
    Ok(records)
}
