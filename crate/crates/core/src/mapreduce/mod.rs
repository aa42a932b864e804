//! In-process MapReduce with a master, worker threads, heartbeat failure
//! detection, task reassignment, and master checkpoint/recovery.
//!
//! The engine runs real worker threads in lock-step rounds of simulated
//! time (one tick per simulated millisecond). Each round the master hands
//! every worker its messages (task assignments, heartbeat pings), the
//! workers process them concurrently, and the master collects the replies
//! at a barrier. All scheduling decisions read state that is identical on
//! every run, and the per-round reply delivery order is a permutation
//! drawn from the job seed, so a job is fully deterministic given
//! `(inputs, config)`.
//!
//! Output bytes are additionally invariant across worker counts and fault
//! plans: intermediate pairs are routed by `fnv1a64(key) % R`, each reduce
//! task sees its keys in sorted order with values sorted by bytes, and the
//! final output concatenates reduce outputs by `(reduce task id, key)`.
//! Re-executed attempts produce identical pairs, and only one attempt per
//! task ever contributes.

mod checkpoint;
mod engine;
mod jobs;

pub use checkpoint::{crc32, decode_checkpoint, encode_checkpoint, CheckpointData};
pub use jobs::{mr_matmul, mr_matmul_full, wordcount_map, wordcount_reduce};

use std::time::Duration;

use crate::{Error, Result};

/// One intermediate or output record: opaque key and value bytes.
/// Ordering is lexicographic on `(key, value)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeyValue {
    pub key: Vec<u8>,
    pub value: Vec<u8>,
}

impl KeyValue {
    pub fn new(key: impl Into<Vec<u8>>, value: impl Into<Vec<u8>>) -> KeyValue {
        KeyValue {
            key: key.into(),
            value: value.into(),
        }
    }
}

/// Result type for user-supplied map and reduce functions.
pub type UserResult = std::result::Result<Vec<KeyValue>, String>;

/// What a worker does once its completed-task count reaches the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    /// Stops responding permanently.
    Kill,
    /// Ignores the next `missed_pings` heartbeat pings, then resumes.
    /// Task execution is unaffected.
    Pause { missed_pings: u32 },
}

/// Scripted worker fault: triggers when `worker` has completed
/// `after_tasks` tasks (0 means before doing any work).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkerFault {
    pub worker: usize,
    pub after_tasks: u64,
    pub kind: FaultKind,
}

impl WorkerFault {
    pub fn kill(worker: usize, after_tasks: u64) -> WorkerFault {
        WorkerFault {
            worker,
            after_tasks,
            kind: FaultKind::Kill,
        }
    }

    pub fn pause(worker: usize, after_tasks: u64, missed_pings: u32) -> WorkerFault {
        WorkerFault {
            worker,
            after_tasks,
            kind: FaultKind::Pause { missed_pings },
        }
    }
}

/// Parses the textual fault plan format `worker:after_k_tasks[,...]`,
/// e.g. `"0:1,2:0"` kills worker 0 after its first task and worker 2
/// before it does anything.
pub fn parse_fault_plan(text: &str) -> Result<Vec<WorkerFault>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|entry| {
            let (w, k) = entry
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("bad fault entry {entry:?}")))?;
            let worker = w
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad worker id {w:?}")))?;
            let after = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad task count {k:?}")))?;
            Ok(WorkerFault::kill(worker, after))
        })
        .collect()
}

/// Job configuration.
#[derive(Debug, Clone)]
pub struct JobConfig {
    pub num_workers: usize,
    /// Number of map tasks the input splits are chunked into. 0 means one
    /// map task per split. The effective count never exceeds the number of
    /// splits.
    pub num_map_tasks: usize,
    pub num_reduce_tasks: usize,
    /// Simulated milliseconds between heartbeat pings.
    pub heartbeat_interval: u64,
    /// Consecutive unanswered pings after which a worker is declared failed.
    pub max_missed_pings: u32,
    /// Completed-task count between master checkpoints; 0 disables them.
    pub checkpoint_interval: u64,
    pub fault_plan: Vec<WorkerFault>,
    /// Kill the master right after it writes this checkpoint (1-based) and
    /// recover it from that checkpoint in place.
    pub kill_master_at_checkpoint: Option<u64>,
    /// Seed for the deterministic message delivery order.
    pub seed: u64,
}

impl Default for JobConfig {
    fn default() -> JobConfig {
        JobConfig {
            num_workers: 4,
            num_map_tasks: 0,
            num_reduce_tasks: 1,
            heartbeat_interval: 10,
            max_missed_pings: 3,
            checkpoint_interval: 0,
            fault_plan: Vec::new(),
            kill_master_at_checkpoint: None,
            seed: 0,
        }
    }
}

impl JobConfig {
    pub fn with_workers(num_workers: usize) -> JobConfig {
        JobConfig {
            num_workers,
            ..JobConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Map,
    Reduce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskState {
    Idle,
    InProgress,
    Completed,
}

/// Final accounting for one task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskRecord {
    pub id: u64,
    pub kind: TaskKind,
    pub state: TaskState,
    /// Number of times the task was handed to a worker. Stays 0 for tasks
    /// restored whole from a checkpoint.
    pub attempts: u32,
    /// Workers the task was assigned to, in assignment order.
    pub workers: Vec<usize>,
    /// Preferred worker for the next assignment (set when a task is
    /// re-queued after a failure, pointing at its previous worker).
    pub affinity: Option<usize>,
    /// Worker whose attempt contributed the task's output.
    pub completed_by: Option<usize>,
    pub restored_from_checkpoint: bool,
}

/// Worker status change observed by the heartbeat monitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkerEvent {
    Failed { worker: usize, tick: u64 },
}

/// Job-level accounting returned next to the output.
#[derive(Debug, Clone)]
pub struct JobReport {
    pub tasks: Vec<TaskRecord>,
    /// Assignments beyond the first per task (within a master's lifetime).
    pub total_reassignments: u64,
    pub checkpoints_written: u64,
    pub master_recoveries: u64,
    pub worker_events: Vec<WorkerEvent>,
    /// Simulated milliseconds the job took.
    pub ticks: u64,
    pub wall_time: Duration,
}

impl JobReport {
    pub(crate) fn empty() -> JobReport {
        JobReport {
            tasks: Vec::new(),
            total_reassignments: 0,
            checkpoints_written: 0,
            master_recoveries: 0,
            worker_events: Vec::new(),
            ticks: 0,
            wall_time: Duration::ZERO,
        }
    }

    pub fn failure_count(&self) -> usize {
        self.worker_events.len()
    }

    pub fn text_summary(&self) -> String {
        let completed = self
            .tasks
            .iter()
            .filter(|t| t.state == TaskState::Completed)
            .count();
        let maps = self
            .tasks
            .iter()
            .filter(|t| t.kind == TaskKind::Map)
            .count();
        format!(
            "tasks: {} ({} map, {} reduce), completed {}\n\
             reassignments: {}\n\
             worker failures: {}\n\
             checkpoints written: {}, master recoveries: {}\n\
             simulated ms: {}, wall time: {:.6}s\n",
            self.tasks.len(),
            maps,
            self.tasks.len() - maps,
            completed,
            self.total_reassignments,
            self.worker_events.len(),
            self.checkpoints_written,
            self.master_recoveries,
            self.ticks,
            self.wall_time.as_secs_f64(),
        )
    }

    /// Per-task records as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task_id,kind,state,attempts,workers,affinity,completed_by\n");
        for t in &self.tasks {
            let kind = match t.kind {
                TaskKind::Map => "map",
                TaskKind::Reduce => "reduce",
            };
            let state = match t.state {
                TaskState::Idle => "idle",
                TaskState::InProgress => "in_progress",
                TaskState::Completed => "completed",
            };
            let workers = t
                .workers
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join(";");
            let affinity = t.affinity.map(|w| w.to_string()).unwrap_or_default();
            let completed_by = t.completed_by.map(|w| w.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                t.id, kind, state, t.attempts, workers, affinity, completed_by
            ));
        }
        out
    }
}

/// Everything a finished job produced, including the checkpoint blobs the
/// master wrote along the way.
#[derive(Debug)]
pub struct JobOutcome {
    pub output: Vec<KeyValue>,
    pub report: JobReport,
    pub checkpoints: Vec<Vec<u8>>,
}

/// FNV-1a 64-bit hash; the partitioning function routes a key to reduce
/// task `fnv1a64(key) % num_reduce_tasks`.
pub fn fnv1a64(data: &[u8]) -> u64 {
    const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    data.iter()
        .fold(OFFSET_BASIS, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Reduce task index for a key.
pub fn partition_for_key(key: &[u8], num_reduce_tasks: usize) -> usize {
    (fnv1a64(key) % num_reduce_tasks as u64) as usize
}

/// Next (task, worker) pairing given idle `(task id, affinity)` pairs and
/// free worker ids: the lowest-id idle task whose affinity names a free
/// worker wins; otherwise the lowest task id goes to the lowest worker id.
pub fn schedule_next(
    idle_tasks: &[(u64, Option<usize>)],
    free_workers: &[usize],
) -> Option<Assignment> {
    if idle_tasks.is_empty() || free_workers.is_empty() {
        return None;
    }
    let mut tasks = idle_tasks.to_vec();
    tasks.sort_by_key(|&(id, _)| id);
    for &(task, affinity) in &tasks {
        if let Some(worker) = affinity {
            if free_workers.contains(&worker) {
                return Some(Assignment { task, worker });
            }
        }
    }
    let task = tasks[0].0;
    let worker = *free_workers.iter().min().expect("non-empty");
    Some(Assignment { task, worker })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub task: u64,
    pub worker: usize,
}

/// Runs a job to completion. See the module docs for the determinism and
/// ordering guarantees.
pub fn run_job<M, R>(
    map_fn: M,
    reduce_fn: R,
    inputs: &[Vec<u8>],
    cfg: &JobConfig,
) -> Result<(Vec<KeyValue>, JobReport)>
where
    M: Fn(&[u8]) -> UserResult + Sync,
    R: Fn(&[u8], &[Vec<u8>]) -> UserResult + Sync,
{
    engine::run(&map_fn, &reduce_fn, inputs, cfg, None).map(|o| (o.output, o.report))
}

/// [`run_job`], also returning the checkpoint blobs in write order.
pub fn run_job_full<M, R>(
    map_fn: M,
    reduce_fn: R,
    inputs: &[Vec<u8>],
    cfg: &JobConfig,
) -> Result<JobOutcome>
where
    M: Fn(&[u8]) -> UserResult + Sync,
    R: Fn(&[u8], &[Vec<u8>]) -> UserResult + Sync,
{
    engine::run(&map_fn, &reduce_fn, inputs, cfg, None)
}

/// Resumes a job from a checkpoint blob written by a previous master.
/// Tasks recorded in the checkpoint keep their outputs and are not
/// re-executed; everything else runs again. The final output is byte
/// identical to an uninterrupted run.
pub fn resume_job<M, R>(
    map_fn: M,
    reduce_fn: R,
    inputs: &[Vec<u8>],
    cfg: &JobConfig,
    checkpoint: &[u8],
) -> Result<(Vec<KeyValue>, JobReport)>
where
    M: Fn(&[u8]) -> UserResult + Sync,
    R: Fn(&[u8], &[Vec<u8>]) -> UserResult + Sync,
{
    let data = decode_checkpoint(checkpoint)?;
    engine::run(&map_fn, &reduce_fn, inputs, cfg, Some(data)).map(|o| (o.output, o.report))
}

/// Canonical byte encoding of a job output, for byte-identity comparisons.
pub fn encode_output(kvs: &[KeyValue]) -> Vec<u8> {
    let mut out = Vec::new();
    for kv in kvs {
        out.extend_from_slice(&(kv.key.len() as u64).to_le_bytes());
        out.extend_from_slice(&kv.key);
        out.extend_from_slice(&(kv.value.len() as u64).to_le_bytes());
        out.extend_from_slice(&kv.value);
    }
    out
}
