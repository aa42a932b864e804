//! Lock-step master/worker execution.
//!
//! Time advances in ticks of one simulated millisecond. Each tick the
//! master updates its bookkeeping (shuffle barrier, heartbeat monitor,
//! task assignment), sends every worker the messages queued for it, and
//! blocks until each worker has replied. Workers execute their assigned
//! tasks concurrently between those two barriers; a task assigned in tick
//! `t` reports completion in tick `t`, unless the worker's fault script
//! has silenced it. Scripted faults live in the worker threads themselves,
//! so the master genuinely discovers failures through missed pings rather
//! than being told about them.
//!
//! The master processes replies in a permutation of worker ids drawn from
//! the job seed. Together with the barriers this makes every run of a job
//! bit reproducible: scheduling, reassignment, checkpoint contents, and
//! output bytes depend only on `(inputs, config)`.

use std::mem;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread;
use std::time::Instant;

use crate::rng::XorShift64;
use crate::{Error, Result};

use super::checkpoint::{decode_checkpoint, encode_checkpoint, CheckpointData};
use super::{
    partition_for_key, schedule_next, FaultKind, JobConfig, JobOutcome, JobReport, KeyValue,
    TaskKind, TaskRecord, TaskState, UserResult, WorkerEvent, WorkerFault,
};

enum ToWorker {
    Tick(Vec<WorkerMsg>),
    Halt,
}

enum WorkerMsg {
    Ping,
    Assign { task_id: u64, payload: TaskPayload },
}

enum TaskPayload {
    Map { splits: Vec<Vec<u8>> },
    Reduce { groups: Vec<(Vec<u8>, Vec<Vec<u8>>)> },
}

struct TickReply {
    worker: usize,
    events: Vec<WorkerReply>,
}

enum WorkerReply {
    PingAck,
    Done { task_id: u64, output: Vec<KeyValue> },
    TaskErr { task_id: u64, message: String },
}

/// Scripted behaviour for one worker thread.
struct FaultScript {
    kill_after: Option<u64>,
    pauses: Vec<(u64, u32)>,
}

impl FaultScript {
    fn for_worker(plan: &[WorkerFault], worker: usize) -> FaultScript {
        let mut kill_after = None;
        let mut pauses = Vec::new();
        for f in plan.iter().filter(|f| f.worker == worker) {
            match f.kind {
                FaultKind::Kill => {
                    kill_after = Some(kill_after.map_or(f.after_tasks, |k: u64| k.min(f.after_tasks)));
                }
                FaultKind::Pause { missed_pings } => pauses.push((f.after_tasks, missed_pings)),
            }
        }
        FaultScript { kill_after, pauses }
    }
}

fn worker_loop<M, R>(
    id: usize,
    inbox: Receiver<ToWorker>,
    replies: Sender<TickReply>,
    map_fn: &M,
    reduce_fn: &R,
    script: FaultScript,
) where
    M: Fn(&[u8]) -> UserResult + Sync,
    R: Fn(&[u8], &[Vec<u8>]) -> UserResult + Sync,
{
    let mut alive = script.kill_after != Some(0);
    let mut completed: u64 = 0;
    let mut pause_left: u32 = pause_starting_at(&script, 0);

    while let Ok(msg) = inbox.recv() {
        let msgs = match msg {
            ToWorker::Halt => break,
            ToWorker::Tick(msgs) => msgs,
        };
        let mut events = Vec::new();
        for m in msgs {
            match m {
                WorkerMsg::Ping => {
                    if !alive {
                        continue;
                    }
                    if pause_left > 0 {
                        pause_left -= 1;
                    } else {
                        events.push(WorkerReply::PingAck);
                    }
                }
                WorkerMsg::Assign { task_id, payload } => {
                    if !alive {
                        continue;
                    }
                    match run_payload(payload, map_fn, reduce_fn) {
                        Ok(output) => {
                            completed += 1;
                            events.push(WorkerReply::Done { task_id, output });
                            if script.kill_after == Some(completed) {
                                alive = false;
                            }
                            pause_left = pause_left.max(pause_starting_at(&script, completed));
                        }
                        Err(message) => events.push(WorkerReply::TaskErr { task_id, message }),
                    }
                }
            }
        }
        if replies.send(TickReply { worker: id, events }).is_err() {
            break;
        }
    }
}

fn pause_starting_at(script: &FaultScript, completed: u64) -> u32 {
    script
        .pauses
        .iter()
        .filter(|&&(after, _)| after == completed)
        .map(|&(_, n)| n)
        .max()
        .unwrap_or(0)
}

fn run_payload<M, R>(payload: TaskPayload, map_fn: &M, reduce_fn: &R) -> UserResult
where
    M: Fn(&[u8]) -> UserResult + Sync,
    R: Fn(&[u8], &[Vec<u8>]) -> UserResult + Sync,
{
    match payload {
        TaskPayload::Map { splits } => {
            let mut out = Vec::new();
            for split in &splits {
                out.extend(map_fn(split)?);
            }
            Ok(out)
        }
        TaskPayload::Reduce { groups } => {
            let mut out = Vec::new();
            for (key, values) in &groups {
                out.extend(reduce_fn(key, values)?);
            }
            Ok(out)
        }
    }
}

struct TaskEntry {
    id: u64,
    kind: TaskKind,
    state: TaskState,
    attempts: u32,
    workers: Vec<usize>,
    affinity: Option<usize>,
    completed_by: Option<usize>,
    restored: bool,
    output: Option<Vec<KeyValue>>,
    /// Worker whose local storage holds this completed map output. `None`
    /// once the output is durable (post shuffle or checkpoint restored).
    holder: Option<usize>,
}

impl TaskEntry {
    fn new(id: u64, kind: TaskKind) -> TaskEntry {
        TaskEntry {
            id,
            kind,
            state: TaskState::Idle,
            attempts: 0,
            workers: Vec::new(),
            affinity: None,
            completed_by: None,
            restored: false,
            output: None,
            holder: None,
        }
    }

    fn record(&self) -> TaskRecord {
        TaskRecord {
            id: self.id,
            kind: self.kind,
            state: self.state,
            attempts: self.attempts,
            workers: self.workers.clone(),
            affinity: self.affinity,
            completed_by: self.completed_by,
            restored_from_checkpoint: self.restored,
        }
    }
}

struct WorkerSlot {
    failed: bool,
    busy_with: Option<u64>,
    outstanding_ping: bool,
    missed: u32,
}

struct Totals {
    reassignments: u64,
    checkpoints_written: u64,
    recoveries: u64,
    events: Vec<WorkerEvent>,
    ticks: u64,
    checkpoints: Vec<Vec<u8>>,
}

enum EpochExit {
    Finished {
        output: Vec<KeyValue>,
        tasks: Vec<TaskRecord>,
    },
    MasterKilled {
        blob: Vec<u8>,
    },
}

/// One master lifetime's state.
struct Epoch<'a> {
    cfg: &'a JobConfig,
    map_chunks: &'a [Vec<Vec<u8>>],
    num_reduce: usize,
    tasks: Vec<TaskEntry>,
    workers: Vec<WorkerSlot>,
    shuffled: bool,
    reduce_inputs: Vec<Vec<(Vec<u8>, Vec<Vec<u8>>)>>,
    restored_reduces: Vec<Option<Vec<KeyValue>>>,
    completed_count: u64,
    next_checkpoint_due: u64,
    outbox: Vec<Vec<WorkerMsg>>,
}

impl<'a> Epoch<'a> {
    fn new(
        cfg: &'a JobConfig,
        map_chunks: &'a [Vec<Vec<u8>>],
        num_reduce: usize,
        resume: Option<CheckpointData>,
    ) -> Result<Epoch<'a>> {
        let mut tasks: Vec<TaskEntry> = (0..map_chunks.len())
            .map(|i| TaskEntry::new(i as u64, TaskKind::Map))
            .collect();
        let mut restored_reduces: Vec<Option<Vec<KeyValue>>> = vec![None; num_reduce];
        let mut total_restored: u64 = 0;
        if let Some(data) = resume {
            let mismatch = |detail: String| Error::CheckpointMismatch(detail);
            if data.num_map_tasks != map_chunks.len() as u64 {
                return Err(mismatch(format!(
                    "checkpoint has {} map tasks, job has {}",
                    data.num_map_tasks,
                    map_chunks.len()
                )));
            }
            if data.num_reduce_tasks != num_reduce as u64 {
                return Err(mismatch(format!(
                    "checkpoint has {} reduce tasks, job has {}",
                    data.num_reduce_tasks, num_reduce
                )));
            }
            for (id, out) in data.completed_maps {
                let entry = tasks
                    .get_mut(id as usize)
                    .ok_or_else(|| mismatch(format!("map task id {id} out of range")))?;
                if entry.state == TaskState::Completed {
                    return Err(mismatch(format!("map task id {id} listed twice")));
                }
                entry.state = TaskState::Completed;
                entry.output = Some(out);
                entry.restored = true;
                total_restored += 1;
            }
            for (idx, out) in data.completed_reduces {
                let slot = restored_reduces
                    .get_mut(idx as usize)
                    .ok_or_else(|| mismatch(format!("reduce index {idx} out of range")))?;
                if slot.is_some() {
                    return Err(mismatch(format!("reduce index {idx} listed twice")));
                }
                *slot = Some(out);
                total_restored += 1;
            }
        }
        let completed_count = tasks
            .iter()
            .filter(|t| t.state == TaskState::Completed)
            .count() as u64;
        let next_checkpoint_due = if cfg.checkpoint_interval > 0 {
            cfg.checkpoint_interval * (total_restored / cfg.checkpoint_interval + 1)
        } else {
            u64::MAX
        };
        Ok(Epoch {
            cfg,
            map_chunks,
            num_reduce,
            tasks,
            workers: (0..cfg.num_workers)
                .map(|_| WorkerSlot {
                    failed: false,
                    busy_with: None,
                    outstanding_ping: false,
                    missed: 0,
                })
                .collect(),
            shuffled: false,
            reduce_inputs: Vec::new(),
            restored_reduces,
            completed_count,
            next_checkpoint_due,
            outbox: (0..cfg.num_workers).map(|_| Vec::new()).collect(),
        })
    }

    fn maps_done(&self) -> bool {
        self.tasks[..self.map_chunks.len()]
            .iter()
            .all(|t| t.state == TaskState::Completed)
    }

    fn all_done(&self) -> bool {
        self.shuffled && self.tasks.iter().all(|t| t.state == TaskState::Completed)
    }

    /// Groups the map outputs into per-reduce-task inputs and creates the
    /// reduce task entries. Keys within a reduce task are sorted, values
    /// within a key are sorted by bytes, so the grouping does not depend
    /// on which workers ran the maps or in what order.
    fn shuffle(&mut self) {
        let mut buckets: Vec<Vec<KeyValue>> = vec![Vec::new(); self.num_reduce];
        for t in &self.tasks[..self.map_chunks.len()] {
            for kv in t.output.as_ref().expect("completed map has output") {
                buckets[partition_for_key(&kv.key, self.num_reduce)].push(kv.clone());
            }
        }
        self.reduce_inputs = buckets
            .into_iter()
            .map(|mut bucket| {
                bucket.sort();
                let mut groups: Vec<(Vec<u8>, Vec<Vec<u8>>)> = Vec::new();
                for kv in bucket {
                    match groups.last_mut() {
                        Some((key, values)) if *key == kv.key => values.push(kv.value),
                        _ => groups.push((kv.key, vec![kv.value])),
                    }
                }
                groups
            })
            .collect();
        let m = self.map_chunks.len() as u64;
        for i in 0..self.num_reduce {
            let mut entry = TaskEntry::new(m + i as u64, TaskKind::Reduce);
            if let Some(out) = self.restored_reduces[i].take() {
                entry.state = TaskState::Completed;
                entry.output = Some(out);
                entry.restored = true;
                self.completed_count += 1;
            }
            self.tasks.push(entry);
        }
        self.shuffled = true;
    }

    /// Heartbeat round: unanswered pings accumulate; at the threshold the
    /// worker is declared failed, otherwise it is pinged (again).
    fn heartbeat(&mut self, tick: u64, totals: &mut Totals) {
        for w in 0..self.workers.len() {
            if self.workers[w].failed {
                continue;
            }
            if self.workers[w].outstanding_ping {
                self.workers[w].missed += 1;
                if self.workers[w].missed >= self.cfg.max_missed_pings {
                    self.declare_failed(w, tick, totals);
                    continue;
                }
            } else {
                self.workers[w].missed = 0;
            }
            self.workers[w].outstanding_ping = true;
            self.outbox[w].push(WorkerMsg::Ping);
        }
    }

    /// Marks a worker failed, re-queues its in-progress task, and (during
    /// the map phase) re-queues completed map tasks whose outputs lived on
    /// it. Re-queued tasks carry an affinity hint back to the worker in
    /// case it returns.
    fn declare_failed(&mut self, w: usize, tick: u64, totals: &mut Totals) {
        self.workers[w].failed = true;
        totals.events.push(WorkerEvent::Failed { worker: w, tick });
        if let Some(tid) = self.workers[w].busy_with.take() {
            let t = &mut self.tasks[tid as usize];
            t.state = TaskState::Idle;
            t.affinity = Some(w);
        }
        if !self.shuffled {
            for t in self.tasks.iter_mut() {
                if t.kind == TaskKind::Map
                    && t.state == TaskState::Completed
                    && t.holder == Some(w)
                {
                    t.state = TaskState::Idle;
                    t.holder = None;
                    t.output = None;
                    t.completed_by = None;
                    t.affinity = Some(w);
                    self.completed_count -= 1;
                }
            }
        }
    }

    fn assign_ready(&mut self, totals: &mut Totals) {
        loop {
            let idle: Vec<(u64, Option<usize>)> = self
                .tasks
                .iter()
                .filter(|t| t.state == TaskState::Idle)
                .map(|t| (t.id, t.affinity))
                .collect();
            let free: Vec<usize> = (0..self.workers.len())
                .filter(|&w| !self.workers[w].failed && self.workers[w].busy_with.is_none())
                .collect();
            let Some(a) = schedule_next(&idle, &free) else {
                break;
            };
            let payload = self.payload_for(a.task);
            let t = &mut self.tasks[a.task as usize];
            if t.attempts > 0 {
                totals.reassignments += 1;
            }
            t.attempts += 1;
            t.workers.push(a.worker);
            t.state = TaskState::InProgress;
            t.affinity = None;
            self.workers[a.worker].busy_with = Some(a.task);
            self.outbox[a.worker].push(WorkerMsg::Assign {
                task_id: a.task,
                payload,
            });
        }
    }

    fn payload_for(&self, task_id: u64) -> TaskPayload {
        let m = self.map_chunks.len() as u64;
        if task_id < m {
            TaskPayload::Map {
                splits: self.map_chunks[task_id as usize].to_vec(),
            }
        } else {
            TaskPayload::Reduce {
                groups: self.reduce_inputs[(task_id - m) as usize].clone(),
            }
        }
    }

    fn process_reply(&mut self, w: usize, event: WorkerReply) -> Result<()> {
        match event {
            WorkerReply::PingAck => {
                if !self.workers[w].failed {
                    self.workers[w].outstanding_ping = false;
                }
            }
            WorkerReply::Done { task_id, output } => {
                // Replies from workers already declared failed, or for
                // attempts the master no longer tracks, are stale.
                if self.workers[w].failed || self.workers[w].busy_with != Some(task_id) {
                    return Ok(());
                }
                let t = &mut self.tasks[task_id as usize];
                if t.state != TaskState::InProgress {
                    return Ok(());
                }
                t.state = TaskState::Completed;
                t.completed_by = Some(w);
                t.output = Some(output);
                if t.kind == TaskKind::Map {
                    t.holder = Some(w);
                }
                self.workers[w].busy_with = None;
                self.completed_count += 1;
            }
            WorkerReply::TaskErr { task_id, message } => {
                if !self.workers[w].failed {
                    return Err(Error::TaskFailed { task_id, message });
                }
            }
        }
        Ok(())
    }

    fn checkpoint_data(&self) -> CheckpointData {
        let m = self.map_chunks.len();
        let completed = |t: &&TaskEntry| t.state == TaskState::Completed;
        CheckpointData {
            num_map_tasks: m as u64,
            num_reduce_tasks: self.num_reduce as u64,
            completed_maps: self.tasks[..m]
                .iter()
                .filter(completed)
                .map(|t| (t.id, t.output.clone().expect("completed map has output")))
                .collect(),
            completed_reduces: self.tasks[m..]
                .iter()
                .filter(completed)
                .map(|t| {
                    (
                        t.id - m as u64,
                        t.output.clone().expect("completed reduce has output"),
                    )
                })
                .collect(),
        }
    }

    fn output(&self) -> Vec<KeyValue> {
        self.tasks[self.map_chunks.len()..]
            .iter()
            .flat_map(|t| t.output.clone().expect("completed reduce has output"))
            .collect()
    }

    fn records(&self) -> Vec<TaskRecord> {
        self.tasks.iter().map(TaskEntry::record).collect()
    }
}

fn permutation(rng: &mut XorShift64, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        idx.swap(i, j);
    }
    idx
}

#[allow(clippy::too_many_arguments)]
fn master_epoch(
    to_workers: &[Sender<ToWorker>],
    reply_rx: &Receiver<TickReply>,
    cfg: &JobConfig,
    map_chunks: &[Vec<Vec<u8>>],
    resume: Option<CheckpointData>,
    kill_at: Option<u64>,
    totals: &mut Totals,
) -> Result<EpochExit> {
    let num_workers = cfg.num_workers;
    let mut ep = Epoch::new(cfg, map_chunks, cfg.num_reduce_tasks, resume)?;
    let mut rng = XorShift64::new(
        cfg.seed
            .wrapping_add(totals.recoveries.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
    );

    let total_tasks = map_chunks.len() as u64 + cfg.num_reduce_tasks as u64;
    let detection_window =
        cfg.heartbeat_interval * (u64::from(cfg.max_missed_pings) + 2) + 2;
    let tick_budget = detection_window * (num_workers as u64 + 2) + 3 * total_tasks + 1000;

    for tick in 0..tick_budget {
        if !ep.shuffled && ep.maps_done() {
            ep.shuffle();
        }
        if ep.all_done() {
            totals.ticks += tick;
            return Ok(EpochExit::Finished {
                output: ep.output(),
                tasks: ep.records(),
            });
        }
        if tick > 0 && tick % cfg.heartbeat_interval == 0 {
            ep.heartbeat(tick, totals);
        }
        if ep.workers.iter().all(|w| w.failed) {
            return Err(Error::NoWorkersAvailable);
        }
        ep.assign_ready(totals);

        for (w, tx) in to_workers.iter().enumerate() {
            let msgs = mem::take(&mut ep.outbox[w]);
            tx.send(ToWorker::Tick(msgs)).expect("worker inbox open");
        }
        let mut replies: Vec<Vec<WorkerReply>> = (0..num_workers).map(|_| Vec::new()).collect();
        for _ in 0..num_workers {
            let reply = reply_rx.recv().expect("worker reply");
            replies[reply.worker] = reply.events;
        }
        for &w in &permutation(&mut rng, num_workers) {
            for event in mem::take(&mut replies[w]) {
                ep.process_reply(w, event)?;
            }
        }

        if cfg.checkpoint_interval > 0 {
            while ep.completed_count >= ep.next_checkpoint_due {
                let blob = encode_checkpoint(&ep.checkpoint_data());
                totals.checkpoints_written += 1;
                totals.checkpoints.push(blob.clone());
                ep.next_checkpoint_due += cfg.checkpoint_interval;
                if kill_at == Some(totals.checkpoints_written) {
                    totals.ticks += tick + 1;
                    return Ok(EpochExit::MasterKilled { blob });
                }
            }
        }
    }
    Err(Error::InvalidArgument(
        "job made no progress within its tick budget".into(),
    ))
}

fn validate(cfg: &JobConfig) -> Result<()> {
    if cfg.num_workers == 0 {
        return Err(Error::InvalidArgument("job needs at least one worker".into()));
    }
    if cfg.num_reduce_tasks == 0 {
        return Err(Error::InvalidArgument(
            "job needs at least one reduce task".into(),
        ));
    }
    if cfg.heartbeat_interval == 0 {
        return Err(Error::InvalidArgument(
            "heartbeat interval must be at least one tick".into(),
        ));
    }
    if cfg.max_missed_pings == 0 {
        return Err(Error::InvalidArgument(
            "max missed pings must be at least one".into(),
        ));
    }
    for f in &cfg.fault_plan {
        if f.worker >= cfg.num_workers {
            return Err(Error::InvalidArgument(format!(
                "fault plan names worker {} but the job has {} workers",
                f.worker, cfg.num_workers
            )));
        }
    }
    Ok(())
}

fn chunk_inputs(inputs: &[Vec<u8>], requested: usize) -> Vec<Vec<Vec<u8>>> {
    let per_task = if requested == 0 {
        1
    } else {
        inputs.len().div_ceil(requested.min(inputs.len()))
    };
    inputs.chunks(per_task).map(|c| c.to_vec()).collect()
}

pub(super) fn run<M, R>(
    map_fn: &M,
    reduce_fn: &R,
    inputs: &[Vec<u8>],
    cfg: &JobConfig,
    resume: Option<CheckpointData>,
) -> Result<JobOutcome>
where
    M: Fn(&[u8]) -> UserResult + Sync,
    R: Fn(&[u8], &[Vec<u8>]) -> UserResult + Sync,
{
    validate(cfg)?;
    let start = Instant::now();
    if inputs.is_empty() {
        let mut report = JobReport::empty();
        report.wall_time = start.elapsed();
        return Ok(JobOutcome {
            output: Vec::new(),
            report,
            checkpoints: Vec::new(),
        });
    }
    let map_chunks = chunk_inputs(inputs, cfg.num_map_tasks);

    thread::scope(|scope| {
        let (reply_tx, reply_rx) = channel::<TickReply>();
        let mut to_workers = Vec::with_capacity(cfg.num_workers);
        for w in 0..cfg.num_workers {
            let (tx, rx) = channel::<ToWorker>();
            to_workers.push(tx);
            let reply = reply_tx.clone();
            let script = FaultScript::for_worker(&cfg.fault_plan, w);
            scope.spawn(move || worker_loop(w, rx, reply, map_fn, reduce_fn, script));
        }

        let mut totals = Totals {
            reassignments: 0,
            checkpoints_written: 0,
            recoveries: u64::from(resume.is_some()),
            events: Vec::new(),
            ticks: 0,
            checkpoints: Vec::new(),
        };
        let mut pending = resume;
        let mut kill_at = cfg.kill_master_at_checkpoint;
        let result = loop {
            match master_epoch(
                &to_workers,
                &reply_rx,
                cfg,
                &map_chunks,
                pending.take(),
                kill_at,
                &mut totals,
            ) {
                Ok(EpochExit::Finished { output, tasks }) => break Ok((output, tasks)),
                Ok(EpochExit::MasterKilled { blob }) => {
                    totals.recoveries += 1;
                    kill_at = None;
                    pending =
                        Some(decode_checkpoint(&blob).expect("fresh checkpoint blob decodes"));
                }
                Err(e) => break Err(e),
            }
        };
        for tx in &to_workers {
            let _ = tx.send(ToWorker::Halt);
        }
        let (output, tasks) = result?;
        Ok(JobOutcome {
            output,
            report: JobReport {
                tasks,
                total_reassignments: totals.reassignments,
                checkpoints_written: totals.checkpoints_written,
                master_recoveries: totals.recoveries,
                worker_events: totals.events,
                ticks: totals.ticks,
                wall_time: start.elapsed(),
            },
            checkpoints: totals.checkpoints,
        })
    })
}
