//! Breadth-first search: a sequential queue-based kernel and a
//! level-synchronous parallel kernel.
//!
//! The parallel kernel processes one level at a time. The current frontier
//! is snapshotted and partitioned across worker threads; each worker claims
//! undiscovered successors with an atomic test-and-set and appends them to
//! its own next-frontier buffer. A barrier (the scope join) ends the level,
//! the per-worker buffers are concatenated into the next frontier, and the
//! coordinator assigns levels. The test-and-set guarantees every vertex is
//! claimed exactly once, so level arrays match the sequential kernel
//! exactly even though the order inside a frontier may differ.

use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use std::thread;

use crate::graph::Graph;
use crate::{Error, Result};

/// Level value for vertices not reached from the source.
pub const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsResult {
    pub source: usize,
    /// Hop count per vertex, [`UNREACHED`] where no path exists.
    pub level: Vec<u32>,
    /// Vertex satisfying the target predicate, when one was supplied and
    /// matched. The traversal stops at the level where the match occurred,
    /// so `level` may be partial in that case.
    pub found: Option<usize>,
}

/// Per-vertex claim instrumentation from a parallel run.
#[derive(Debug, Clone)]
pub struct BfsClaims {
    /// Number of successful claims per vertex. Correctness requires exactly
    /// one for every reached vertex and zero elsewhere.
    pub claims: Vec<u32>,
    /// Frontier generation during which the vertex was claimed. A vertex
    /// claimed while expanding level `k` must end up at level `k + 1`,
    /// which is only possible if expansion ran strictly after the level-k
    /// barrier.
    pub claim_generation: Vec<u32>,
}

fn check_source(g: &Graph, source: usize) -> Result<()> {
    if source >= g.vertex_count() {
        return Err(Error::VertexOutOfRange {
            id: source,
            n: g.vertex_count(),
        });
    }
    Ok(())
}

/// Sequential FIFO breadth-first search labeling every reachable vertex.
pub fn bfs_seq(g: &Graph, source: usize) -> Result<BfsResult> {
    bfs_seq_impl(g, source, None::<&fn(usize) -> bool>)
}

/// Sequential search that stops at the first vertex (in FIFO dequeue order)
/// satisfying `target`.
pub fn bfs_seq_find<F>(g: &Graph, source: usize, target: F) -> Result<BfsResult>
where
    F: Fn(usize) -> bool,
{
    bfs_seq_impl(g, source, Some(&target))
}

fn bfs_seq_impl<F>(g: &Graph, source: usize, target: Option<&F>) -> Result<BfsResult>
where
    F: Fn(usize) -> bool,
{
    check_source(g, source)?;
    let mut level = vec![UNREACHED; g.vertex_count()];
    let mut queue = std::collections::VecDeque::new();
    level[source] = 0;
    queue.push_back(source);
    let mut found = None;
    while let Some(u) = queue.pop_front() {
        if let Some(pred) = target {
            if pred(u) {
                found = Some(u);
                break;
            }
        }
        for &v in g.neighbors(u) {
            if level[v] == UNREACHED {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    Ok(BfsResult {
        source,
        level,
        found,
    })
}

/// Level-synchronous parallel search. Produces the exact level array of
/// [`bfs_seq`] for any thread count.
pub fn bfs_parallel(g: &Graph, source: usize, threads: usize) -> Result<BfsResult> {
    let (result, _) = bfs_parallel_impl(g, source, threads, None::<&fn(usize) -> bool>)?;
    Ok(result)
}

/// Parallel search that stops at the first level containing a match and
/// reports the smallest matching vertex id in that level.
pub fn bfs_parallel_find<F>(g: &Graph, source: usize, threads: usize, target: F) -> Result<BfsResult>
where
    F: Fn(usize) -> bool + Sync,
{
    let (result, _) = bfs_parallel_impl(g, source, threads, Some(&target))?;
    Ok(result)
}

/// [`bfs_parallel`] plus claim instrumentation, for checking the
/// exactly-once and barrier properties.
pub fn bfs_parallel_instrumented(
    g: &Graph,
    source: usize,
    threads: usize,
) -> Result<(BfsResult, BfsClaims)> {
    bfs_parallel_impl(g, source, threads, None::<&fn(usize) -> bool>)
}

fn bfs_parallel_impl<F>(
    g: &Graph,
    source: usize,
    threads: usize,
    target: Option<&F>,
) -> Result<(BfsResult, BfsClaims)>
where
    F: Fn(usize) -> bool + Sync,
{
    check_source(g, source)?;
    let n = g.vertex_count();
    let visited: Vec<AtomicBool> = (0..n).map(|_| AtomicBool::new(false)).collect();
    let claims: Vec<AtomicU32> = (0..n).map(|_| AtomicU32::new(0)).collect();
    let claim_generation: Vec<AtomicU32> = (0..n).map(|_| AtomicU32::new(UNREACHED)).collect();

    let mut level = vec![UNREACHED; n];
    let mut frontier = vec![source];
    visited[source].store(true, Ordering::Relaxed);
    claims[source].fetch_add(1, Ordering::Relaxed);
    claim_generation[source].store(0, Ordering::Relaxed);
    level[source] = 0;

    let mut generation: u32 = 0;
    let mut found = None;
    while !frontier.is_empty() {
        if let Some(pred) = target {
            if let Some(hit) = frontier.iter().copied().filter(|&v| pred(v)).min() {
                found = Some(hit);
                break;
            }
        }
        let workers = threads.max(1).min(frontier.len());
        let chunk = frontier.len().div_ceil(workers);
        let mut next = Vec::new();
        thread::scope(|s| {
            let handles: Vec<_> = frontier
                .chunks(chunk)
                .map(|slice| {
                    let visited = &visited;
                    let claims = &claims;
                    let claim_generation = &claim_generation;
                    s.spawn(move || {
                        let mut local = Vec::new();
                        for &u in slice {
                            for &v in g.neighbors(u) {
                                if !visited[v].load(Ordering::Relaxed)
                                    && !visited[v].swap(true, Ordering::SeqCst)
                                {
                                    claims[v].fetch_add(1, Ordering::Relaxed);
                                    claim_generation[v].store(generation, Ordering::Relaxed);
                                    local.push(v);
                                }
                            }
                        }
                        local
                    })
                })
                .collect();
            // Scope join is the level barrier; buffers are concatenated in
            // worker order afterwards.
            for handle in handles {
                next.extend(handle.join().expect("frontier worker panicked"));
            }
        });
        generation += 1;
        for &v in &next {
            level[v] = generation;
        }
        frontier = next;
    }

    let claims = BfsClaims {
        claims: claims.into_iter().map(AtomicU32::into_inner).collect(),
        claim_generation: claim_generation
            .into_iter()
            .map(AtomicU32::into_inner)
            .collect(),
    };
    Ok((
        BfsResult {
            source,
            level,
            found,
        },
        claims,
    ))
}
