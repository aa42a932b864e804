//! All-pairs shortest paths over weighted digraphs.
//!
//! Distances use `f64` with `f64::INFINITY` for "no path". Infinity is
//! absorbing under addition and loses every `min`, so no finite sentinel
//! arithmetic can overflow or corrupt comparisons.
//!
//! Two equivalent kernels are provided:
//!
//! * [`fw_iterative`]: the in-place relaxation sweep, `for k, i, j:
//!   d[i][j] = min(d[i][j], d[i][k] + d[k][j])`.
//! * [`fw_recursive`]: the same relaxations reorganized into a recursive
//!   2x2 block schedule. Each level splits the three operand blocks into
//!   quadrants and issues eight sub-problems in a fixed sequential order;
//!   blocks at or below [`FwConfig::base_block_order`] run the iterative
//!   kernel directly. The recursion keeps consecutive kernel calls on
//!   overlapping blocks, which is what the block-touch proxy measures.
//!
//! Both kernels compute the same min-plus values and agree element-for-
//! element; with integer weights every intermediate is exact.

use crate::graph::read_weighted_edges;
use crate::{Error, Result};

/// Absence of a path.
pub const INF: f64 = f64::INFINITY;

/// Square matrix of pairwise distances. The diagonal is zero on
/// construction and must stay non-negative (a negative diagonal after a
/// relaxation run means a negative cycle).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<f64>,
}

impl DistanceMatrix {
    /// Matrix with zero diagonal and `INF` everywhere else.
    pub fn disconnected(n: usize) -> Result<DistanceMatrix> {
        if n == 0 {
            return Err(Error::InvalidMatrix("order must be at least 1".into()));
        }
        let mut dist = vec![INF; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
        }
        Ok(DistanceMatrix { n, dist })
    }

    /// Builds the one-hop distance matrix from directed weighted edges.
    /// Parallel edges keep the smallest weight; self-loops are rejected
    /// (the diagonal is zero by convention).
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<DistanceMatrix> {
        let mut dm = DistanceMatrix::disconnected(n)?;
        for &(u, v, w) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::VertexOutOfRange { id, n });
                }
            }
            if u == v {
                return Err(Error::InvalidGraph(format!(
                    "self-loop on vertex {u} not allowed"
                )));
            }
            let slot = &mut dm.dist[u * n + v];
            if w < *slot {
                *slot = w;
            }
        }
        Ok(dm)
    }

    /// Wraps a raw row-major buffer. The diagonal must be zero.
    pub fn from_raw(n: usize, dist: Vec<f64>) -> Result<DistanceMatrix> {
        if n == 0 || dist.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "order {n} needs {} values, got {}",
                n * n,
                dist.len()
            )));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry ({i},{i}) must be 0"
                )));
            }
        }
        Ok(DistanceMatrix { n, dist })
    }

    /// Parses the weighted graph text format (`n m`, then `u v w` lines).
    pub fn from_text(text: &str) -> Result<DistanceMatrix> {
        let (n, edges) = read_weighted_edges(text)?;
        DistanceMatrix::from_edges(n, &edges)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }

    /// Distance table as text: the order on the first line, then one row
    /// per line with `inf` for unreachable pairs.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.n.to_string());
        out.push('\n');
        for i in 0..self.n {
            for j in 0..self.n {
                if j > 0 {
                    out.push(' ');
                }
                let v = self.get(i, j);
                if v == f64::INFINITY {
                    out.push_str("inf");
                } else {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    /// Runs the relaxation sweep `A[i][j] = min(A[i][j], B[i][k] + C[k][j])`
    /// for `k`, then `i`, then `j` over block-local indices, on three
    /// equal-order square sub-blocks of this matrix. The blocks may alias
    /// each other; every read sees the current (possibly just-updated)
    /// value.
    pub fn fwi_kernel(&mut self, a: Block, b: Block, c: Block) -> Result<()> {
        if a.order != b.order || a.order != c.order {
            return Err(Error::OrderMismatch(
                a.order,
                if a.order != b.order { b.order } else { c.order },
            ));
        }
        for blk in [a, b, c] {
            if blk.row + blk.order > self.n || blk.col + blk.order > self.n {
                return Err(Error::InvalidArgument(format!(
                    "block {}x{} at ({},{}) exceeds matrix order {}",
                    blk.order, blk.order, blk.row, blk.col, self.n
                )));
            }
        }
        let n = self.n;
        let m = a.order;
        let d = &mut self.dist;
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let through = d[(b.row + i) * n + b.col + k] + d[(c.row + k) * n + c.col + j];
                    let slot = &mut d[(a.row + i) * n + a.col + j];
                    if through < *slot {
                        *slot = through;
                    }
                }
            }
        }
        Ok(())
    }

    fn pad_pow2(&self) -> DistanceMatrix {
        let p = self.n.next_power_of_two();
        if p == self.n {
            return self.clone();
        }
        let mut out = DistanceMatrix::disconnected(p).expect("padded order is nonzero");
        for i in 0..self.n {
            out.dist[i * p..i * p + self.n]
                .copy_from_slice(&self.dist[i * self.n..(i + 1) * self.n]);
        }
        out
    }

    fn crop(&self, m: usize) -> DistanceMatrix {
        let mut dist = Vec::with_capacity(m * m);
        for i in 0..m {
            dist.extend_from_slice(&self.dist[i * self.n..i * self.n + m]);
        }
        DistanceMatrix { n: m, dist }
    }
}

/// Square sub-block of a [`DistanceMatrix`]: rows `row..row + order`,
/// columns `col..col + order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub row: usize,
    pub col: usize,
    pub order: usize,
}

impl Block {
    fn quadrant(self, qr: usize, qc: usize) -> Block {
        let h = self.order / 2;
        Block {
            row: self.row + qr * h,
            col: self.col + qc * h,
            order: h,
        }
    }
}

/// Configuration for the recursive kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FwConfig {
    /// Recursion stops at blocks of this order or below. A value of at
    /// least the (padded) matrix order degenerates to a single iterative
    /// sweep.
    pub base_block_order: usize,
}

impl Default for FwConfig {
    fn default() -> Self {
        FwConfig {
            base_block_order: 64,
        }
    }
}

impl FwConfig {
    pub fn new(base_block_order: usize) -> Result<FwConfig> {
        if base_block_order == 0 {
            return Err(Error::InvalidArgument(
                "base block order must be at least 1".into(),
            ));
        }
        Ok(FwConfig { base_block_order })
    }
}

fn check_negative_diagonal(dm: &DistanceMatrix) -> Result<()> {
    for i in 0..dm.n {
        if dm.get(i, i) < 0.0 {
            return Err(Error::NegativeCycle);
        }
    }
    Ok(())
}

/// In-place iterative relaxation over the whole matrix. Fails with a
/// "negative cycle" error if any diagonal entry goes negative.
pub fn fw_iterative(mut w: DistanceMatrix) -> Result<DistanceMatrix> {
    let full = Block {
        row: 0,
        col: 0,
        order: w.n,
    };
    w.fwi_kernel(full, full, full)?;
    check_negative_diagonal(&w)?;
    Ok(w)
}

/// Recursive blocked relaxation. The input is padded to a power-of-two
/// order (zero diagonal, `INF` elsewhere in the pad), processed by the
/// recursive schedule, and cropped back. Produces exactly the values of
/// [`fw_iterative`].
pub fn fw_recursive(w: DistanceMatrix, cfg: &FwConfig) -> Result<DistanceMatrix> {
    if cfg.base_block_order == 0 {
        return Err(Error::InvalidArgument(
            "base block order must be at least 1".into(),
        ));
    }
    let n = w.n;
    let mut padded = w.pad_pow2();
    let full = Block {
        row: 0,
        col: 0,
        order: padded.n,
    };
    fwr(&mut padded, full, full, full, cfg.base_block_order, &mut None)?;
    let out = padded.crop(n);
    check_negative_diagonal(&out)?;
    Ok(out)
}

/// The eight-call recursive schedule. Strictly sequential: later calls
/// read blocks the earlier calls finished updating.
fn fwr(
    d: &mut DistanceMatrix,
    a: Block,
    b: Block,
    c: Block,
    base: usize,
    touches: &mut Option<TouchCounter>,
) -> Result<()> {
    if a.order <= base {
        if let Some(t) = touches {
            t.record([
                (a.row, a.col),
                (b.row, b.col),
                (c.row, c.col),
            ]);
        }
        return d.fwi_kernel(a, b, c);
    }
    let (a11, a12, a21, a22) = (
        a.quadrant(0, 0),
        a.quadrant(0, 1),
        a.quadrant(1, 0),
        a.quadrant(1, 1),
    );
    let (b11, b12, b21, b22) = (
        b.quadrant(0, 0),
        b.quadrant(0, 1),
        b.quadrant(1, 0),
        b.quadrant(1, 1),
    );
    let (c11, c12, c21, c22) = (
        c.quadrant(0, 0),
        c.quadrant(0, 1),
        c.quadrant(1, 0),
        c.quadrant(1, 1),
    );
    fwr(d, a11, b11, c11, base, touches)?;
    fwr(d, a12, b11, c12, base, touches)?;
    fwr(d, a21, b21, c11, base, touches)?;
    fwr(d, a22, b21, c12, base, touches)?;
    fwr(d, a22, b22, c22, base, touches)?;
    fwr(d, a21, b22, c21, base, touches)?;
    fwr(d, a12, b12, c22, base, touches)?;
    fwr(d, a11, b12, c21, base, touches)?;
    Ok(())
}

struct TouchCounter {
    prev: Vec<(usize, usize)>,
    count: u64,
}

impl TouchCounter {
    fn new() -> TouchCounter {
        TouchCounter {
            prev: Vec::new(),
            count: 0,
        }
    }

    /// Counts the blocks of this invocation that the immediately preceding
    /// invocation did not touch.
    fn record(&mut self, blocks: [(usize, usize); 3]) {
        let mut current: Vec<(usize, usize)> = Vec::with_capacity(3);
        for b in blocks {
            if !current.contains(&b) {
                current.push(b);
            }
        }
        self.count += current.iter().filter(|b| !self.prev.contains(b)).count() as u64;
        self.prev = current;
    }
}

/// Runs the recursive kernel and returns its block-touch count: the number
/// of (block, kernel invocation) pairs where the invocation touches a block
/// the immediately preceding invocation did not. A machine-independent
/// proxy for cache refills.
pub fn count_block_touches(w: &DistanceMatrix, cfg: &FwConfig) -> Result<u64> {
    if cfg.base_block_order == 0 {
        return Err(Error::InvalidArgument(
            "base block order must be at least 1".into(),
        ));
    }
    let mut padded = w.pad_pow2();
    let full = Block {
        row: 0,
        col: 0,
        order: padded.n,
    };
    let mut touches = Some(TouchCounter::new());
    fwr(&mut padded, full, full, full, cfg.base_block_order, &mut touches)?;
    Ok(touches.expect("counter installed above").count)
}

/// Block-touch count for the iterative full-matrix sweep, measured on a
/// tile grid of the given order. The sweep at step `(k, i)` scans row `i`
/// and row `k`; each maximal run of `j` inside one tile column counts as
/// one invocation touching the tiles holding `d[i][j]`, `d[i][k]`, and
/// `d[k][j]`, scored with the same rule as [`count_block_touches`]. The
/// access pattern of the sweep is data-independent, so only the order and
/// tile size matter.
pub fn count_sweep_touches(n: usize, tile_order: usize) -> u64 {
    let b = tile_order.max(1).min(n.max(1));
    let tiles = n.div_ceil(b);
    let mut counter = TouchCounter::new();
    for k in 0..n {
        let kt = k / b;
        for i in 0..n {
            let it = i / b;
            for jt in 0..tiles {
                counter.record([(it, jt), (it, kt), (kt, jt)]);
            }
        }
    }
    counter.count
}
