//! Dense matrix multiplication kernels.
//!
//! Four variants with the same mathematical contract and different
//! execution shapes:
//!
//! * [`matmul_naive`]: the reference triple loop, exactly `n^3` scalar
//!   multiplications, used as the correctness oracle by everything else.
//! * [`matmul_parallel`]: the same arithmetic partitioned over disjoint
//!   contiguous row ranges, one chunk per worker thread. Because each output
//!   element is accumulated in the same k-order by exactly one worker, the
//!   result is bitwise identical to the naive kernel for any thread count.
//! * [`matmul_blocked`]: recursive 2x2 block decomposition; the eight
//!   half-order block products at each level are independent and may run
//!   concurrently. Association of additions differs from the naive kernel,
//!   so equality is up to rounding (exact on integer-valued inputs).
//! * [`matmul_strassen`]: seven-product recursion with a configurable
//!   cutoff below which the naive kernel takes over.

use std::thread;

use crate::matrix::{pad_pow2, Matrix};
use crate::{Error, Result};

/// Exact scalar operation counters accumulated during a single kernel run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MulStats {
    pub scalar_multiplications: u64,
    pub scalar_additions: u64,
}

/// Default recursion cutoff for the blocked and Strassen kernels: blocks of
/// this order and below go through the naive kernel.
pub const DEFAULT_CUTOFF: usize = 64;

fn check_orders(a: &Matrix, b: &Matrix) -> Result<usize> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch(a.order(), b.order()));
    }
    Ok(a.order())
}

fn naive_into(a: &[f64], b: &[f64], out: &mut [f64], n: usize, stats: &mut MulStats) {
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    let ops = (n * n * n) as u64;
    stats.scalar_multiplications += ops;
    stats.scalar_additions += ops;
}

/// Reference triple-loop product. Performs exactly `n^3` scalar
/// multiplications (and as many accumulating additions).
pub fn matmul_naive(a: &Matrix, b: &Matrix) -> Result<(Matrix, MulStats)> {
    let n = check_orders(a, b)?;
    let mut stats = MulStats::default();
    let mut out = vec![0.0; n * n];
    naive_into(a.data(), b.data(), &mut out, n, &mut stats);
    Ok((Matrix::from_vec(n, out)?, stats))
}

/// Row-parallel product: output rows are split into contiguous ranges, one
/// chunk per worker. Summation order per element matches [`matmul_naive`],
/// so the result is bitwise identical for every thread count.
pub fn matmul_parallel(a: &Matrix, b: &Matrix, threads: usize) -> Result<Matrix> {
    let n = check_orders(a, b)?;
    let threads = threads.max(1).min(n);
    let chunk_rows = n.div_ceil(threads);
    let mut out = vec![0.0; n * n];
    let (ad, bd) = (a.data(), b.data());
    thread::scope(|s| {
        for (chunk_idx, rows) in out.chunks_mut(chunk_rows * n).enumerate() {
            let row0 = chunk_idx * chunk_rows;
            s.spawn(move || {
                for (r, out_row) in rows.chunks_mut(n).enumerate() {
                    let i = row0 + r;
                    for (j, slot) in out_row.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for k in 0..n {
                            acc += ad[i * n + k] * bd[k * n + j];
                        }
                        *slot = acc;
                    }
                }
            });
        }
    });
    Matrix::from_vec(n, out)
}

/// Blocked product with the default cutoff. See [`matmul_blocked_with`].
pub fn matmul_blocked(a: &Matrix, b: &Matrix, threads: usize) -> Result<Matrix> {
    matmul_blocked_with(a, b, threads, DEFAULT_CUTOFF)
}

/// Recursive 2x2 blocked product. Inputs are zero-padded to a power-of-two
/// order, split into quadrants, and the eight half-order products are
/// computed (concurrently when `threads > 1`) and recombined:
///
/// ```text
/// C11 = A11 B11 + A12 B21      C12 = A11 B12 + A12 B22
/// C21 = A21 B11 + A22 B21      C22 = A21 B12 + A22 B22
/// ```
///
/// Blocks of order `cutoff` and below go through the naive kernel.
pub fn matmul_blocked_with(a: &Matrix, b: &Matrix, threads: usize, cutoff: usize) -> Result<Matrix> {
    let n = check_orders(a, b)?;
    let pa = pad_pow2(a);
    let pb = pad_pow2(b);
    let p = pa.order();
    let out = blocked_rec(pa.data(), pb.data(), p, cutoff.max(1), threads.max(1));
    Matrix::from_vec(p, out)?.crop(n)
}

fn blocked_rec(a: &[f64], b: &[f64], n: usize, cutoff: usize, budget: usize) -> Vec<f64> {
    if n <= cutoff {
        let mut out = vec![0.0; n * n];
        let mut stats = MulStats::default();
        naive_into(a, b, &mut out, n, &mut stats);
        return out;
    }
    let h = n / 2;
    let qa = quadrants(a, n);
    let qb = quadrants(b, n);
    // Eight independent half-order products; products[2q] and
    // products[2q + 1] sum to output quadrant q.
    let tasks: [(usize, usize); 8] = [
        (0, 0), (1, 2), // C11 = A11 B11 + A12 B21
        (0, 1), (1, 3), // C12 = A11 B12 + A12 B22
        (2, 0), (3, 2), // C21 = A21 B11 + A22 B21
        (2, 1), (3, 3), // C22 = A21 B12 + A22 B22
    ];
    let products = run_products(&tasks, &qa, &qb, h, cutoff, budget);
    let mut out = vec![0.0; n * n];
    for q in 0..4 {
        let lhs = &products[2 * q];
        let rhs = &products[2 * q + 1];
        let (r0, c0) = ((q / 2) * h, (q % 2) * h);
        for i in 0..h {
            for j in 0..h {
                out[(r0 + i) * n + c0 + j] = lhs[i * h + j] + rhs[i * h + j];
            }
        }
    }
    out
}

fn run_products(
    tasks: &[(usize, usize); 8],
    qa: &[Vec<f64>; 4],
    qb: &[Vec<f64>; 4],
    h: usize,
    cutoff: usize,
    budget: usize,
) -> Vec<Vec<f64>> {
    if budget <= 1 {
        return tasks
            .iter()
            .map(|&(ia, ib)| blocked_rec(&qa[ia], &qb[ib], h, cutoff, 1))
            .collect();
    }
    let groups = budget.min(8);
    let per_group = 8usize.div_ceil(groups);
    let child_budget = (budget / groups).max(1);
    let mut products: Vec<Vec<f64>> = Vec::with_capacity(8);
    thread::scope(|s| {
        let handles: Vec<_> = tasks
            .chunks(per_group)
            .map(|group| {
                s.spawn(move || {
                    group
                        .iter()
                        .map(|&(ia, ib)| blocked_rec(&qa[ia], &qb[ib], h, cutoff, child_budget))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            products.extend(handle.join().expect("block product worker panicked"));
        }
    });
    products
}

/// Copies the four quadrants of an order-n buffer (n even) into owned
/// half-order buffers, ordered [11, 12, 21, 22].
fn quadrants(m: &[f64], n: usize) -> [Vec<f64>; 4] {
    let h = n / 2;
    let mut qs = [(); 4].map(|_| vec![0.0; h * h]);
    for (q, buf) in qs.iter_mut().enumerate() {
        let (r0, c0) = ((q / 2) * h, (q % 2) * h);
        for i in 0..h {
            buf[i * h..(i + 1) * h]
                .copy_from_slice(&m[(r0 + i) * n + c0..(r0 + i) * n + c0 + h]);
        }
    }
    qs
}

/// Strassen product. Inputs are zero-padded to a power-of-two order; each
/// level computes seven half-order products
///
/// ```text
/// P1 = (A11 + A22)(B11 + B22)    P5 = (A11 + A12) B22
/// P2 = (A21 + A22) B11           P6 = (A21 - A11)(B11 + B12)
/// P3 = A11 (B12 - B22)           P7 = (A12 - A22)(B21 + B22)
/// P4 = A22 (B21 - B11)
/// ```
///
/// recombined as `C11 = P1 + P4 - P5 + P7`, `C12 = P3 + P5`,
/// `C21 = P2 + P4`, `C22 = P1 + P3 - P2 + P6`. Blocks of order `cutoff`
/// and below use the naive kernel; with `cutoff = 1` on an order `2^k`
/// input the multiplication counter comes out to exactly `7^k`.
pub fn matmul_strassen(a: &Matrix, b: &Matrix, cutoff: usize) -> Result<(Matrix, MulStats)> {
    let n = check_orders(a, b)?;
    let pa = pad_pow2(a);
    let pb = pad_pow2(b);
    let p = pa.order();
    let mut stats = MulStats::default();
    let out = strassen_rec(pa.data(), pb.data(), p, cutoff.max(1), &mut stats);
    Ok((Matrix::from_vec(p, out)?.crop(n)?, stats))
}

fn strassen_rec(a: &[f64], b: &[f64], n: usize, cutoff: usize, stats: &mut MulStats) -> Vec<f64> {
    if n <= cutoff {
        let mut out = vec![0.0; n * n];
        naive_into(a, b, &mut out, n, stats);
        return out;
    }
    let h = n / 2;
    let [a11, a12, a21, a22] = quadrants(a, n);
    let [b11, b12, b21, b22] = quadrants(b, n);

    let rec = |x: &[f64], y: &[f64], stats: &mut MulStats| strassen_rec(x, y, h, cutoff, stats);

    let p1 = {
        let (s, t) = (ew_add(&a11, &a22, stats), ew_add(&b11, &b22, stats));
        rec(&s, &t, stats)
    };
    let p2 = {
        let s = ew_add(&a21, &a22, stats);
        rec(&s, &b11, stats)
    };
    let p3 = {
        let t = ew_sub(&b12, &b22, stats);
        rec(&a11, &t, stats)
    };
    let p4 = {
        let t = ew_sub(&b21, &b11, stats);
        rec(&a22, &t, stats)
    };
    let p5 = {
        let s = ew_add(&a11, &a12, stats);
        rec(&s, &b22, stats)
    };
    let p6 = {
        let (s, t) = (ew_sub(&a21, &a11, stats), ew_add(&b11, &b12, stats));
        rec(&s, &t, stats)
    };
    let p7 = {
        let (s, t) = (ew_sub(&a12, &a22, stats), ew_add(&b21, &b22, stats));
        rec(&s, &t, stats)
    };

    let mut out = vec![0.0; n * n];
    for i in 0..h {
        for j in 0..h {
            let e = i * h + j;
            let c11 = p1[e] + p4[e] - p5[e] + p7[e];
            let c12 = p3[e] + p5[e];
            let c21 = p2[e] + p4[e];
            let c22 = p1[e] + p3[e] - p2[e] + p6[e];
            out[i * n + j] = c11;
            out[i * n + j + h] = c12;
            out[(i + h) * n + j] = c21;
            out[(i + h) * n + j + h] = c22;
        }
    }
    stats.scalar_additions += 8 * (h * h) as u64;
    out
}

fn ew_add(a: &[f64], b: &[f64], stats: &mut MulStats) -> Vec<f64> {
    stats.scalar_additions += a.len() as u64;
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn ew_sub(a: &[f64], b: &[f64], stats: &mut MulStats) -> Vec<f64> {
    stats.scalar_additions += a.len() as u64;
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
