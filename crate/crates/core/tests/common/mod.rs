//! Shared generators and reference implementations for the integration
//! tests. The oracles here deliberately use different algorithms and
//! evaluation orders than the library so that agreement is evidence, not
//! tautology.

#![allow(dead_code)]

use mck_core::rng::XorShift64;
use mck_core::Matrix;

/// Matrix of small non-negative integers. All kernel arithmetic on these
/// stays well inside the integer-exact range of f64, so results compare
/// exactly.
pub fn int_matrix(n: usize, seed: u64) -> Matrix {
    let mut rng = XorShift64::new(seed);
    let data = (0..n * n).map(|_| rng.next_below(100) as f64).collect();
    Matrix::from_vec(n, data).unwrap()
}

/// Matrix of floats in [-1, 1).
pub fn float_matrix(n: usize, seed: u64) -> Matrix {
    let mut rng = XorShift64::new(seed);
    let data = (0..n * n).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
    Matrix::from_vec(n, data).unwrap()
}

/// Reference product using an ikj loop with in-place row accumulation, an
/// evaluation order none of the library kernels use.
pub fn oracle_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.order();
    let mut out = vec![0.0f64; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a.get(i, k);
            for j in 0..n {
                out[i * n + j] += aik * b.get(k, j);
            }
        }
    }
    Matrix::from_vec(n, out).unwrap()
}

pub fn assert_matrices_exact(got: &Matrix, want: &Matrix, context: &str) {
    assert_eq!(got.order(), want.order(), "{context}: order");
    for i in 0..want.order() {
        for j in 0..want.order() {
            assert_eq!(
                got.get(i, j),
                want.get(i, j),
                "{context}: element ({i}, {j})"
            );
        }
    }
}

pub fn assert_matrices_close(got: &Matrix, want: &Matrix, rel: f64, context: &str) {
    assert_eq!(got.order(), want.order(), "{context}: order");
    for i in 0..want.order() {
        for j in 0..want.order() {
            let (g, w) = (got.get(i, j), want.get(i, j));
            let scale = w.abs().max(1.0);
            assert!(
                (g - w).abs() <= rel * scale,
                "{context}: element ({i}, {j}): {g} vs {w}"
            );
        }
    }
}

/// Directed edge list where each ordered pair (u, v), u != v, is present
/// independently with probability `density`.
pub fn random_edges(n: usize, density: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = XorShift64::new(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.next_f64() < density {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Same as [`random_edges`] with integer weights drawn from 1..=10.
pub fn random_weighted_edges(n: usize, density: f64, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = XorShift64::new(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.next_f64() < density {
                edges.push((u, v, 1.0 + rng.next_below(10) as f64));
            }
        }
    }
    edges
}

/// Hop counts from `source` by relaxing every edge until nothing improves.
/// No queue, no frontier: just a fixed point, so it shares no machinery
/// with the search implementations it checks.
pub fn oracle_levels(n: usize, edges: &[(usize, usize)], source: usize) -> Vec<u32> {
    let mut level = vec![u32::MAX; n];
    level[source] = 0;
    loop {
        let mut changed = false;
        for &(u, v) in edges {
            if level[u] != u32::MAX && level[u] + 1 < level[v] {
                level[v] = level[u] + 1;
                changed = true;
            }
        }
        if !changed {
            return level;
        }
    }
}

/// All-pairs shortest distances by per-source Bellman-Ford, flattened row
/// major with `f64::INFINITY` for unreachable pairs. Returns `None` when a
/// negative cycle exists.
pub fn oracle_apsp(n: usize, edges: &[(usize, usize, f64)]) -> Option<Vec<f64>> {
    let mut all = vec![f64::INFINITY; n * n];
    for s in 0..n {
        let mut dist = vec![f64::INFINITY; n];
        dist[s] = 0.0;
        for _ in 0..n.saturating_sub(1) {
            let mut changed = false;
            for &(u, v, w) in edges {
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for &(u, v, w) in edges {
            if dist[u] + w < dist[v] {
                return None;
            }
        }
        all[s * n..(s + 1) * n].copy_from_slice(&dist);
    }
    Some(all)
}
