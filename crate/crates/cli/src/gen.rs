//! Seeded input generators. The same `(shape, seed)` always produces the
//! same matrix or graph, so benchmark runs are reproducible and failures
//! can be replayed.

use mck_core::graph::Graph;
use mck_core::rng::XorShift64;
use mck_core::{Error, Matrix, Result};

/// Value distribution for generated matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMode {
    /// Integers in [0, 2^20), stored as f64. Products and row sums stay
    /// inside the integer-exact range of f64 for every order this tool
    /// generates, so results can be compared for exact equality.
    Int,
    /// Floats in [0, 1).
    Float,
}

pub fn gen_matrix(n: usize, seed: u64, mode: ValueMode) -> Result<Matrix> {
    let mut rng = XorShift64::new(seed);
    let data = (0..n * n)
        .map(|_| match mode {
            ValueMode::Int => (rng.next_u64() >> 44) as f64,
            ValueMode::Float => rng.next_f64(),
        })
        .collect();
    Matrix::from_vec(n, data)
}

fn check_density(density: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidArgument(format!(
            "edge density must be between 0 and 1, got {density}"
        )));
    }
    Ok(())
}

/// Directed edges where each ordered pair `(u, v)`, `u != v`, appears
/// independently with probability `density`.
pub fn gen_edges(n: usize, density: f64, seed: u64) -> Result<Vec<(usize, usize)>> {
    check_density(density)?;
    let mut rng = XorShift64::new(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.next_f64() < density {
                edges.push((u, v));
            }
        }
    }
    Ok(edges)
}

pub fn gen_graph(n: usize, density: f64, seed: u64) -> Result<Graph> {
    Graph::from_edges(n, &gen_edges(n, density, seed)?)
}

/// Like [`gen_edges`] with integer weights drawn uniformly from 1..=10.
pub fn gen_weighted_edges(n: usize, density: f64, seed: u64) -> Result<Vec<(usize, usize, f64)>> {
    check_density(density)?;
    let mut rng = XorShift64::new(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.next_f64() < density {
                edges.push((u, v, 1.0 + rng.next_below(10) as f64));
            }
        }
    }
    Ok(edges)
}
