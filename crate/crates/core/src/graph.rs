//! Unweighted directed graphs as adjacency lists.

use std::collections::HashSet;

use crate::{Error, Result};

/// Directed graph over vertices `0..vertex_count`. Adjacency lists keep the
/// edge input order; duplicate edges are dropped at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        if vertex_count == 0 {
            return Err(Error::InvalidGraph("vertex count must be at least 1".into()));
        }
        if vertex_count >= u32::MAX as usize {
            return Err(Error::InvalidGraph("vertex count too large".into()));
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut seen = HashSet::new();
        let mut edge_count = 0;
        for &(u, v) in edges {
            for id in [u, v] {
                if id >= vertex_count {
                    return Err(Error::VertexOutOfRange { id, n: vertex_count });
                }
            }
            if seen.insert((u, v)) {
                adjacency[u].push(v);
                edge_count += 1;
            }
        }
        Ok(Graph {
            adjacency,
            edge_count,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    /// Parses the plain text format: first line `n m`, then `m` lines of
    /// `u v` edges.
    pub fn from_text(text: &str) -> Result<Graph> {
        let (n, m, rest) = parse_header(text)?;
        let mut edges = Vec::with_capacity(m);
        for (idx, line) in rest.take(m).enumerate() {
            let mut it = line.split_whitespace();
            let (u, v) = match (it.next(), it.next(), it.next()) {
                (Some(u), Some(v), None) => (parse_id(u)?, parse_id(v)?),
                _ => {
                    return Err(Error::InvalidGraph(format!(
                        "edge line {idx} must be \"u v\", got {line:?}"
                    )))
                }
            };
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::InvalidGraph(format!(
                "expected {m} edge lines, got {}",
                edges.len()
            )));
        }
        Graph::from_edges(n, &edges)
    }

    /// Inverse of [`Graph::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vertex_count(), self.edge_count());
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// Parses the weighted text format: first line `n m`, then `m` lines of
/// `u v w` with decimal weights.
pub fn read_weighted_edges(text: &str) -> Result<(usize, Vec<(usize, usize, f64)>)> {
    let (n, m, rest) = parse_header(text)?;
    let mut edges = Vec::with_capacity(m);
    for (idx, line) in rest.take(m).enumerate() {
        let mut it = line.split_whitespace();
        let (u, v, w) = match (it.next(), it.next(), it.next(), it.next()) {
            (Some(u), Some(v), Some(w), None) => (
                parse_id(u)?,
                parse_id(v)?,
                w.parse::<f64>().map_err(|_| {
                    Error::InvalidGraph(format!("bad weight {w:?} on edge line {idx}"))
                })?,
            ),
            _ => {
                return Err(Error::InvalidGraph(format!(
                    "edge line {idx} must be \"u v w\", got {line:?}"
                )))
            }
        };
        edges.push((u, v, w));
    }
    if edges.len() != m {
        return Err(Error::InvalidGraph(format!(
            "expected {m} edge lines, got {}",
            edges.len()
        )));
    }
    Ok((n, edges))
}

/// Inverse of [`read_weighted_edges`].
pub fn weighted_edges_to_text(n: usize, edges: &[(usize, usize, f64)]) -> String {
    let mut out = format!("{} {}\n", n, edges.len());
    for &(u, v, w) in edges {
        out.push_str(&format!("{u} {v} {w}\n"));
    }
    out
}

fn parse_header(text: &str) -> Result<(usize, usize, std::str::Lines<'_>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidGraph("empty input".into()))?;
    let mut it = header.split_whitespace();
    let (n, m) = match (it.next(), it.next(), it.next()) {
        (Some(n), Some(m), None) => (parse_id(n)?, parse_id(m)?),
        _ => {
            return Err(Error::InvalidGraph(format!(
                "header must be \"n m\", got {header:?}"
            )))
        }
    };
    Ok((n, m, lines))
}

fn parse_id(tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::InvalidGraph(format!("bad integer {tok:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_adjacency_in_input_order() {
        let g = Graph::from_edges(4, &[(0, 3), (0, 1), (1, 2)]).unwrap();
        assert_eq!(g.neighbors(0), &[3, 1]);
        assert_eq!(g.neighbors(1), &[2]);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn drops_duplicate_edges() {
        let g = Graph::from_edges(3, &[(0, 1), (0, 1), (1, 2), (0, 1)]).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn single_vertex_no_edges() {
        let g = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn rejects_out_of_range_vertices() {
        let err = Graph::from_edges(2, &[(0, 2)]).unwrap_err();
        assert!(err.to_string().contains("vertex id out of range"));
    }

    #[test]
    fn text_round_trip() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(Graph::from_text(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn text_rejects_malformed_lines() {
        assert!(Graph::from_text("2 1\n0\n").is_err());
        assert!(Graph::from_text("2 2\n0 1\n").is_err());
        assert!(Graph::from_text("x 1\n0 1\n").is_err());
    }

    #[test]
    fn weighted_text_round_trip() {
        let edges = vec![(0, 1, 2.5), (1, 2, 1.0)];
        let text = weighted_edges_to_text(3, &edges);
        assert_eq!(read_weighted_edges(&text).unwrap(), (3, edges));
    }
}
