//! Breadth-first search against a relaxation oracle, plus the claim
//! instrumentation invariants of the parallel traversal.

mod common;

use common::{oracle_levels, random_edges};
use mck_core::bfs::{
    bfs_parallel, bfs_parallel_find, bfs_parallel_instrumented, bfs_seq, bfs_seq_find, UNREACHED,
};
use mck_core::graph::Graph;
use proptest::prelude::*;

fn corpus() -> Vec<(usize, Vec<(usize, usize)>)> {
    let mut graphs = Vec::new();
    for n in [1usize, 2, 3, 5, 8, 13, 21, 40] {
        for density in [0.05, 0.2, 0.5] {
            let seed = (n as u64) * 100 + (density * 10.0) as u64;
            graphs.push((n, random_edges(n, density, seed)));
        }
    }
    // A long path and a star: extreme depth and extreme fanout.
    graphs.push((64, (0..63).map(|i| (i, i + 1)).collect()));
    graphs.push((64, (1..64).map(|v| (0, v)).collect()));
    graphs
}

#[test]
fn sequential_levels_match_the_relaxation_oracle() {
    for (n, edges) in corpus() {
        let g = Graph::from_edges(n, &edges).unwrap();
        for source in [0, n / 2, n - 1] {
            let got = bfs_seq(&g, source).unwrap();
            assert_eq!(
                got.level,
                oracle_levels(n, &edges, source),
                "n={n} m={} source={source}",
                edges.len()
            );
        }
    }
}

#[test]
fn parallel_levels_equal_sequential_for_every_thread_count() {
    for (n, edges) in corpus() {
        let g = Graph::from_edges(n, &edges).unwrap();
        let source = 0;
        let want = bfs_seq(&g, source).unwrap();
        for threads in [1usize, 2, 4, 8] {
            let got = bfs_parallel(&g, source, threads).unwrap();
            assert_eq!(got, want, "n={n} threads={threads}");
        }
    }
}

#[test]
fn parallel_claims_are_exactly_once_and_barrier_aligned() {
    for (n, edges) in corpus() {
        let g = Graph::from_edges(n, &edges).unwrap();
        for threads in [1usize, 2, 4, 8] {
            let (result, claims) = bfs_parallel_instrumented(&g, 0, threads).unwrap();
            for v in 0..n {
                if result.level[v] == UNREACHED {
                    assert_eq!(claims.claims[v], 0, "unreached v={v} claimed");
                } else {
                    assert_eq!(
                        claims.claims[v], 1,
                        "v={v} claimed {} times (n={n} threads={threads})",
                        claims.claims[v]
                    );
                    if v != 0 {
                        assert_eq!(
                            claims.claim_generation[v] + 1,
                            result.level[v],
                            "v={v} claimed outside its level barrier"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn contended_fanin_still_claims_each_vertex_once() {
    // Two fully connected layers: every worker expanding layer one races
    // to claim every vertex of layer two.
    let left: Vec<usize> = (1..11).collect();
    let right: Vec<usize> = (11..31).collect();
    let mut edges: Vec<(usize, usize)> = left.iter().map(|&v| (0, v)).collect();
    for &u in &left {
        for &v in &right {
            edges.push((u, v));
        }
    }
    let g = Graph::from_edges(31, &edges).unwrap();
    for threads in [2usize, 4, 8, 16] {
        let (result, claims) = bfs_parallel_instrumented(&g, 0, threads).unwrap();
        for &v in &right {
            assert_eq!(result.level[v], 2);
            assert_eq!(claims.claims[v], 1, "threads={threads} v={v}");
            assert_eq!(claims.claim_generation[v], 1);
        }
    }
}

#[test]
fn find_variants_agree_on_the_level_and_disagree_only_within_it() {
    for (n, edges) in corpus() {
        if n < 8 {
            continue;
        }
        let g = Graph::from_edges(n, &edges).unwrap();
        let full = bfs_seq(&g, 0).unwrap();
        let pred = |v: usize| v % 7 == 3;
        let seq = bfs_seq_find(&g, 0, pred).unwrap();
        let par = bfs_parallel_find(&g, 0, 4, pred).unwrap();
        match (seq.found, par.found) {
            (None, None) => {
                assert!(!(0..n).any(|v| pred(v) && full.level[v] != UNREACHED));
            }
            (Some(s), Some(p)) => {
                assert!(pred(s) && pred(p));
                // Both stop at the first level containing any match.
                let match_level = (0..n)
                    .filter(|&v| pred(v) && full.level[v] != UNREACHED)
                    .map(|v| full.level[v])
                    .min()
                    .unwrap();
                assert_eq!(full.level[s], match_level, "n={n}");
                assert_eq!(full.level[p], match_level, "n={n}");
                // The parallel variant reports the smallest id in that level.
                let min_id = (0..n)
                    .filter(|&v| pred(v) && full.level[v] == match_level)
                    .min()
                    .unwrap();
                assert_eq!(p, min_id, "n={n}");
            }
            other => panic!("n={n}: one variant found a match, the other did not: {other:?}"),
        }
    }
}

#[test]
fn fifo_and_min_id_semantics_differ_on_a_crafted_graph() {
    // 0 -> 2 then 0 -> 1: FIFO dequeues 2 first, but 1 is the smaller id
    // in the same frontier.
    let g = Graph::from_edges(3, &[(0, 2), (0, 1)]).unwrap();
    let pred = |v: usize| v != 0;
    let seq = bfs_seq_find(&g, 0, pred).unwrap();
    let par = bfs_parallel_find(&g, 0, 2, pred).unwrap();
    assert_eq!(seq.found, Some(2));
    assert_eq!(par.found, Some(1));
}

#[test]
fn out_of_range_source_is_rejected() {
    let g = Graph::from_edges(5, &[(0, 1)]).unwrap();
    let err = bfs_seq(&g, 5).unwrap_err();
    assert_eq!(err.to_string(), "vertex id out of range: 5 (vertex count 5)");
    assert!(bfs_parallel(&g, 9, 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parallel_equals_sequential_with_valid_claims(
        n in 1usize..24,
        density in 0.0f64..0.6,
        threads in 1usize..9,
        seed in any::<u64>(),
    ) {
        let edges = random_edges(n, density, seed);
        let g = Graph::from_edges(n, &edges).unwrap();
        let want = bfs_seq(&g, 0).unwrap();
        let (got, claims) = bfs_parallel_instrumented(&g, 0, threads).unwrap();
        prop_assert_eq!(&got.level, &want.level);
        for v in 0..n {
            let expected = u32::from(got.level[v] != UNREACHED);
            prop_assert_eq!(claims.claims[v], expected);
        }
    }
}
