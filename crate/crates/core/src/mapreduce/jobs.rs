//! Ready-made jobs built on the engine.

use crate::matrix::Matrix;
use crate::{Error, Result};

use super::{run_job, JobConfig, JobReport, KeyValue, UserResult};

/// Map half of word counting: emits `(word, "1")` for every whitespace
/// separated word in the split.
pub fn wordcount_map(split: &[u8]) -> UserResult {
    let text = std::str::from_utf8(split).map_err(|e| format!("split is not UTF-8: {e}"))?;
    Ok(text
        .split_whitespace()
        .map(|w| KeyValue::new(w, "1"))
        .collect())
}

/// Reduce half of word counting: emits `(word, count)` with the count in
/// decimal.
pub fn wordcount_reduce(key: &[u8], values: &[Vec<u8>]) -> UserResult {
    Ok(vec![KeyValue::new(key, values.len().to_string())])
}

const TAG_A: u8 = 0;
const TAG_B: u8 = 1;

/// Multiplies two square matrices as a MapReduce job over `num_reduce_tasks`
/// reduce tasks, which must be a power of four. The operands are cut into a
/// `g x g` grid of blocks (`g = sqrt(num_reduce_tasks)`, orders padded up
/// with zeros as needed). Each map task relabels one block with every
/// output block it feeds; each reduce key `(I, J)` receives the row of A
/// blocks and column of B blocks it needs, sorted so the shared block index
/// ascends, and accumulates the product with the shared dimension in
/// ascending order. Every output element therefore sees exactly the
/// additions a plain triple loop performs, in the same order, and the
/// result is bit identical to it regardless of worker count or faults.
pub fn mr_matmul(
    a: &Matrix,
    b: &Matrix,
    num_reduce_tasks: usize,
    cfg: &JobConfig,
) -> Result<Matrix> {
    mr_matmul_full(a, b, num_reduce_tasks, cfg).map(|(c, _)| c)
}

/// Like [`mr_matmul`] but also returns the job report.
pub fn mr_matmul_full(
    a: &Matrix,
    b: &Matrix,
    num_reduce_tasks: usize,
    cfg: &JobConfig,
) -> Result<(Matrix, JobReport)> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch(a.order(), b.order()));
    }
    let r = num_reduce_tasks;
    if r == 0 || !r.is_power_of_two() || r.trailing_zeros() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "reduce task count must be a power of four, got {r}"
        )));
    }
    let g = 1usize << (r.trailing_zeros() / 2);
    let n = a.order();
    let block_order = n.div_ceil(g);

    let mut splits = Vec::with_capacity(2 * g * g);
    for (tag, mat) in [(TAG_A, a), (TAG_B, b)] {
        for bi in 0..g {
            for bj in 0..g {
                splits.push(encode_block(tag, bi, bj, g, block_order, mat));
            }
        }
    }

    let job_cfg = JobConfig {
        num_reduce_tasks: r,
        ..cfg.clone()
    };
    let (pairs, report) = run_job(block_map, block_reduce, &splits, &job_cfg)?;

    let malformed = || Error::InvalidArgument("malformed result block".into());
    if pairs.len() != g * g {
        return Err(malformed());
    }
    let m = block_order;
    let mut data = vec![0.0f64; n * n];
    let mut seen = vec![false; g * g];
    for kv in &pairs {
        let (bi, bj) = decode_key(&kv.key).ok_or_else(malformed)?;
        let block = decode_f64s(&kv.value);
        if bi >= g || bj >= g || block.len() != m * m || seen[bi * g + bj] {
            return Err(malformed());
        }
        seen[bi * g + bj] = true;
        for i in 0..m {
            let gi = bi * m + i;
            if gi >= n {
                break;
            }
            for j in 0..m {
                let gj = bj * m + j;
                if gj >= n {
                    continue;
                }
                data[gi * n + gj] = block[i * m + j];
            }
        }
    }
    Ok((Matrix::from_vec(n, data)?, report))
}

/// Split layout: `[tag][block row][block col][grid][block order]` header
/// (u32 little endian after the tag byte) followed by the block's values
/// row major as f64 little endian, zero padded past the matrix edge.
fn encode_block(tag: u8, bi: usize, bj: usize, g: usize, m: usize, mat: &Matrix) -> Vec<u8> {
    let n = mat.order();
    let mut out = Vec::with_capacity(17 + m * m * 8);
    out.push(tag);
    for v in [bi as u32, bj as u32, g as u32, m as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for i in 0..m {
        for j in 0..m {
            let (gi, gj) = (bi * m + i, bj * m + j);
            let v = if gi < n && gj < n { mat.get(gi, gj) } else { 0.0 };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Intermediate key: output block coordinates, big endian so that byte
/// order equals numeric order.
fn block_key(bi: usize, bj: usize) -> Vec<u8> {
    let mut key = Vec::with_capacity(8);
    key.extend_from_slice(&(bi as u32).to_be_bytes());
    key.extend_from_slice(&(bj as u32).to_be_bytes());
    key
}

fn decode_key(key: &[u8]) -> Option<(usize, usize)> {
    if key.len() != 8 {
        return None;
    }
    let bi = u32::from_be_bytes(key[..4].try_into().ok()?) as usize;
    let bj = u32::from_be_bytes(key[4..].try_into().ok()?) as usize;
    Some((bi, bj))
}

/// Intermediate value: `[tag][shared block index (big endian)][payload]`.
/// Sorting values by bytes therefore yields all A blocks, by shared index
/// ascending, followed by all B blocks in the same order.
fn block_value(tag: u8, k: usize, payload: &[u8]) -> Vec<u8> {
    let mut v = Vec::with_capacity(5 + payload.len());
    v.push(tag);
    v.extend_from_slice(&(k as u32).to_be_bytes());
    v.extend_from_slice(payload);
    v
}

fn decode_f64s(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect()
}

fn block_map(split: &[u8]) -> UserResult {
    if split.len() < 17 {
        return Err("block split too short".into());
    }
    let tag = split[0];
    let word = |i: usize| {
        u32::from_le_bytes(split[1 + 4 * i..5 + 4 * i].try_into().expect("4 bytes")) as usize
    };
    let (bi, bj, g, m) = (word(0), word(1), word(2), word(3));
    if split.len() != 17 + m * m * 8 {
        return Err("block split length mismatch".into());
    }
    let payload = &split[17..];
    let mut out = Vec::with_capacity(g);
    match tag {
        // A block (I, K) feeds every output block in row I.
        TAG_A => {
            for j in 0..g {
                out.push(KeyValue {
                    key: block_key(bi, j),
                    value: block_value(TAG_A, bj, payload),
                });
            }
        }
        // B block (K, J) feeds every output block in column J.
        TAG_B => {
            for i in 0..g {
                out.push(KeyValue {
                    key: block_key(i, bj),
                    value: block_value(TAG_B, bi, payload),
                });
            }
        }
        _ => return Err(format!("unknown block tag {tag}")),
    }
    Ok(out)
}

fn block_reduce(key: &[u8], values: &[Vec<u8>]) -> UserResult {
    if values.len() < 2 || values.len() % 2 != 0 {
        return Err(format!("expected an even number of blocks, got {}", values.len()));
    }
    let g = values.len() / 2;
    let mut a_blocks = Vec::with_capacity(g);
    let mut b_blocks = Vec::with_capacity(g);
    for v in values {
        if v.len() < 5 {
            return Err("block value too short".into());
        }
        let k = u32::from_be_bytes(v[1..5].try_into().expect("4 bytes")) as usize;
        let payload = decode_f64s(&v[5..]);
        match v[0] {
            TAG_A => a_blocks.push((k, payload)),
            TAG_B => b_blocks.push((k, payload)),
            t => return Err(format!("unknown block tag {t}")),
        }
    }
    if a_blocks.len() != g || b_blocks.len() != g {
        return Err("unbalanced A and B blocks".into());
    }
    let mm = a_blocks[0].1.len();
    let m = (mm as f64).sqrt() as usize;
    if m * m != mm {
        return Err("block is not square".into());
    }
    let mut c = vec![0.0f64; mm];
    for kk in 0..g {
        let (ka, av) = &a_blocks[kk];
        let (kb, bv) = &b_blocks[kk];
        if *ka != kk || *kb != kk || av.len() != mm || bv.len() != mm {
            return Err("blocks out of order".into());
        }
        for i in 0..m {
            for k in 0..m {
                let aik = av[i * m + k];
                for j in 0..m {
                    c[i * m + j] += aik * bv[k * m + j];
                }
            }
        }
    }
    let mut value = Vec::with_capacity(mm * 8);
    for v in &c {
        value.extend_from_slice(&v.to_le_bytes());
    }
    Ok(vec![KeyValue {
        key: key.to_vec(),
        value,
    }])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matmul::matmul_naive;
    use crate::mapreduce::WorkerFault;
    use crate::rng::XorShift64;

    fn random_matrix(n: usize, seed: u64) -> Matrix {
        let mut rng = XorShift64::new(seed);
        let data = (0..n * n).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        Matrix::from_vec(n, data).unwrap()
    }

    fn int_matrix(n: usize, seed: u64) -> Matrix {
        let mut rng = XorShift64::new(seed);
        let data = (0..n * n).map(|_| rng.next_below(100) as f64).collect();
        Matrix::from_vec(n, data).unwrap()
    }

    fn assert_bits_equal(got: &Matrix, want: &Matrix) {
        assert_eq!(got.order(), want.order());
        for i in 0..got.order() {
            for j in 0..got.order() {
                assert_eq!(
                    got.get(i, j).to_bits(),
                    want.get(i, j).to_bits(),
                    "element ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn wordcount_job_counts_words() {
        let inputs: Vec<Vec<u8>> = ["a b a", "b"].iter().map(|s| s.as_bytes().to_vec()).collect();
        let (out, _) = run_job(
            wordcount_map,
            wordcount_reduce,
            &inputs,
            &JobConfig::with_workers(2),
        )
        .unwrap();
        assert_eq!(out, vec![KeyValue::new("a", "2"), KeyValue::new("b", "2")]);
    }

    #[test]
    fn single_reducer_matches_plain_multiply_bit_for_bit() {
        let a = random_matrix(7, 11);
        let b = random_matrix(7, 12);
        let (want, _) = matmul_naive(&a, &b).unwrap();
        let got = mr_matmul(&a, &b, 1, &JobConfig::with_workers(2)).unwrap();
        assert_bits_equal(&got, &want);
    }

    #[test]
    fn block_grids_match_plain_multiply_bit_for_bit() {
        for (n, r) in [(6usize, 4usize), (5, 4), (4, 16), (9, 16)] {
            let a = random_matrix(n, n as u64);
            let b = random_matrix(n, n as u64 + 100);
            let (want, _) = matmul_naive(&a, &b).unwrap();
            let got = mr_matmul(&a, &b, r, &JobConfig::with_workers(3)).unwrap();
            assert_bits_equal(&got, &want);
        }
    }

    #[test]
    fn faults_do_not_change_the_product() {
        let a = int_matrix(8, 5);
        let b = int_matrix(8, 6);
        let (want, _) = matmul_naive(&a, &b).unwrap();
        let cfg = JobConfig {
            num_workers: 3,
            heartbeat_interval: 1,
            max_missed_pings: 1,
            fault_plan: vec![WorkerFault::kill(2, 1)],
            ..JobConfig::default()
        };
        let got = mr_matmul(&a, &b, 4, &cfg).unwrap();
        assert_bits_equal(&got, &want);
    }

    #[test]
    fn reduce_task_counts_must_be_powers_of_four() {
        let a = int_matrix(4, 1);
        for r in [0usize, 2, 3, 8, 32] {
            assert!(matches!(
                mr_matmul(&a, &a, r, &JobConfig::default()),
                Err(Error::InvalidArgument(_))
            ));
        }
        for r in [1usize, 4, 16, 64] {
            assert!(mr_matmul(&a, &a, r, &JobConfig::default()).is_ok());
        }
    }

    #[test]
    fn operand_orders_must_match() {
        let a = int_matrix(4, 1);
        let b = int_matrix(5, 2);
        assert!(matches!(
            mr_matmul(&a, &b, 1, &JobConfig::default()),
            Err(Error::OrderMismatch(4, 5))
        ));
    }

    #[test]
    fn block_split_round_trips_through_map() {
        let m = int_matrix(3, 9);
        let split = encode_block(TAG_A, 0, 1, 2, 2, &m);
        let emitted = block_map(&split).unwrap();
        assert_eq!(emitted.len(), 2);
        assert_eq!(emitted[0].key, block_key(0, 0));
        assert_eq!(emitted[1].key, block_key(0, 1));
        for kv in &emitted {
            assert_eq!(kv.value[0], TAG_A);
            let k = u32::from_be_bytes(kv.value[1..5].try_into().unwrap());
            assert_eq!(k, 1);
        }
    }
}
