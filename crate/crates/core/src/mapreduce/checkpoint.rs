//! Master checkpoint blobs.
//!
//! A blob is `[payload length: u64 LE][payload][crc32(payload): u32 LE]`.
//! The payload starts with the magic `MRC1`, records the job shape
//! (map/reduce task counts), and then the completed tasks with their
//! outputs, each as length-prefixed bytes. Decoding verifies the length
//! framing, the magic, and the checksum before trusting any of it.

use crate::{Error, Result};

use super::KeyValue;

const MAGIC: &[u8; 4] = b"MRC1";

/// Completed work a recovered master starts from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointData {
    pub num_map_tasks: u64,
    pub num_reduce_tasks: u64,
    /// Completed map tasks as `(map task id, output pairs)`.
    pub completed_maps: Vec<(u64, Vec<KeyValue>)>,
    /// Completed reduce tasks as `(reduce index, output pairs)`.
    pub completed_reduces: Vec<(u64, Vec<KeyValue>)>,
}

/// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
pub fn crc32(data: &[u8]) -> u32 {
    const TABLE: [u32; 256] = build_table();
    let mut crc = !0u32;
    for &b in data {
        let idx = ((crc ^ u32::from(b)) & 0xff) as usize;
        crc = (crc >> 8) ^ TABLE[idx];
    }
    !crc
}

const fn build_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u32;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 {
                (crc >> 1) ^ 0xedb8_8320
            } else {
                crc >> 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

pub fn encode_checkpoint(data: &CheckpointData) -> Vec<u8> {
    let mut payload = Vec::new();
    payload.extend_from_slice(MAGIC);
    put_u64(&mut payload, data.num_map_tasks);
    put_u64(&mut payload, data.num_reduce_tasks);
    put_tasks(&mut payload, &data.completed_maps);
    put_tasks(&mut payload, &data.completed_reduces);

    let mut blob = Vec::with_capacity(payload.len() + 12);
    put_u64(&mut blob, payload.len() as u64);
    blob.extend_from_slice(&payload);
    blob.extend_from_slice(&crc32(&payload).to_le_bytes());
    blob
}

pub fn decode_checkpoint(blob: &[u8]) -> Result<CheckpointData> {
    let corrupt = || Error::CheckpointCorrupt;
    if blob.len() < 12 {
        return Err(corrupt());
    }
    let payload_len = u64::from_le_bytes(blob[..8].try_into().expect("8 bytes")) as usize;
    if blob.len() != 8 + payload_len + 4 {
        return Err(corrupt());
    }
    let payload = &blob[8..8 + payload_len];
    let stored = u32::from_le_bytes(blob[8 + payload_len..].try_into().expect("4 bytes"));
    if crc32(payload) != stored {
        return Err(corrupt());
    }

    let mut cur = Cursor {
        bytes: payload,
        pos: 0,
    };
    if cur.take(4)? != MAGIC {
        return Err(corrupt());
    }
    let num_map_tasks = cur.u64()?;
    let num_reduce_tasks = cur.u64()?;
    let completed_maps = get_tasks(&mut cur)?;
    let completed_reduces = get_tasks(&mut cur)?;
    if cur.pos != payload.len() {
        return Err(corrupt());
    }
    Ok(CheckpointData {
        num_map_tasks,
        num_reduce_tasks,
        completed_maps,
        completed_reduces,
    })
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    put_u64(out, bytes.len() as u64);
    out.extend_from_slice(bytes);
}

fn put_tasks(out: &mut Vec<u8>, tasks: &[(u64, Vec<KeyValue>)]) {
    put_u64(out, tasks.len() as u64);
    for (id, pairs) in tasks {
        put_u64(out, *id);
        put_u64(out, pairs.len() as u64);
        for kv in pairs {
            put_bytes(out, &kv.key);
            put_bytes(out, &kv.value);
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::CheckpointCorrupt);
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn bytes_field(&mut self) -> Result<Vec<u8>> {
        let len = self.u64()?;
        if len > self.bytes.len() as u64 {
            return Err(Error::CheckpointCorrupt);
        }
        Ok(self.take(len as usize)?.to_vec())
    }
}

fn get_tasks(cur: &mut Cursor) -> Result<Vec<(u64, Vec<KeyValue>)>> {
    let count = cur.u64()?;
    if count > cur.bytes.len() as u64 {
        return Err(Error::CheckpointCorrupt);
    }
    let mut tasks = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id = cur.u64()?;
        let pairs = cur.u64()?;
        if pairs > cur.bytes.len() as u64 {
            return Err(Error::CheckpointCorrupt);
        }
        let mut kvs = Vec::with_capacity(pairs as usize);
        for _ in 0..pairs {
            let key = cur.bytes_field()?;
            let value = cur.bytes_field()?;
            kvs.push(KeyValue { key, value });
        }
        tasks.push((id, kvs));
    }
    Ok(tasks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CheckpointData {
        CheckpointData {
            num_map_tasks: 4,
            num_reduce_tasks: 2,
            completed_maps: vec![
                (0, vec![KeyValue::new("a", "1"), KeyValue::new("b", "1")]),
                (2, vec![]),
            ],
            completed_reduces: vec![(1, vec![KeyValue::new("z", "9")])],
        }
    }

    #[test]
    fn crc32_known_answer() {
        assert_eq!(crc32(b"123456789"), 0xcbf4_3926);
        assert_eq!(crc32(b""), 0);
    }

    #[test]
    fn blob_round_trips() {
        let data = sample();
        let blob = encode_checkpoint(&data);
        assert_eq!(decode_checkpoint(&blob).unwrap(), data);
    }

    #[test]
    fn every_single_byte_flip_is_detected() {
        let blob = encode_checkpoint(&sample());
        for i in 0..blob.len() {
            let mut bad = blob.clone();
            bad[i] ^= 0x40;
            match decode_checkpoint(&bad) {
                Err(Error::CheckpointCorrupt) => {}
                other => panic!("flip at {i} gave {other:?}"),
            }
        }
    }

    #[test]
    fn truncated_blobs_are_rejected() {
        let blob = encode_checkpoint(&sample());
        for len in [0, 5, 11, blob.len() - 1] {
            assert!(matches!(
                decode_checkpoint(&blob[..len]),
                Err(Error::CheckpointCorrupt)
            ));
        }
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let mut blob = encode_checkpoint(&sample());
        blob.push(0);
        assert!(matches!(
            decode_checkpoint(&blob),
            Err(Error::CheckpointCorrupt)
        ));
    }

    #[test]
    fn corrupt_error_message_is_stable() {
        let err = decode_checkpoint(&[1, 2, 3]).unwrap_err();
        assert_eq!(err.to_string(), "checkpoint corrupt");
    }
}
