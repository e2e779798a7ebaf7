//! JSONL checkpoints for partitioned searches.
//!
//! Each completed partition appends one line
//! `{"key": .., "partition_id": .., "solutions_found": .., "cursor": .., "payload": ..}`.
//! `key` fingerprints the search (problem and box), so a file can only resume
//! the search that wrote it; records with another key are ignored.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record<P> {
    pub key: String,
    pub partition_id: usize,
    pub solutions_found: u64,
    /// Last value of the partitioned variable covered by this partition.
    pub cursor: String,
    pub payload: P,
}

/// Stable 64-bit FNV-1a fingerprint, rendered as hex.
pub fn fingerprint(parts: &[&str]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in part.bytes().chain(std::iter::once(0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// An append-only checkpoint file for one search.
pub struct Checkpoint<P> {
    path: PathBuf,
    key: String,
    done: HashMap<usize, Record<P>>,
    file: Mutex<File>,
}

impl<P: Serialize + DeserializeOwned + Clone> Checkpoint<P> {
    /// Opens `path`. With `resume`, completed partitions recorded under `key`
    /// are loaded; otherwise the file is truncated.
    pub fn open(path: &Path, key: &str, resume: bool) -> std::io::Result<Self> {
        let mut done = HashMap::new();
        if resume && path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                // a torn final line from an interrupted run is skipped
                if let Ok(rec) = serde_json::from_str::<Record<P>>(&line) {
                    if rec.key == key {
                        done.insert(rec.partition_id, rec);
                    }
                }
            }
        }
        let file = if resume {
            let mut f = OpenOptions::new().create(true).read(true).append(true).open(path)?;
            // terminate a torn final line so the next record starts fresh
            let len = f.metadata()?.len();
            if len > 0 {
                let mut last = [0u8];
                f.seek(SeekFrom::Start(len - 1))?;
                f.read_exact(&mut last)?;
                if last[0] != b'\n' {
                    f.write_all(b"\n")?;
                }
            }
            f
        } else {
            File::create(path)?
        };
        Ok(Checkpoint {
            path: path.to_path_buf(),
            key: key.to_string(),
            done,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn completed(&self, partition_id: usize) -> Option<&Record<P>> {
        self.done.get(&partition_id)
    }

    pub fn completed_count(&self) -> usize {
        self.done.len()
    }

    pub fn record(
        &self,
        partition_id: usize,
        solutions_found: u64,
        cursor: String,
        payload: P,
    ) -> std::io::Result<()> {
        let rec = Record {
            key: self.key.clone(),
            partition_id,
            solutions_found,
            cursor,
            payload,
        };
        let mut line = serde_json::to_string(&rec).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut f = self.file.lock().expect("checkpoint lock poisoned");
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}
