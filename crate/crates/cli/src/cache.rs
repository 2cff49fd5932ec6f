//! Append-only JSON-lines store of computed coefficients.
//!
//! Every line carries a SHA-256 check over its fields; a line that fails to
//! parse or to match its check makes the whole cache unusable until it is
//! repaired or removed.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use commgrowth::latticeenum::Method;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const CACHE_SCHEMA: &str = "commgrowth.cache/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub schema_version: String,
    pub group: String,
    pub p: u64,
    pub k: usize,
    pub method: Method,
    pub count: u64,
    /// SHA-256 over the sorted canonical keys counted at this `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_digest: Option<String>,
    pub timestamp: u64,
    pub engine: String,
    pub check: String,
}

type Key = (String, String, u64, usize, Method);

impl CacheRecord {
    pub fn new(group: &str, p: u64, k: usize, method: Method, count: u64, basis_digest: Option<String>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let mut r = CacheRecord {
            schema_version: CACHE_SCHEMA.into(),
            group: group.into(),
            p,
            k,
            method,
            count,
            basis_digest,
            timestamp,
            engine: env!("CARGO_PKG_VERSION").into(),
            check: String::new(),
        };
        r.check = r.compute_check();
        r
    }

    fn compute_check(&self) -> String {
        let body = format!(
            "{}|{}|{}|{}|{}|{}|{}|{}|{}",
            self.schema_version,
            self.group,
            self.p,
            self.k,
            self.method.as_str(),
            self.count,
            self.basis_digest.as_deref().unwrap_or(""),
            self.timestamp,
            self.engine
        );
        hex::encode(Sha256::digest(body.as_bytes()))
    }

    fn key(&self) -> Key {
        (self.schema_version.clone(), self.group.clone(), self.p, self.k, self.method)
    }
}

pub fn digest_keys<'a>(keys: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for k in keys {
        h.update(k.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug)]
pub struct Cache {
    path: PathBuf,
    records: BTreeMap<Key, CacheRecord>,
}

fn corrupt(path: &Path, line: usize, why: impl std::fmt::Display) -> CliError {
    CliError::Corrupt(format!("{}:{line}: {why}", path.display()))
}

fn parse(path: &Path, text: &str) -> Result<BTreeMap<Key, CacheRecord>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: CacheRecord = serde_json::from_str(line).map_err(|e| corrupt(path, i + 1, e))?;
        if r.check != r.compute_check() {
            return Err(corrupt(path, i + 1, "digest mismatch"));
        }
        if let Some(old) = out.get(&r.key()) {
            let old: &CacheRecord = old;
            if old.count != r.count {
                return Err(corrupt(path, i + 1, format!("conflicting counts {} and {}", old.count, r.count)));
            }
            continue;
        }
        out.insert(r.key(), r);
    }
    Ok(out)
}

impl Cache {
    pub fn open(path: &Path) -> Result<Self, CliError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(CliError::Io(format!("{}: {e}", path.display()))),
        };
        Ok(Cache { path: path.to_path_buf(), records: parse(path, &text)? })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, group: &str, p: u64, k: usize, method: Method) -> Option<&CacheRecord> {
        self.records.get(&(CACHE_SCHEMA.to_string(), group.to_string(), p, k, method))
    }

    /// `c[0..=max_k]` if every entry is cached.
    pub fn lookup(&self, group: &str, p: u64, max_k: usize, method: Method) -> Option<Vec<u64>> {
        (0..=max_k).map(|k| self.get(group, p, k, method).map(|r| r.count)).collect()
    }

    /// Appends records whose key is new. Holds an exclusive lock on the file
    /// while re-reading it, so concurrent writers never duplicate or
    /// contradict each other.
    pub fn append(&mut self, new: Vec<CacheRecord>) -> Result<usize, CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", self.path.display()));
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut f: File = OpenOptions::new().read(true).append(true).create(true).open(&self.path).map_err(io)?;
        f.lock().map_err(io)?;
        let mut text = String::new();
        f.seek(SeekFrom::Start(0)).map_err(io)?;
        f.read_to_string(&mut text).map_err(io)?;
        self.records = parse(&self.path, &text)?;
        let mut buf = String::new();
        if !text.is_empty() && !text.ends_with('\n') {
            buf.push('\n');
        }
        let mut written = 0;
        for r in new {
            match self.records.get(&r.key()) {
                Some(old) if old.count != r.count => {
                    return Err(CliError::Failed(format!(
                        "{} p={} k={} {}: computed {} but the cache holds {}",
                        r.group,
                        r.p,
                        r.k,
                        r.method.as_str(),
                        r.count,
                        old.count
                    )));
                }
                Some(_) => {}
                None => {
                    buf.push_str(&serde_json::to_string(&r).expect("record serializes"));
                    buf.push('\n');
                    self.records.insert(r.key(), r);
                    written += 1;
                }
            }
        }
        f.write_all(buf.as_bytes()).map_err(io)?;
        f.sync_data().map_err(io)?;
        f.unlock().map_err(io)?;
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut c = Cache::open(&path).unwrap();
        let recs = (0..3).map(|k| CacheRecord::new("Z1", 2, k, Method::Search, if k == 0 { 1 } else { 2 }, None));
        assert_eq!(c.append(recs.collect()).unwrap(), 3);
        assert_eq!(c.append(vec![CacheRecord::new("Z1", 2, 1, Method::Search, 2, None)]).unwrap(), 0);
        let c = Cache::open(&path).unwrap();
        assert_eq!(c.lookup("Z1", 2, 2, Method::Search), Some(vec![1, 2, 2]));
        assert_eq!(c.lookup("Z1", 2, 3, Method::Search), None);

        let text = std::fs::read_to_string(&path).unwrap().replacen("\"count\":2", "\"count\":3", 1);
        std::fs::write(&path, text).unwrap();
        assert!(matches!(Cache::open(&path), Err(CliError::Corrupt(_))));
    }

    #[test]
    fn conflicting_write_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut c = Cache::open(&path).unwrap();
        c.append(vec![CacheRecord::new("Z2", 3, 1, Method::Oracle, 8, None)]).unwrap();
        assert!(c.append(vec![CacheRecord::new("Z2", 3, 1, Method::Oracle, 9, None)]).is_err());
    }
}
