//! Append-only JSON-lines cache keyed by the SHA-256 of the canonical config.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CACHE_FILE: &str = "cache.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub quantity: String,
    pub payload: Value,
    pub csv: String,
    pub upper: f64,
    pub lower: f64,
    pub check_failed: bool,
    pub created_unix: u64,
    pub library_version: String,
}

pub fn config_hash(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// The first record with this hash. Unreadable lines are skipped with a warning.
pub fn lookup(path: &Path, hash: &str) -> Option<ResultRecord> {
    let text = fs::read_to_string(path).ok()?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ResultRecord>(line) {
            Ok(r) if r.config_hash == hash => return Some(r),
            Ok(_) => {}
            Err(e) => eprintln!("warning: skipping corrupt cache line {} in {}: {e}", i + 1, path.display()),
        }
    }
    None
}

pub fn append(path: &Path, record: &ResultRecord) -> Result<(), CliError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    let line = serde_json::to_string(record).expect("record serializes");
    writeln!(f, "{line}").map_err(|e| CliError::io(path, e))
}
