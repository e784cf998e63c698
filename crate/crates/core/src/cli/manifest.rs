use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::BuildConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &std::path::Path, bytes: &[u8]) -> Self {
        FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryCounters {
    pub answerable: usize,
    pub unanswerable: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCounters {
    pub comments_read: usize,
    pub comments_skipped: usize,
    pub matches: usize,
    pub positive_questions: usize,
    pub entries: EntryCounters,
}

/// Reproducibility record written next to every built dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: BuildConfig,
    pub limit: Option<usize>,
    pub title: String,
    pub provider: String,
    /// Digests of the exact input bytes, keyed by role.
    pub inputs: BTreeMap<String, FileDigest>,
    pub output: FileDigest,
    pub counters: ManifestCounters,
    pub wall_time_seconds: f64,
}
