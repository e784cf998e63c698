//! Sentence vectors, cosine similarity and the local embedding providers.

use std::collections::HashMap;
use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Multiplies every entry by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        EmbeddingVector::new(self.0.iter().map(|v| v * k).collect())
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        EmbeddingVector::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

/// Cosine of the angle between `a` and `b`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            expected: a.dimension(),
            found: b.dimension(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Source of sentence vectors.
///
/// Implementations must return one vector per input text, in input order.
pub trait EmbeddingProvider: Send + Sync {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let mut out = self.embed_batch(&[text])?;
        out.pop()
            .ok_or_else(|| Error::Protocol("provider returned no vector".into()))
    }

    /// Short human-readable description, recorded in run manifests.
    fn describe(&self) -> String;
}

pub(crate) fn ensure_non_empty(text: &str) -> Result<()> {
    if text.trim().is_empty() {
        Err(Error::EmptyText)
    } else {
        Ok(())
    }
}

/// Deterministic fallback: hashed character trigrams, L2-normalized counts.
///
/// The text is trimmed, lowercased and wrapped in boundary markers before
/// trigrams are taken, so every non-empty text yields at least one trigram.
/// Trigrams are hashed with 64-bit FNV-1a into [`HashedNgramProvider::DIMENSION`]
/// buckets.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashedNgramProvider;

impl HashedNgramProvider {
    pub const DIMENSION: usize = 256;
    const NGRAM: usize = 3;

    fn vectorize(text: &str) -> Result<EmbeddingVector> {
        ensure_non_empty(text)?;
        let chars: Vec<char> = std::iter::once('\u{2}')
            .chain(text.trim().chars().flat_map(char::to_lowercase))
            .chain(std::iter::once('\u{3}'))
            .collect();
        let mut counts = vec![0.0f64; Self::DIMENSION];
        let mut buf = [0u8; 4];
        for gram in chars.windows(Self::NGRAM) {
            let mut hasher = FnvHasher::default();
            for c in gram {
                hasher.write(c.encode_utf8(&mut buf).as_bytes());
            }
            counts[(hasher.finish() % Self::DIMENSION as u64) as usize] += 1.0;
        }
        let norm = counts.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut counts {
            *v /= norm;
        }
        EmbeddingVector::new(counts)
    }
}

impl EmbeddingProvider for HashedNgramProvider {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        texts.iter().map(|t| Self::vectorize(t)).collect()
    }

    fn describe(&self) -> String {
        format!("hashed-trigram-{}", Self::DIMENSION)
    }
}

#[derive(Deserialize)]
struct TableRow {
    text: String,
    embedding: EmbeddingVector,
}

/// Exact-text lookup into a precomputed table.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedProvider {
    table: HashMap<String, EmbeddingVector>,
    dimension: Option<usize>,
}

impl PrecomputedProvider {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, EmbeddingVector)>) -> Result<Self> {
        let mut provider = PrecomputedProvider::default();
        for (text, vector) in pairs {
            provider.insert(text, vector)?;
        }
        Ok(provider)
    }

    /// Reads a JSONL table of `{"text": ..., "embedding": [...]}` rows.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&data, &path.display().to_string())
    }

    pub fn parse(data: &str, source_name: &str) -> Result<Self> {
        let mut provider = PrecomputedProvider::default();
        for (idx, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| Error::Malformed {
                source_name: source_name.to_string(),
                line: idx + 1,
                message,
            };
            let row: TableRow = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
            provider
                .insert(row.text, row.embedding)
                .map_err(|e| malformed(e.to_string()))?;
        }
        Ok(provider)
    }

    fn insert(&mut self, text: String, vector: EmbeddingVector) -> Result<()> {
        match self.dimension {
            Some(d) if d != vector.dimension() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: vector.dimension(),
                })
            }
            _ => self.dimension = Some(vector.dimension()),
        }
        if self.table.contains_key(&text) {
            return Err(Error::DuplicateId {
                kind: "embedding table text",
                id: text,
            });
        }
        self.table.insert(text, vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl EmbeddingProvider for PrecomputedProvider {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        texts
            .iter()
            .map(|t| {
                ensure_non_empty(t)?;
                self.table
                    .get(*t)
                    .cloned()
                    .ok_or_else(|| Error::LookupMiss((*t).to_string()))
            })
            .collect()
    }

    fn describe(&self) -> String {
        format!("precomputed-table({} rows)", self.table.len())
    }
}
