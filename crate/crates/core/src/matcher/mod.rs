//! Trait-indicative sentence mining.
//!
//! Every sentence of a comment is compared with every trait reference
//! sentence by cosine similarity. For each (sentence, trait) pair only the
//! best-scoring reference of that trait is kept, and it becomes a match when
//! its similarity is at least the threshold.

mod embedding;
mod http;
mod label;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Comment, SentenceSpan};
use crate::error::{Error, Result};

pub use embedding::{
    cosine_similarity, EmbeddingProvider, EmbeddingVector, HashedNgramProvider, PrecomputedProvider,
};
pub use http::{HttpProvider, HttpProviderConfig, TOKEN_ENV};
pub use label::{Trait, TraitSet};

/// Default similarity threshold for accepting a sentence as an answer.
pub const DEFAULT_THRESHOLD: f64 = 0.63;

/// A labeled reference sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitReference {
    pub ref_id: String,
    pub r#trait: Trait,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingVector>,
}

impl TraitReference {
    pub fn new(ref_id: impl Into<String>, r#trait: Trait, text: impl Into<String>) -> Self {
        TraitReference {
            ref_id: ref_id.into(),
            r#trait,
            text: text.into(),
            embedding: None,
        }
    }
}

pub fn load_references(path: impl AsRef<Path>) -> Result<Vec<TraitReference>> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_references(&data, &path.display().to_string())
}

/// Parses a JSONL reference file with keys `ref_id`, `trait`, `text` and
/// optional `embedding`.
pub fn parse_references(data: &[u8], source_name: &str) -> Result<Vec<TraitReference>> {
    let mut refs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in data.split(|b| *b == b'\n').enumerate() {
        let malformed = |message: String| Error::Malformed {
            source_name: source_name.to_string(),
            line: idx + 1,
            message,
        };
        let line =
            std::str::from_utf8(raw).map_err(|e| malformed(format!("invalid UTF-8: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let reference: TraitReference =
            serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        if reference.ref_id.is_empty() {
            return Err(malformed("field `ref_id` must be non-empty".into()));
        }
        if !seen.insert(reference.ref_id.clone()) {
            return Err(Error::DuplicateId {
                kind: "reference",
                id: reference.ref_id,
            });
        }
        refs.push(reference);
    }
    Ok(refs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub sentence: SentenceSpan,
    pub r#trait: Trait,
    pub ref_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone)]
struct ResolvedReference {
    ref_id: String,
    r#trait: Trait,
    embedding: EmbeddingVector,
}

/// A reference set with resolved embeddings and a fixed threshold.
#[derive(Debug, Clone)]
pub struct TraitMatcher {
    refs: Vec<ResolvedReference>,
    threshold: f64,
}

impl TraitMatcher {
    /// Resolves reference embeddings, using the stored vector when present and
    /// `provider` otherwise.
    pub fn new(
        refs: &[TraitReference],
        threshold: f64,
        provider: &dyn EmbeddingProvider,
    ) -> Result<Self> {
        if refs.is_empty() {
            return Err(Error::EmptyReferences);
        }
        if !threshold.is_finite() {
            return Err(Error::Config(format!(
                "threshold must be finite, got {threshold}"
            )));
        }
        let mut seen = HashSet::new();
        for r in refs {
            if !seen.insert(r.ref_id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "reference",
                    id: r.ref_id.clone(),
                });
            }
        }

        let missing: Vec<&str> = refs
            .iter()
            .filter(|r| r.embedding.is_none())
            .map(|r| r.text.as_str())
            .collect();
        let mut computed = provider.embed_batch(&missing)?.into_iter();

        let mut resolved = Vec::with_capacity(refs.len());
        for r in refs {
            let embedding = match &r.embedding {
                Some(e) => e.clone(),
                None => computed
                    .next()
                    .ok_or_else(|| Error::Protocol("provider returned too few vectors".into()))?,
            };
            if embedding.norm() == 0.0 {
                return Err(Error::ZeroNorm);
            }
            if let Some(expected) = resolved
                .first()
                .map(|f: &ResolvedReference| f.embedding.dimension())
            {
                if expected != embedding.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected,
                        found: embedding.dimension(),
                    });
                }
            }
            resolved.push(ResolvedReference {
                ref_id: r.ref_id.clone(),
                r#trait: r.r#trait,
                embedding,
            });
        }
        Ok(TraitMatcher {
            refs: resolved,
            threshold,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn match_comment(
        &self,
        comment: &Comment,
        provider: &dyn EmbeddingProvider,
    ) -> Result<Vec<MatchResult>> {
        let spans = comment.sentences();
        let texts: Vec<&str> = spans.iter().map(|s| s.text.as_str()).collect();
        let embeddings = provider.embed_batch(&texts)?;
        self.match_spans(spans, &embeddings)
    }

    /// Matches pre-embedded sentences; `embeddings[i]` belongs to `spans[i]`.
    pub fn match_spans(
        &self,
        spans: Vec<SentenceSpan>,
        embeddings: &[EmbeddingVector],
    ) -> Result<Vec<MatchResult>> {
        if spans.len() != embeddings.len() {
            return Err(Error::Protocol(format!(
                "{} sentences but {} embeddings",
                spans.len(),
                embeddings.len()
            )));
        }
        let mut out = Vec::new();
        for (span, vector) in spans.into_iter().zip(embeddings) {
            // Best reference per trait: highest similarity, then smallest ref_id.
            let mut best: [Option<(f64, &str)>; 5] = [None; 5];
            for r in &self.refs {
                let sim = cosine_similarity(vector, &r.embedding)?;
                let slot = &mut best[r.r#trait.index()];
                let better = match slot {
                    None => true,
                    Some((s, id)) => sim > *s || (sim == *s && r.ref_id.as_str() < *id),
                };
                if better {
                    *slot = Some((sim, r.ref_id.as_str()));
                }
            }
            for (t, candidate) in Trait::ALL.into_iter().zip(best) {
                if let Some((similarity, ref_id)) = candidate {
                    if similarity >= self.threshold {
                        out.push(MatchResult {
                            sentence: span.clone(),
                            r#trait: t,
                            ref_id: ref_id.to_string(),
                            similarity,
                        });
                    }
                }
            }
        }
        out.sort_by(|a, b| (a.sentence.start, a.r#trait).cmp(&(b.sentence.start, b.r#trait)));
        Ok(out)
    }
}

/// One-shot matching of a single comment against `refs`.
pub fn match_sentences(
    comment: &Comment,
    refs: &[TraitReference],
    threshold: f64,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<MatchResult>> {
    TraitMatcher::new(refs, threshold, provider)?.match_comment(comment, provider)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_ref(id: &str, t: Trait, text: &str, values: &[f64]) -> TraitReference {
        TraitReference {
            embedding: Some(EmbeddingVector::new(values.to_vec()).unwrap()),
            ..TraitReference::new(id, t, text)
        }
    }

    /// Table provider keyed by sentence text.
    fn table(rows: &[(&str, &[f64])]) -> PrecomputedProvider {
        PrecomputedProvider::from_pairs(
            rows.iter()
                .map(|(t, v)| (t.to_string(), EmbeddingVector::new(v.to_vec()).unwrap())),
        )
        .unwrap()
    }

    /// Unit vector at angle whose cosine with (1, 0) is `c`.
    fn at_cos(c: f64) -> Vec<f64> {
        vec![c, (1.0 - c * c).sqrt()]
    }

    #[test]
    fn above_and_below_threshold() {
        let refs = [vec_ref("o1", Trait::Openness, "ref", &[1.0, 0.0])];
        let hi = at_cos(0.64);
        let lo = at_cos(0.62);
        let provider = table(&[("Above.", &hi), ("Below.", &lo)]);
        let found =
            match_sentences(&Comment::new("c", "Above. Below."), &refs, 0.63, &provider).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].r#trait, Trait::Openness);
        assert_eq!(found[0].sentence.text, "Above.");
        assert!((found[0].similarity - 0.64).abs() < 1e-12);

        let none = match_sentences(&Comment::new("c", "Below."), &refs, 0.63, &provider).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn boundary_is_inclusive() {
        let refs = [vec_ref("o1", Trait::Openness, "ref", &[1.0, 0.0])];
        let at = at_cos(0.63);
        let provider = table(&[("Edge.", &at)]);
        let sim = cosine_similarity(
            &EmbeddingVector::new(at.clone()).unwrap(),
            &EmbeddingVector::new(vec![1.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(sim, 0.63);
        let found = match_sentences(&Comment::new("c", "Edge."), &refs, 0.63, &provider).unwrap();
        assert_eq!(found.len(), 1);
    }

    #[test]
    fn best_reference_per_trait_and_ties() {
        let refs = [
            vec_ref("o-b", Trait::Openness, "", &[1.0, 0.0]),
            vec_ref("o-a", Trait::Openness, "", &[1.0, 0.0]),
            vec_ref("o-c", Trait::Openness, "", &[0.9, 0.1]),
            vec_ref("e1", Trait::Extroversion, "", &[1.0, 0.01]),
        ];
        let provider = table(&[("Same.", &[1.0, 0.0])]);
        let found = match_sentences(&Comment::new("c", "Same."), &refs, 0.63, &provider).unwrap();
        let got: Vec<_> = found
            .iter()
            .map(|m| (m.r#trait, m.ref_id.as_str()))
            .collect();
        assert_eq!(got, [(Trait::Extroversion, "e1"), (Trait::Openness, "o-a")]);
    }

    #[test]
    fn references_embedded_by_provider_when_missing() {
        let refs = [TraitReference::new(
            "r1",
            Trait::Neuroticism,
            "I worry about everything.",
        )];
        let comment = Comment::new("c", "Nice weather. I worry about everything.");
        let found = match_sentences(&comment, &refs, 0.63, &HashedNgramProvider).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].sentence.start, 14);
        assert!((found[0].similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let p = HashedNgramProvider;
        assert!(matches!(
            match_sentences(&Comment::new("c", "x"), &[], 0.63, &p),
            Err(Error::EmptyReferences)
        ));
        let refs = [
            vec_ref("a", Trait::Openness, "", &[1.0, 0.0]),
            vec_ref("b", Trait::Openness, "", &[1.0, 0.0, 0.0]),
        ];
        assert!(matches!(
            TraitMatcher::new(&refs, 0.63, &p),
            Err(Error::DimensionMismatch { .. })
        ));
        let refs = [vec_ref("a", Trait::Openness, "", &[1.0, 0.0])];
        let err =
            match_sentences(&Comment::new("c", "Unknown."), &refs, 0.63, &table(&[])).unwrap_err();
        assert!(matches!(err, Error::LookupMiss(_)));
    }

    #[test]
    fn parse_reference_file() {
        let data = b"{\"ref_id\":\"r1\",\"trait\":\"openness\",\"text\":\"I like art.\"}\n\
                     {\"ref_id\":\"r2\",\"trait\":\"neuroticism\",\"text\":\"x\",\"embedding\":[0.5,0.5]}\n";
        let refs = parse_references(data, "mem").unwrap();
        assert_eq!(refs.len(), 2);
        assert_eq!(refs[1].r#trait, Trait::Neuroticism);
        assert!(refs[1].embedding.is_some());

        let bad = b"{\"ref_id\":\"r1\",\"trait\":\"curiosity\",\"text\":\"x\"}\n";
        assert!(matches!(
            parse_references(bad, "mem"),
            Err(Error::Malformed { line: 1, .. })
        ));
        let dup = b"{\"ref_id\":\"r1\",\"trait\":\"openness\",\"text\":\"x\"}\n{\"ref_id\":\"r1\",\"trait\":\"openness\",\"text\":\"y\"}\n";
        assert!(matches!(
            parse_references(dup, "mem"),
            Err(Error::DuplicateId { .. })
        ));
    }
}
