//! SQuAD v2.0 JSON documents.
//!
//! Serialized layout, keys in this order:
//!
//! ```text
//! {"version": "v2.0", "data": [{"title": ..., "paragraphs": [
//!     {"context": ..., "qas": [{"id", "question", "answers": [{"text", "answer_start"}], "is_impossible"}]}
//! ]}]}
//! ```
//!
//! `answer_start` is a code-point offset into `context`.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::char_slice;
use crate::error::{Error, Result};

pub const SQUAD_VERSION: &str = "v2.0";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub answer_start: usize,
}

/// A question about one context, with its gold answers.
///
/// `is_impossible` holds exactly when `answers` is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QAEntry {
    pub id: String,
    pub context: String,
    pub question: String,
    pub answers: Vec<Answer>,
    pub is_impossible: bool,
}

impl QAEntry {
    /// Checks the answer/impossibility pairing and that every answer is the
    /// code-point slice of the context it claims to be.
    pub fn check_integrity(&self) -> Result<()> {
        if self.is_impossible != self.answers.is_empty() {
            return Err(Error::Schema(format!(
                "question {:?}: is_impossible={} but it has {} answer(s)",
                self.id,
                self.is_impossible,
                self.answers.len()
            )));
        }
        check_answers(&self.id, &self.context, &self.answers)
    }
}

fn check_answers(id: &str, context: &str, answers: &[Answer]) -> Result<()> {
    for a in answers {
        let end = a.answer_start + a.text.chars().count();
        if char_slice(context, a.answer_start, end) != Some(a.text.as_str()) {
            return Err(Error::AnswerIntegrity {
                id: id.to_string(),
                start: a.answer_start,
                text: a.text.clone(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qa {
    pub id: String,
    pub question: String,
    pub answers: Vec<Answer>,
    /// Absent in SQuAD 1.1 style files; derived from `answers` then.
    #[serde(default)]
    pub is_impossible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub context: String,
    pub qas: Vec<Qa>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub title: String,
    pub paragraphs: Vec<Paragraph>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub total: usize,
    pub answerable: usize,
    pub unanswerable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquadDataset {
    pub version: String,
    pub data: Vec<Article>,
}

impl SquadDataset {
    /// One article titled `title`, one paragraph per group. Groups without
    /// questions are dropped.
    pub fn from_groups(title: &str, groups: impl IntoIterator<Item = Vec<QAEntry>>) -> Self {
        let paragraphs = groups
            .into_iter()
            .filter(|g| !g.is_empty())
            .map(|entries| Paragraph {
                context: entries[0].context.clone(),
                qas: entries
                    .into_iter()
                    .map(|e| Qa {
                        id: e.id,
                        question: e.question,
                        answers: e.answers,
                        is_impossible: e.is_impossible,
                    })
                    .collect(),
            })
            .collect();
        SquadDataset {
            version: SQUAD_VERSION.to_string(),
            data: vec![Article {
                title: title.to_string(),
                paragraphs,
            }],
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Malformed {
            source_name: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Compact JSON with a trailing newline.
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn questions(&self) -> impl Iterator<Item = (&str, &Qa)> {
        self.data
            .iter()
            .flat_map(|a| &a.paragraphs)
            .flat_map(|p| p.qas.iter().map(move |q| (p.context.as_str(), q)))
    }

    pub fn entries(&self) -> Vec<QAEntry> {
        self.questions()
            .map(|(context, q)| QAEntry {
                id: q.id.clone(),
                context: context.to_string(),
                question: q.question.clone(),
                answers: q.answers.clone(),
                is_impossible: q.is_impossible,
            })
            .collect()
    }

    /// Answerable means at least one gold answer.
    pub fn counts(&self) -> DatasetCounts {
        let mut counts = DatasetCounts::default();
        for (_, q) in self.questions() {
            counts.total += 1;
            if q.answers.is_empty() {
                counts.unanswerable += 1;
            } else {
                counts.answerable += 1;
            }
        }
        counts
    }

    /// Version literal and unique, non-empty question ids.
    pub fn check_structure(&self) -> Result<()> {
        if self.version != SQUAD_VERSION {
            return Err(Error::Schema(format!(
                "version must be {SQUAD_VERSION:?}, found {:?}",
                self.version
            )));
        }
        let mut seen = HashSet::new();
        for (_, q) in self.questions() {
            if q.id.is_empty() {
                return Err(Error::Schema("empty question id".into()));
            }
            if !seen.insert(q.id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "question",
                    id: q.id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Full check: structure, `is_impossible` agreement and answer offsets.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        for (context, q) in self.questions() {
            if q.is_impossible != q.answers.is_empty() {
                return Err(Error::Schema(format!(
                    "question {:?}: is_impossible={} but it has {} answer(s)",
                    q.id,
                    q.is_impossible,
                    q.answers.len()
                )));
            }
            check_answers(&q.id, context, &q.answers)?;
        }
        Ok(())
    }
}
