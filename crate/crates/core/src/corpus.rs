//! Comment corpus loading and sentence segmentation.
//!
//! The corpus is UTF-8 JSONL, one object per line with string keys `id` and
//! `text`. Any other keys are kept in [`Comment::meta`]. Text is NFC
//! normalized and line endings are folded to `\n` at load time so that
//! code-point offsets are stable across platforms.
//!
//! All offsets in this crate are code-point (Rust `char`) offsets, never
//! byte offsets.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl Comment {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Comment {
            id: id.into(),
            text: text.into(),
            meta: BTreeMap::new(),
        }
    }

    /// Sentences of this comment, tagged with the comment id.
    pub fn sentences(&self) -> Vec<SentenceSpan> {
        segment_sentences(&self.text)
            .into_iter()
            .map(|mut span| {
                span.comment_id.clone_from(&self.id);
                span
            })
            .collect()
    }
}

/// A sentence addressed by code-point offsets `[start, end)` into its comment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub comment_id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Result of reading a corpus file.
#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub comments: Vec<Comment>,
    /// Records dropped because their text was empty after trimming.
    pub skipped: usize,
}

/// Reads a JSONL corpus from `path`, keeping at most `limit` comments.
pub fn load_corpus(path: impl AsRef<Path>, limit: Option<usize>) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&bytes, &path.display().to_string(), limit)
}

/// Parses JSONL corpus bytes. `source_name` is only used in error messages.
pub fn parse_corpus(bytes: &[u8], source_name: &str, limit: Option<usize>) -> Result<LoadedCorpus> {
    let mut out = LoadedCorpus::default();
    let mut seen = HashSet::new();

    for (idx, raw) in bytes.split(|b| *b == b'\n').enumerate() {
        if limit.is_some_and(|n| out.comments.len() >= n) {
            break;
        }
        let line_no = idx + 1;
        let malformed = |message: String| Error::Malformed {
            source_name: source_name.to_string(),
            line: line_no,
            message,
        };
        let line =
            std::str::from_utf8(raw).map_err(|e| malformed(format!("invalid UTF-8: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let object: serde_json::Map<String, Value> = serde_json::from_str(line)
            .map_err(|e| malformed(format!("invalid JSON object: {e}")))?;

        let mut id = None;
        let mut text = None;
        let mut meta = BTreeMap::new();
        for (key, value) in object {
            match (key.as_str(), value) {
                ("id", Value::String(s)) => id = Some(s),
                ("text", Value::String(s)) => text = Some(s),
                ("id" | "text", other) => {
                    return Err(malformed(format!(
                        "field `{key}` must be a string, got {other}"
                    )));
                }
                (_, Value::String(s)) => {
                    meta.insert(key, s);
                }
                (_, other) => {
                    meta.insert(key, other.to_string());
                }
            }
        }
        let id = id.ok_or_else(|| malformed("missing required field `id`".into()))?;
        let text = text.ok_or_else(|| malformed("missing required field `text`".into()))?;
        if id.is_empty() {
            return Err(malformed("field `id` must be non-empty".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId {
                kind: "comment",
                id,
            });
        }

        let text = clean_text(&text);
        if text.trim().is_empty() {
            log::warn!("{source_name}:{line_no}: skipping comment {id:?} with empty text");
            out.skipped += 1;
            continue;
        }
        out.comments.push(Comment { id, text, meta });
    }
    Ok(out)
}

/// NFC normalization plus CRLF / CR to LF.
pub fn clean_text(text: &str) -> String {
    let unified = text.replace("\r\n", "\n").replace('\r', "\n");
    unified.nfc().collect()
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits `text` into sentences.
///
/// A sentence ends after a maximal run of `.`, `!` or `?` that is followed by
/// whitespace or the end of the text. Whitespace around sentences is not part
/// of any span. The returned spans have an empty `comment_id`; use
/// [`Comment::sentences`] to get tagged spans.
pub fn segment_sentences(text: &str) -> Vec<SentenceSpan> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut i = 0;

    loop {
        while i < n && chars[i].is_whitespace() {
            i += 1;
        }
        if i >= n {
            break;
        }
        let start = i;
        let mut end = None;
        while i < n {
            if is_terminator(chars[i]) {
                let mut j = i;
                while j < n && is_terminator(chars[j]) {
                    j += 1;
                }
                if j == n || chars[j].is_whitespace() {
                    end = Some(j);
                    i = j;
                    break;
                }
                i = j;
            } else {
                i += 1;
            }
        }
        let end = end.unwrap_or_else(|| {
            let mut e = n;
            while e > start && chars[e - 1].is_whitespace() {
                e -= 1;
            }
            e
        });
        spans.push(SentenceSpan {
            comment_id: String::new(),
            start,
            end,
            text: chars[start..end].iter().collect(),
        });
    }
    spans
}

/// Code-point slice `text[start..end)`, or `None` when out of range.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()));
    let begin = indices.nth(start)?;
    let finish = if end == start {
        begin
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[begin..finish])
}
