//! Corpus-level matching and dataset building on a bounded worker pool.
//!
//! Comments are matched in parallel, results are collected back in corpus
//! order and everything downstream is sequential, so the output does not
//! depend on the number of workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Comment;
use crate::dataset::{emit_split, BuildConfig, CommentEntries, SquadDataset};
use crate::error::{Error, Result};
use crate::matcher::{EmbeddingProvider, MatchResult, TraitMatcher, TraitReference};

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Matches of every comment, in corpus order.
pub fn match_corpus(
    comments: &[Comment],
    matcher: &TraitMatcher,
    provider: &dyn EmbeddingProvider,
    workers: usize,
) -> Result<Vec<Vec<MatchResult>>> {
    let results: Vec<Result<Vec<MatchResult>>> = pool(workers)?.install(|| {
        comments
            .par_iter()
            .map(|c| matcher.match_comment(c, provider))
            .collect()
    });
    // First failure in corpus order, whatever the completion order was.
    results.into_iter().collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildCounters {
    pub comments: usize,
    pub matches: usize,
    /// Comments with at least one match.
    pub matched_comments: usize,
    /// Question-level answerable entries before any train expansion.
    pub positive_questions: usize,
    pub answerable_entries: usize,
    pub unanswerable_entries: usize,
    pub total_entries: usize,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub dataset: SquadDataset,
    pub counters: BuildCounters,
}

pub fn build_dataset(
    comments: &[Comment],
    refs: &[TraitReference],
    provider: &dyn EmbeddingProvider,
    cfg: &BuildConfig,
    title: &str,
    workers: usize,
) -> Result<BuildOutput> {
    cfg.validate()?;
    let matcher = TraitMatcher::new(refs, cfg.threshold, provider)?;
    let matches = match_corpus(comments, &matcher, provider, workers)?;
    let items = comments
        .iter()
        .zip(&matches)
        .map(|(c, m)| CommentEntries::new(c, m, cfg))
        .collect::<Result<Vec<_>>>()?;
    let dataset = emit_split(&items, cfg, title)?;
    let counts = dataset.counts();
    let counters = BuildCounters {
        comments: comments.len(),
        matches: matches.iter().map(Vec::len).sum(),
        matched_comments: matches.iter().filter(|m| !m.is_empty()).count(),
        positive_questions: items.iter().map(|i| i.positives.len()).sum(),
        answerable_entries: counts.answerable,
        unanswerable_entries: counts.unanswerable,
        total_entries: counts.total,
    };
    Ok(BuildOutput { dataset, counters })
}
