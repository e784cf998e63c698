//! Turning matched comments into SQuAD v2.0 questions.
//!
//! Positive questions come from matches: one question per matched trait,
//! answered by every sentence matched for that trait. Unanswerable questions
//! ask about a trait that was not matched anywhere in the context.
//!
//! Id scheme: `<comment>-<trait>` for validation questions; train entries
//! add `-a<i>` per answer, and injected train negatives use
//! `<comment>-<trait>-neg` (with a numeric suffix on repeats).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hasher;

use fnv::FnvHasher;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{BuildConfig, NegativePolicy, Split, TRAIT_PLACEHOLDER};
use super::squad::{Answer, QAEntry, SquadDataset};
use crate::corpus::Comment;
use crate::error::{Error, Result};
use crate::matcher::{MatchResult, Trait, TraitSet};

pub fn format_question(t: Trait, template: &str) -> Result<String> {
    if template.matches(TRAIT_PLACEHOLDER).count() != 1 {
        return Err(Error::Template(template.to_string()));
    }
    Ok(template.replace(TRAIT_PLACEHOLDER, t.label()))
}

/// Set of traits matched anywhere in a comment.
pub fn matched_traits(matches: &[MatchResult]) -> TraitSet {
    matches.iter().map(|m| m.r#trait).collect()
}

/// One answerable question per matched trait, in trait order, with answers
/// ordered by position.
pub fn build_positive_entries(
    comment: &Comment,
    matches: &[MatchResult],
    cfg: &BuildConfig,
) -> Result<Vec<QAEntry>> {
    let mut by_trait: BTreeMap<Trait, Vec<&MatchResult>> = BTreeMap::new();
    for m in matches {
        by_trait.entry(m.r#trait).or_default().push(m);
    }
    let mut out = Vec::with_capacity(by_trait.len());
    for (t, mut group) in by_trait {
        group.sort_by_key(|m| m.sentence.start);
        group.dedup_by_key(|m| m.sentence.start);
        let entry = QAEntry {
            id: format!("{}-{}", comment.id, t),
            context: comment.text.clone(),
            question: format_question(t, &cfg.question_template)?,
            answers: group
                .iter()
                .map(|m| Answer {
                    text: m.sentence.text.clone(),
                    answer_start: m.sentence.start,
                })
                .collect(),
            is_impossible: false,
        };
        entry.check_integrity()?;
        out.push(entry);
    }
    Ok(out)
}

/// Generator for negative-trait draws of one comment, independent of the
/// order in which comments are processed.
pub fn negative_rng(seed: u64, comment_id: &str) -> ChaCha8Rng {
    let mut hasher = FnvHasher::default();
    hasher.write(&seed.to_le_bytes());
    hasher.write(comment_id.as_bytes());
    ChaCha8Rng::seed_from_u64(hasher.finish())
}

fn negative_entry(comment: &Comment, t: Trait, id: String, cfg: &BuildConfig) -> Result<QAEntry> {
    Ok(QAEntry {
        id,
        context: comment.text.clone(),
        question: format_question(t, &cfg.question_template)?,
        answers: Vec::new(),
        is_impossible: true,
    })
}

/// An unanswerable question about a trait drawn uniformly from those absent
/// in `matched`, or `None` when every trait is present.
pub fn build_negative_entry<R: Rng + ?Sized>(
    comment: &Comment,
    matched: TraitSet,
    rng: &mut R,
    cfg: &BuildConfig,
) -> Result<Option<QAEntry>> {
    let absent: Vec<Trait> = matched.absent().collect();
    if absent.is_empty() {
        return Ok(None);
    }
    let t = absent[rng.gen_range(0..absent.len())];
    let id = match cfg.split {
        Split::Train => format!("{}-{}-neg", comment.id, t),
        Split::Validation => format!("{}-{}", comment.id, t),
    };
    negative_entry(comment, t, id, cfg).map(Some)
}

/// Splits every multi-answer question into one entry per answer.
pub fn expand_train_entries(entries: Vec<QAEntry>) -> Vec<QAEntry> {
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        if e.answers.is_empty() {
            out.push(e);
            continue;
        }
        for (i, answer) in e.answers.iter().enumerate() {
            out.push(QAEntry {
                id: format!("{}-a{i}", e.id),
                context: e.context.clone(),
                question: e.question.clone(),
                answers: vec![answer.clone()],
                is_impossible: false,
            });
        }
    }
    out
}

/// A train entry together with the comment it came from.
#[derive(Debug, Clone)]
pub struct TrainCandidate<'a> {
    pub comment: &'a Comment,
    pub matched: TraitSet,
    pub entry: QAEntry,
}

/// `round(p * n)` with halves rounded away from zero.
pub fn replacement_count(p: f64, n: usize) -> usize {
    (p * n as f64).round() as usize
}

/// Replaces exactly `replacement_count(p, N)` randomly chosen entries with
/// unanswerable questions over the same context, keeping order.
///
/// Entries whose comment matched all five traits cannot be replaced.
pub fn apply_unanswerable_ratio<'a>(
    mut candidates: Vec<TrainCandidate<'a>>,
    cfg: &BuildConfig,
) -> Result<Vec<TrainCandidate<'a>>> {
    let k = replacement_count(cfg.unanswerable_ratio, candidates.len());
    if k == 0 {
        return Ok(candidates);
    }
    let eligible: Vec<usize> = candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.matched.is_full())
        .map(|(i, _)| i)
        .collect();
    if eligible.len() < k {
        return Err(Error::InsufficientReplaceable {
            requested: k,
            available: eligible.len(),
        });
    }
    let mut selection_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen: Vec<usize> = index::sample(&mut selection_rng, eligible.len(), k)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    chosen.sort_unstable();

    let mut used: HashSet<String> = candidates.iter().map(|c| c.entry.id.clone()).collect();
    let mut rngs: HashMap<&str, ChaCha8Rng> = HashMap::new();
    let train_cfg = BuildConfig {
        split: Split::Train,
        ..cfg.clone()
    };
    for i in chosen {
        let comment = candidates[i].comment;
        let rng = rngs
            .entry(comment.id.as_str())
            .or_insert_with(|| negative_rng(cfg.seed, &comment.id));
        let mut negative = build_negative_entry(comment, candidates[i].matched, rng, &train_cfg)?
            .expect("eligible entries have an absent trait");
        if used.contains(&negative.id) {
            let base = negative.id.clone();
            negative.id = (1..)
                .map(|n| format!("{base}{n}"))
                .find(|id| !used.contains(id))
                .unwrap();
        }
        used.insert(negative.id.clone());
        candidates[i].entry = negative;
    }
    Ok(candidates)
}

/// Per-comment input to [`emit_split`].
#[derive(Debug, Clone)]
pub struct CommentEntries<'a> {
    pub comment: &'a Comment,
    pub matched: TraitSet,
    /// Question-level answerable entries from [`build_positive_entries`].
    pub positives: Vec<QAEntry>,
}

impl<'a> CommentEntries<'a> {
    pub fn new(comment: &'a Comment, matches: &[MatchResult], cfg: &BuildConfig) -> Result<Self> {
        Ok(CommentEntries {
            comment,
            matched: matched_traits(matches),
            positives: build_positive_entries(comment, matches, cfg)?,
        })
    }
}

/// Assembles the split named by `cfg.split`, one paragraph per comment with
/// at least one question, in input order.
///
/// Train: answers are split into single-answer entries, then the unanswerable
/// ratio is applied. Validation: answers stay grouped and unanswerable
/// questions are added per `cfg.validation_negative_policy`.
pub fn emit_split(
    items: &[CommentEntries<'_>],
    cfg: &BuildConfig,
    title: &str,
) -> Result<SquadDataset> {
    cfg.validate()?;
    let groups: Vec<Vec<QAEntry>> = match cfg.split {
        Split::Train => {
            let candidates: Vec<TrainCandidate<'_>> = items
                .iter()
                .flat_map(|item| {
                    expand_train_entries(item.positives.clone())
                        .into_iter()
                        .map(move |entry| TrainCandidate {
                            comment: item.comment,
                            matched: item.matched,
                            entry,
                        })
                })
                .collect();
            let replaced = apply_unanswerable_ratio(candidates, cfg)?;
            let mut groups: Vec<Vec<QAEntry>> = Vec::new();
            let mut last: Option<&str> = None;
            for c in replaced {
                if last != Some(c.comment.id.as_str()) {
                    groups.push(Vec::new());
                    last = Some(c.comment.id.as_str());
                }
                groups.last_mut().unwrap().push(c.entry);
            }
            groups
        }
        Split::Validation => items
            .iter()
            .map(|item| {
                let mut qas = item.positives.clone();
                match cfg.validation_negative_policy {
                    NegativePolicy::AllAbsentTraits => {
                        for t in item.matched.absent() {
                            let id = format!("{}-{}", item.comment.id, t);
                            qas.push(negative_entry(item.comment, t, id, cfg)?);
                        }
                    }
                    NegativePolicy::OneAbsentTrait => {
                        let mut rng = negative_rng(cfg.seed, &item.comment.id);
                        qas.extend(build_negative_entry(
                            item.comment,
                            item.matched,
                            &mut rng,
                            cfg,
                        )?);
                    }
                }
                Ok(qas)
            })
            .collect::<Result<_>>()?,
    };
    let dataset = SquadDataset::from_groups(title, groups);
    dataset.validate()?;
    Ok(dataset)
}
