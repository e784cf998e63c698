//! SQuAD 2.0 scoring: answer normalization, exact match, token F1 and the
//! overall / HasAns / NoAns report.
//!
//! Semantics follow the official SQuAD 2.0 evaluator, with one widening: the
//! punctuation removed during normalization is ASCII punctuation plus every
//! character in the Unicode `P*` general categories.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::dataset::SquadDataset;
use crate::error::{Error, Result};

static ARTICLES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(a|an|the)\b").unwrap());

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            get_general_category(c),
            GeneralCategory::ConnectorPunctuation
                | GeneralCategory::DashPunctuation
                | GeneralCategory::OpenPunctuation
                | GeneralCategory::ClosePunctuation
                | GeneralCategory::InitialPunctuation
                | GeneralCategory::FinalPunctuation
                | GeneralCategory::OtherPunctuation
        )
}

/// Lowercase, strip punctuation, drop the articles "a", "an", "the", then
/// collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lower = text.to_lowercase();
    let no_punct: String = lower.chars().filter(|c| !is_punctuation(*c)).collect();
    let no_articles = ARTICLES.replace_all(&no_punct, " ");
    no_articles.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn exact_match_score(prediction: &str, gold: &str) -> u8 {
    u8::from(normalize_answer(prediction) == normalize_answer(gold))
}

/// Token-level F1 over normalized, whitespace-split answers.
pub fn f1_score(prediction: &str, gold: &str) -> f64 {
    let pred = normalize_answer(prediction);
    let gold = normalize_answer(gold);
    let pred_tokens: Vec<&str> = pred.split_whitespace().collect();
    let gold_tokens: Vec<&str> = gold.split_whitespace().collect();
    if pred_tokens.is_empty() || gold_tokens.is_empty() {
        return if pred_tokens.is_empty() && gold_tokens.is_empty() {
            1.0
        } else {
            0.0
        };
    }
    let mut gold_counts: HashMap<&str, usize> = HashMap::new();
    for t in &gold_tokens {
        *gold_counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &pred_tokens {
        if let Some(n) = gold_counts.get_mut(t) {
            if *n > 0 {
                *n -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred_tokens.len() as f64;
    let recall = common as f64 / gold_tokens.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best (EM, F1) of `prediction` against `golds`.
///
/// Golds that normalize to the empty string are ignored; with none left the
/// question counts as unanswerable and only an empty prediction scores.
pub fn score_question<S: AsRef<str>>(
    prediction: &str,
    golds: &[S],
    is_impossible: bool,
) -> (u8, f64) {
    let mut effective: Vec<&str> = if is_impossible {
        Vec::new()
    } else {
        golds
            .iter()
            .map(AsRef::as_ref)
            .filter(|g| !normalize_answer(g).is_empty())
            .collect()
    };
    if effective.is_empty() {
        effective.push("");
    }
    effective.iter().fold((0u8, 0.0f64), |(em, f1), g| {
        (
            em.max(exact_match_score(prediction, g)),
            f1.max(f1_score(prediction, g)),
        )
    })
}

/// Model answers keyed by question id; `""` means "no answer".
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredictionSet(pub BTreeMap<String, String>);

impl PredictionSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Malformed {
            source_name: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// First gold answer of every question (empty for unanswerable ones).
    pub fn from_gold(dataset: &SquadDataset) -> Self {
        PredictionSet(
            dataset
                .questions()
                .map(|(_, q)| {
                    let text = q
                        .answers
                        .first()
                        .map(|a| a.text.clone())
                        .unwrap_or_default();
                    (q.id.clone(), text)
                })
                .collect(),
        )
    }

    /// The empty answer for every question.
    pub fn abstain_all(dataset: &SquadDataset) -> Self {
        PredictionSet(
            dataset
                .questions()
                .map(|(_, q)| (q.id.clone(), String::new()))
                .collect(),
        )
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.0.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Aggregate scores in percent. Partition fields are `None` when the
/// partition is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub exact: f64,
    pub f1: f64,
    pub total: usize,
    #[serde(
        rename = "HasAns_exact",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub has_ans_exact: Option<f64>,
    #[serde(rename = "HasAns_f1", skip_serializing_if = "Option::is_none", default)]
    pub has_ans_f1: Option<f64>,
    #[serde(
        rename = "HasAns_total",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub has_ans_total: Option<usize>,
    #[serde(
        rename = "NoAns_exact",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub no_ans_exact: Option<f64>,
    #[serde(rename = "NoAns_f1", skip_serializing_if = "Option::is_none", default)]
    pub no_ans_f1: Option<f64>,
    #[serde(
        rename = "NoAns_total",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub no_ans_total: Option<usize>,
}

impl EvalReport {
    /// Rows in display order with values rounded to two decimals.
    pub fn display_rows(&self) -> Vec<(&'static str, String)> {
        let pct = |v: f64| format!("{v:.2}");
        let mut rows = vec![
            ("exact", pct(self.exact)),
            ("f1", pct(self.f1)),
            ("total", self.total.to_string()),
        ];
        if let (Some(e), Some(f), Some(n)) =
            (self.has_ans_exact, self.has_ans_f1, self.has_ans_total)
        {
            rows.extend([
                ("HasAns_exact", pct(e)),
                ("HasAns_f1", pct(f)),
                ("HasAns_total", n.to_string()),
            ]);
        }
        if let (Some(e), Some(f), Some(n)) = (self.no_ans_exact, self.no_ans_f1, self.no_ans_total)
        {
            rows.extend([
                ("NoAns_exact", pct(e)),
                ("NoAns_f1", pct(f)),
                ("NoAns_total", n.to_string()),
            ]);
        }
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coverage {
    /// Every question must have a prediction and every prediction a question.
    Strict,
    /// Missing predictions score as `""`; unknown ids are ignored.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    /// Questions without a prediction (lenient mode only).
    pub missing: usize,
    /// Predictions for ids not in the dataset (lenient mode only).
    pub extra: usize,
}

pub fn evaluate(
    dataset: &SquadDataset,
    predictions: &PredictionSet,
    coverage: Coverage,
) -> Result<EvalReport> {
    evaluate_detailed(dataset, predictions, coverage).map(|e| e.report)
}

pub fn evaluate_detailed(
    dataset: &SquadDataset,
    predictions: &PredictionSet,
    coverage: Coverage,
) -> Result<Evaluation> {
    dataset.check_structure()?;
    let questions: Vec<_> = dataset.questions().map(|(_, q)| q).collect();
    if questions.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let missing: Vec<&str> = questions
        .iter()
        .filter(|q| predictions.get(&q.id).is_none())
        .map(|q| q.id.as_str())
        .collect();
    let known: std::collections::HashSet<&str> = questions.iter().map(|q| q.id.as_str()).collect();
    let extra: Vec<&str> = predictions
        .0
        .keys()
        .map(String::as_str)
        .filter(|id| !known.contains(id))
        .collect();
    if coverage == Coverage::Strict {
        if let Some(id) = missing.first() {
            return Err(Error::MissingPrediction(id.to_string()));
        }
        if let Some(id) = extra.first() {
            return Err(Error::ExtraPrediction(id.to_string()));
        }
    }
    if !missing.is_empty() {
        log::warn!(
            "{} question(s) have no prediction; scored as no-answer",
            missing.len()
        );
    }
    if !extra.is_empty() {
        log::warn!(
            "ignoring {} prediction(s) for unknown question ids",
            extra.len()
        );
    }

    let scores: Vec<(bool, u8, f64)> = questions
        .par_iter()
        .map(|q| {
            let prediction = predictions.get(&q.id).unwrap_or("");
            let golds: Vec<&str> = q.answers.iter().map(|a| a.text.as_str()).collect();
            let has_answer = !q.answers.is_empty();
            let (em, f1) = score_question(prediction, &golds, !has_answer);
            (has_answer, em, f1)
        })
        .collect();

    // Sequential sums in dataset order keep the result independent of the
    // thread schedule.
    #[derive(Default)]
    struct Acc {
        n: usize,
        em: u64,
        f1: f64,
    }
    let (mut all, mut has, mut no) = (Acc::default(), Acc::default(), Acc::default());
    for (has_answer, em, f1) in scores {
        for acc in [&mut all, if has_answer { &mut has } else { &mut no }] {
            acc.n += 1;
            acc.em += u64::from(em);
            acc.f1 += f1;
        }
    }
    let pct = |acc: &Acc| {
        (
            100.0 * acc.em as f64 / acc.n as f64,
            100.0 * acc.f1 / acc.n as f64,
        )
    };
    let part = |acc: &Acc| {
        if acc.n == 0 {
            (None, None, None)
        } else {
            let (e, f) = pct(acc);
            (Some(e), Some(f), Some(acc.n))
        }
    };
    let (exact, f1) = pct(&all);
    let (has_ans_exact, has_ans_f1, has_ans_total) = part(&has);
    let (no_ans_exact, no_ans_f1, no_ans_total) = part(&no);
    Ok(Evaluation {
        report: EvalReport {
            exact,
            f1,
            total: all.n,
            has_ans_exact,
            has_ans_f1,
            has_ans_total,
            no_ans_exact,
            no_ans_f1,
            no_ans_total,
        },
        missing: missing.len(),
        extra: extra.len(),
    })
}
