mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use traitqa::corpus::Comment;
use traitqa::dataset::{BuildConfig, Split};
use traitqa::matcher::{
    cosine_similarity, EmbeddingProvider, EmbeddingVector, HashedNgramProvider,
    PrecomputedProvider, Trait, TraitMatcher, TraitReference,
};
use traitqa::pipeline::{build_dataset, match_corpus};

/// Exhaustive double loop over (sentence, reference) pairs: for each sentence
/// and trait keep the maximum similarity (ties to the smaller ref id) and
/// report it if it clears the threshold.
fn brute_force(
    comment: &Comment,
    refs: &[TraitReference],
    threshold: f64,
    provider: &dyn EmbeddingProvider,
) -> BTreeSet<(usize, String, String)> {
    let mut best: BTreeMap<(usize, Trait), (f64, String)> = BTreeMap::new();
    for s in comment.sentences() {
        let sv = provider.embed(&s.text).unwrap();
        for r in refs {
            let rv = r
                .embedding
                .clone()
                .unwrap_or_else(|| provider.embed(&r.text).unwrap());
            let sim = cosine_similarity(&sv, &rv).unwrap();
            let slot = best
                .entry((s.start, r.r#trait))
                .or_insert((f64::NEG_INFINITY, String::new()));
            if sim > slot.0 || (sim == slot.0 && r.ref_id < slot.1) {
                *slot = (sim, r.ref_id.clone());
            }
        }
    }
    best.into_iter()
        .filter(|(_, (sim, _))| *sim >= threshold)
        .map(|((start, t), (_, id))| (start, t.label().to_string(), id))
        .collect()
}

fn matched(
    comment: &Comment,
    refs: &[TraitReference],
    threshold: f64,
    provider: &dyn EmbeddingProvider,
) -> BTreeSet<(usize, String, String)> {
    TraitMatcher::new(refs, threshold, provider)
        .unwrap()
        .match_comment(comment, provider)
        .unwrap()
        .into_iter()
        .map(|m| (m.sentence.start, m.r#trait.label().to_string(), m.ref_id))
        .collect()
}

#[test]
fn fixture_references_and_fillers_are_separated() {
    let p = HashedNgramProvider;
    for (i, a) in common::REFERENCES.iter().enumerate() {
        for b in &common::REFERENCES[i + 1..] {
            if a.1 != b.1 {
                let s = cosine_similarity(&p.embed(a.2).unwrap(), &p.embed(b.2).unwrap()).unwrap();
                assert!(s < 0.63, "{} vs {}: {s}", a.0, b.0);
            }
        }
        for f in common::FILLERS {
            let s = cosine_similarity(&p.embed(a.2).unwrap(), &p.embed(f).unwrap()).unwrap();
            assert!(s < 0.63, "{} vs {f:?}: {s}", a.0);
        }
    }
}

#[test]
fn sentence_matching_two_traits() {
    // Three sentences, four references; the middle sentence clears the
    // threshold for two traits.
    let refs = vec![
        TraitReference {
            embedding: Some(EmbeddingVector::new(vec![1.0, 0.0, 0.0]).unwrap()),
            ..TraitReference::new("o1", Trait::Openness, "")
        },
        TraitReference {
            embedding: Some(EmbeddingVector::new(vec![0.0, 1.0, 0.0]).unwrap()),
            ..TraitReference::new("e1", Trait::Extroversion, "")
        },
        TraitReference {
            embedding: Some(EmbeddingVector::new(vec![0.0, 0.0, 1.0]).unwrap()),
            ..TraitReference::new("n1", Trait::Neuroticism, "")
        },
        TraitReference {
            embedding: Some(EmbeddingVector::new(vec![0.7, 0.7, 0.0]).unwrap()),
            ..TraitReference::new("o2", Trait::Openness, "")
        },
    ];
    let provider = PrecomputedProvider::from_pairs([
        (
            "A.".to_string(),
            EmbeddingVector::new(vec![0.1, 0.1, 1.0]).unwrap(),
        ),
        (
            "B.".to_string(),
            EmbeddingVector::new(vec![1.0, 1.0, 0.1]).unwrap(),
        ),
        (
            "C.".to_string(),
            EmbeddingVector::new(vec![-1.0, 0.0, 0.0]).unwrap(),
        ),
    ])
    .unwrap();
    let comment = Comment::new("x", "A. B. C.");
    let got = matched(&comment, &refs, 0.63, &provider);
    assert_eq!(got, brute_force(&comment, &refs, 0.63, &provider));
    let traits_of_b: Vec<_> = got
        .iter()
        .filter(|m| m.0 == 3)
        .map(|m| m.1.as_str())
        .collect();
    assert_eq!(traits_of_b, ["extroversion", "openness"]);
    assert!(got
        .iter()
        .any(|m| m == &(3, "openness".to_string(), "o2".to_string())));
}

#[test]
fn results_sorted_by_start_then_trait() {
    let refs = common::references();
    let comments = common::corpus(40, 5, |i| i % 4);
    let matcher = TraitMatcher::new(&refs, 0.63, &HashedNgramProvider).unwrap();
    for c in &comments {
        let found = matcher.match_comment(c, &HashedNgramProvider).unwrap();
        let keys: Vec<_> = found
            .iter()
            .map(|m| (m.sentence.start, m.r#trait))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(found
            .iter()
            .all(|m| m.similarity >= 0.63 && m.sentence.comment_id == c.id));
    }
}

#[test]
fn build_is_independent_of_worker_count() {
    let refs = common::references();
    let comments = common::corpus(300, 11, |i| i % 3);
    for split in [Split::Train, Split::Validation] {
        let cfg = BuildConfig {
            split,
            seed: 42,
            unanswerable_ratio: 0.33,
            ..BuildConfig::default()
        };
        let one = build_dataset(&comments, &refs, &HashedNgramProvider, &cfg, "t", 1).unwrap();
        let many = build_dataset(&comments, &refs, &HashedNgramProvider, &cfg, "t", 8).unwrap();
        assert_eq!(
            one.dataset.to_json_bytes().unwrap(),
            many.dataset.to_json_bytes().unwrap()
        );
        assert_eq!(one.counters, many.counters);
    }
}

#[test]
fn different_seeds_pick_different_negatives() {
    let refs = common::references();
    let comments = common::corpus(200, 2, |_| 2);
    let build = |seed| {
        let cfg = BuildConfig {
            seed,
            ..BuildConfig::default()
        };
        build_dataset(&comments, &refs, &HashedNgramProvider, &cfg, "t", 2)
            .unwrap()
            .dataset
            .to_json_bytes()
            .unwrap()
    };
    assert_ne!(build(1), build(2));
    assert_eq!(build(3), build(3));
}

fn unit_vectors(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(
        proptest::collection::vec(-1.0f64..1.0, dim)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6),
        n,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matcher_agrees_with_exhaustive_search(
        (sentences, refs, traits, tau) in (1usize..=10, 1usize..=10, 2usize..6).prop_flat_map(|(s, r, d)| (
            unit_vectors(s, d),
            unit_vectors(r, d),
            proptest::collection::vec(0usize..5, r),
            -0.5f64..0.95,
        ))
    ) {
        let texts: Vec<String> = (0..sentences.len()).map(|i| format!("S{i}.")).collect();
        let provider = PrecomputedProvider::from_pairs(
            texts.iter().cloned().zip(sentences.into_iter().map(|v| EmbeddingVector::new(v).unwrap())),
        ).unwrap();
        let refs: Vec<TraitReference> = refs
            .into_iter()
            .zip(traits)
            .enumerate()
            .map(|(i, (v, t))| TraitReference {
                embedding: Some(EmbeddingVector::new(v).unwrap()),
                ..TraitReference::new(format!("r{i}"), Trait::ALL[t], "")
            })
            .collect();
        let comment = Comment::new("x", texts.join(" "));
        prop_assert_eq!(
            matched(&comment, &refs, tau, &provider),
            brute_force(&comment, &refs, tau, &provider)
        );
    }

    #[test]
    fn higher_threshold_gives_subset(
        (sentences, refs, traits, lo, delta) in (1usize..=8, 1usize..=8).prop_flat_map(|(s, r)| (
            unit_vectors(s, 3),
            unit_vectors(r, 3),
            proptest::collection::vec(0usize..5, r),
            -0.5f64..0.9,
            0.0f64..0.5,
        ))
    ) {
        let texts: Vec<String> = (0..sentences.len()).map(|i| format!("S{i}.")).collect();
        let provider = PrecomputedProvider::from_pairs(
            texts.iter().cloned().zip(sentences.into_iter().map(|v| EmbeddingVector::new(v).unwrap())),
        ).unwrap();
        let refs: Vec<TraitReference> = refs
            .into_iter()
            .zip(traits)
            .enumerate()
            .map(|(i, (v, t))| TraitReference {
                embedding: Some(EmbeddingVector::new(v).unwrap()),
                ..TraitReference::new(format!("r{i}"), Trait::ALL[t], "")
            })
            .collect();
        let comment = Comment::new("x", texts.join(" "));
        let low = matched(&comment, &refs, lo, &provider);
        let high = matched(&comment, &refs, lo + delta, &provider);
        prop_assert!(high.is_subset(&low));
    }
}

#[test]
fn match_corpus_preserves_order() {
    let refs = common::references();
    let comments = common::corpus(50, 8, |i| i % 2);
    let matcher = TraitMatcher::new(&refs, 0.63, &HashedNgramProvider).unwrap();
    let all = match_corpus(&comments, &matcher, &HashedNgramProvider, 4).unwrap();
    assert_eq!(all.len(), comments.len());
    for (c, m) in comments.iter().zip(&all) {
        assert_eq!(m.len(), c.id[1..].parse::<usize>().unwrap() % 2);
    }
}
