#![allow(dead_code)]

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use traitqa::corpus::Comment;
use traitqa::matcher::{Trait, TraitReference};

/// Reference sentences, two per trait.
pub const REFERENCES: [(&str, Trait, &str); 10] = [
    (
        "o1",
        Trait::Openness,
        "I love visiting art museums and trying exotic food.",
    ),
    (
        "o2",
        Trait::Openness,
        "Philosophy and abstract poetry fascinate me endlessly.",
    ),
    (
        "c1",
        Trait::Conscientiousness,
        "I always finish my tasks before the deadline.",
    ),
    (
        "c2",
        Trait::Conscientiousness,
        "My desk is organized and every file is labeled.",
    ),
    (
        "e1",
        Trait::Extroversion,
        "Parties with lots of people give me energy!",
    ),
    (
        "e2",
        Trait::Extroversion,
        "I talk to strangers everywhere I go.",
    ),
    (
        "a1",
        Trait::Agreeableness,
        "Helping my neighbours makes me genuinely happy.",
    ),
    (
        "a2",
        Trait::Agreeableness,
        "I trust people and forgive them quickly.",
    ),
    (
        "n1",
        Trait::Neuroticism,
        "I worry constantly that something will go wrong.",
    ),
    (
        "n2",
        Trait::Neuroticism,
        "Small setbacks make me anxious for days.",
    ),
];

/// Sentences that match no reference.
pub const FILLERS: [&str; 12] = [
    "The bus was late again this morning.",
    "Weekend plans 🎉 fell through.",
    "Prices at the café went up in June.",
    "Zürich had snow yesterday.",
    "This thread is about keyboards.",
    "Ok.",
    "Has anyone tried the new update?",
    "Je pense que oui.",
    "My cat sleeps on the radiator.",
    "Fußball season starts soon!",
    "日本の天気は良いです.",
    "Thanks for the link.",
];

pub fn references() -> Vec<TraitReference> {
    REFERENCES
        .iter()
        .map(|(id, t, text)| TraitReference::new(*id, *t, *text))
        .collect()
}

/// Comment `i` mixes `answers` reference sentences with filler sentences.
fn comment_text(rng: &mut ChaCha8Rng, answers: usize) -> String {
    let mut parts: Vec<&str> = (0..answers)
        .map(|_| REFERENCES.choose(rng).unwrap().2)
        .collect();
    let fillers = rng.gen_range(1..=3);
    parts.extend((0..fillers).map(|_| *FILLERS.choose(rng).unwrap()));
    parts.shuffle(rng);
    parts.join(" ")
}

/// `n` comments; the i-th has `answers_for(i)` answer sentences. Ids are
/// `c<index>` and every text is unique.
pub fn corpus(n: usize, seed: u64, answers_for: impl Fn(usize) -> usize) -> Vec<Comment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let text = format!("Post {i}. {}", comment_text(&mut rng, answers_for(i)));
            Comment::new(format!("c{i:05}"), text)
        })
        .collect()
}

pub fn write_corpus(path: &Path, comments: &[Comment]) {
    let lines: String = comments
        .iter()
        .map(|c| format!("{}\n", json!({"id": c.id, "text": c.text})))
        .collect();
    std::fs::write(path, lines).unwrap();
}

pub fn write_references(path: &Path, refs: &[TraitReference]) {
    let lines: String = refs
        .iter()
        .map(|r| format!("{}\n", serde_json::to_string(r).unwrap()))
        .collect();
    std::fs::write(path, lines).unwrap();
}

/// Code-point slice computed independently of the library helpers.
pub fn slice_chars(text: &str, start: usize, len: usize) -> String {
    text.chars().skip(start).take(len).collect()
}
