use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the five BIG5 personality traits.
///
/// Ordering follows the lowercase label, which is also the order used for
/// every sorted output in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trait {
    Agreeableness,
    Conscientiousness,
    Extroversion,
    Neuroticism,
    Openness,
}

impl Trait {
    /// All traits in label order.
    pub const ALL: [Trait; 5] = [
        Trait::Agreeableness,
        Trait::Conscientiousness,
        Trait::Extroversion,
        Trait::Neuroticism,
        Trait::Openness,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Trait::Agreeableness => "agreeableness",
            Trait::Conscientiousness => "conscientiousness",
            Trait::Extroversion => "extroversion",
            Trait::Neuroticism => "neuroticism",
            Trait::Openness => "openness",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl PartialOrd for Trait {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Trait {
    fn cmp(&self, other: &Self) -> Ordering {
        self.label().cmp(other.label())
    }
}

impl fmt::Display for Trait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Trait {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Trait::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown trait {s:?}")))
    }
}

/// A subset of the five traits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TraitSet(u8);

impl TraitSet {
    pub const fn empty() -> Self {
        TraitSet(0)
    }

    pub fn insert(&mut self, t: Trait) {
        self.0 |= 1 << t.index();
    }

    pub fn contains(self, t: Trait) -> bool {
        self.0 & (1 << t.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_full(self) -> bool {
        self.len() == Trait::ALL.len()
    }

    /// Members in label order.
    pub fn iter(self) -> impl Iterator<Item = Trait> {
        Trait::ALL.into_iter().filter(move |t| self.contains(*t))
    }

    /// Traits not in the set, in label order.
    pub fn absent(self) -> impl Iterator<Item = Trait> {
        Trait::ALL.into_iter().filter(move |t| !self.contains(*t))
    }
}

impl FromIterator<Trait> for TraitSet {
    fn from_iter<I: IntoIterator<Item = Trait>>(iter: I) -> Self {
        let mut set = TraitSet::empty();
        for t in iter {
            set.insert(t);
        }
        set
    }
}
