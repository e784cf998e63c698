use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::DEFAULT_THRESHOLD;

pub const DEFAULT_TEMPLATE: &str = "What points towards psychological trait {trait}?";
pub const TRAIT_PLACEHOLDER: &str = "{trait}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    /// One answer per entry; unanswerable questions injected by replacement.
    Train,
    /// All answers of a question in one entry; unanswerable questions added.
    Validation,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            _ => Err(Error::Config(format!(
                "unknown split {s:?} (expected train or validation)"
            ))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
        })
    }
}

/// Which unanswerable questions a validation context receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativePolicy {
    /// One question for every trait not matched in the context.
    #[default]
    AllAbsentTraits,
    /// One question for a single, randomly drawn absent trait.
    OneAbsentTrait,
}

impl FromStr for NegativePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-absent-traits" => Ok(NegativePolicy::AllAbsentTraits),
            "one-absent-trait" => Ok(NegativePolicy::OneAbsentTrait),
            _ => Err(Error::Config(format!(
                "unknown validation negative policy {s:?} (expected all-absent-traits or one-absent-trait)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub threshold: f64,
    /// Fraction of train entries replaced by unanswerable questions.
    pub unanswerable_ratio: f64,
    pub seed: u64,
    pub split: Split,
    pub question_template: String,
    pub validation_negative_policy: NegativePolicy,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            threshold: DEFAULT_THRESHOLD,
            unanswerable_ratio: 0.33,
            seed: 0,
            split: Split::Train,
            question_template: DEFAULT_TEMPLATE.to_string(),
            validation_negative_policy: NegativePolicy::default(),
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() {
            return Err(Error::Config(format!(
                "threshold must be finite, got {}",
                self.threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.unanswerable_ratio) {
            return Err(Error::Config(format!(
                "unanswerable ratio must lie in [0, 1], got {}",
                self.unanswerable_ratio
            )));
        }
        if self.question_template.matches(TRAIT_PLACEHOLDER).count() != 1 {
            return Err(Error::Template(self.question_template.clone()));
        }
        Ok(())
    }
}
