//! Flat TOML configuration file. Every key mirrors a command-line flag of the
//! same (kebab-case) name; flags given on the command line win.

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub traits: Option<PathBuf>,
    pub split: Option<String>,
    pub unanswerable: Option<f64>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub template: Option<String>,
    pub validation_negatives: Option<String>,
    pub limit: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub title: Option<String>,
    pub provider: Option<String>,
    pub embeddings: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub embed_batch_size: Option<usize>,
    pub max_in_flight: Option<usize>,
    pub embed_attempts: Option<u32>,
    pub dataset: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub strict: Option<bool>,
    pub json: Option<bool>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_keys() {
        let cfg = FileConfig::parse(
            "corpus = \"c.jsonl\"\nunanswerable = 0.2\nseed = 42\nvalidation-negatives = \"one-absent-trait\"\nstrict = true\n",
        )
        .unwrap();
        assert_eq!(cfg.corpus.as_deref(), Some(Path::new("c.jsonl")));
        assert_eq!(cfg.unanswerable, Some(0.2));
        assert_eq!(cfg.seed, Some(42));
        assert_eq!(cfg.strict, Some(true));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(FileConfig::parse("ratio = 0.3\n").is_err());
        assert!(FileConfig::parse("[build]\nseed = 1\n").is_err());
    }
}
