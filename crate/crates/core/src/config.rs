//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analysis::DEFAULT_BUDGET;
use crate::catalog::Vocabulary;
use crate::ducktype::DEFAULT_MAJORITY_THRESHOLD;
use crate::error::{Error, Result};
use crate::io;

/// Settings shared by every stage. Relative paths in a config file are taken
/// relative to the directory holding it.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub catalog_path: PathBuf,
    #[serde(default)]
    pub aliases_path: Option<PathBuf>,
    pub corpus_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub fold_derived: bool,
    #[serde(default = "default_threshold")]
    pub majority_threshold: f64,
    #[serde(default = "default_budget")]
    pub instruction_budget: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub vocabulary: Option<Vocabulary>,
}

fn default_jobs() -> usize {
    1
}

fn default_threshold() -> f64 {
    DEFAULT_MAJORITY_THRESHOLD
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

impl PipelineConfig {
    pub fn new(catalog_path: PathBuf, corpus_dir: PathBuf, output_dir: PathBuf) -> Self {
        PipelineConfig {
            catalog_path,
            aliases_path: None,
            corpus_dir,
            jobs: default_jobs(),
            fold_derived: false,
            majority_threshold: default_threshold(),
            instruction_budget: default_budget(),
            output_dir,
            vocabulary: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_text(path)?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut config.catalog_path);
        rebase(&mut config.corpus_dir);
        rebase(&mut config.output_dir);
        if let Some(a) = config.aliases_path.as_mut() {
            rebase(a);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.jobs < 1 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if !(self.majority_threshold > 0.0 && self.majority_threshold < 1.0) {
            return Err(Error::Config(format!(
                "majority_threshold must lie strictly between 0 and 1, got {}",
                self.majority_threshold
            )));
        }
        if self.instruction_budget == 0 {
            return Err(Error::Config("instruction_budget must be positive".into()));
        }
        Ok(())
    }
}
