//! Config-driven orchestration of the augmentation pipeline.
//!
//! Each stage reads its predecessor's artifacts from the run directory and
//! writes its own next to a `manifest.json`.

pub mod config;
pub mod stages;

use std::fmt;
use std::str::FromStr;

pub use config::{LoadedConfig, RunConfig};
pub use stages::{Pipeline, StageManifest, StageOutcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: pedant_core::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stage { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Finetune,
    Generate,
    Filter,
    Rank,
    Assemble,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Finetune,
        Stage::Generate,
        Stage::Filter,
        Stage::Rank,
        Stage::Assemble,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Finetune => "finetune",
            Stage::Generate => "generate",
            Stage::Filter => "filter",
            Stage::Rank => "rank",
            Stage::Assemble => "assemble",
            Stage::Evaluate => "evaluate",
        }
    }

    /// Artifact directory under the run directory.
    pub fn dir(self) -> &'static str {
        match self {
            Stage::Ingest => "corpus",
            Stage::Finetune => "model",
            Stage::Generate => "candidates",
            Stage::Filter => "filtered",
            Stage::Rank => "scored",
            Stage::Assemble => "dataset",
            Stage::Evaluate => "eval",
        }
    }

    /// Bumped whenever a stage's output format or semantics change.
    pub fn version(self) -> u32 {
        1
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown stage `{s}`")))
    }
}

/// Which stages a command line asks for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSelection {
    pub stages: Vec<Stage>,
    /// False when the user named the stages, so an unconfigured `evaluate`
    /// is an error rather than skipped.
    pub implicit_end: bool,
}

/// `target` is a stage name or `all`; `range` is `a..b`, `a..` or `..b`
/// and only combines with `all`.
pub fn select_stages(target: &str, range: Option<&str>) -> Result<StageSelection, CliError> {
    match (target, range) {
        ("all", None) => Ok(StageSelection {
            stages: Stage::ALL.to_vec(),
            implicit_end: true,
        }),
        ("all", Some(r)) => {
            let (a, b) = r
                .split_once("..")
                .ok_or_else(|| CliError::Config(format!("--stages: expected `a..b`, got `{r}`")))?;
            let first = if a.is_empty() { Stage::Ingest } else { a.parse()? };
            let last = if b.is_empty() { Stage::Evaluate } else { b.parse()? };
            if first > last {
                return Err(CliError::Config(format!("--stages: `{first}` comes after `{last}`")));
            }
            Ok(StageSelection {
                stages: Stage::ALL.into_iter().filter(|s| (first..=last).contains(s)).collect(),
                implicit_end: b.is_empty(),
            })
        }
        (one, None) => Ok(StageSelection {
            stages: vec![one.parse()?],
            implicit_end: false,
        }),
        (one, Some(_)) => Err(CliError::Config(format!("--stages only combines with `all`, not `{one}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_ranges() {
        assert_eq!(select_stages("all", None).unwrap().stages.len(), 7);
        let s = select_stages("all", Some("generate..rank")).unwrap();
        assert_eq!(s.stages, [Stage::Generate, Stage::Filter, Stage::Rank]);
        assert!(!s.implicit_end);
        let s = select_stages("all", Some("assemble..")).unwrap();
        assert_eq!(s.stages, [Stage::Assemble, Stage::Evaluate]);
        assert!(s.implicit_end);
        assert_eq!(select_stages("all", Some("..finetune")).unwrap().stages, [Stage::Ingest, Stage::Finetune]);
        assert_eq!(select_stages("filter", None).unwrap().stages, [Stage::Filter]);
        assert!(select_stages("rank..filter", None).is_err());
        assert!(select_stages("all", Some("rank..filter")).is_err());
        assert!(select_stages("rank", Some("a..b")).is_err());
        assert!(select_stages("train", None).is_err());
    }
}
