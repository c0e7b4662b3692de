//! Run configuration: schema, named profiles, parsing and hashing.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::improve::CurriculumSpec;
use crate::neural::TrainConfig;
use crate::search::PlannerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    PaperDefaults,
    DeskScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub output_dir: String,
    /// Relative to the output directory.
    pub checkpoint_dir: String,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            output_dir: "runs".into(),
            checkpoint_dir: "checkpoints".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub profile: Profile,
    pub game: GameSpec,
    pub search: PlannerConfig,
    pub curriculum: CurriculumSpec,
    pub train: TrainConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::paper_defaults()
    }
}

impl RunConfig {
    /// Full-scale settings: 1-5 robots per team, 1/2/3 m arenas, 80 000
    /// states per iteration, expert and learner budgets 10 000 and 500.
    pub fn paper_defaults() -> Self {
        RunConfig {
            profile: Profile::PaperDefaults,
            game: GameSpec::default(),
            search: PlannerConfig::default(),
            curriculum: CurriculumSpec::default(),
            train: TrainConfig::default(),
            paths: Paths::default(),
        }
    }

    /// Small 1v1 runs in a 1 m arena that finish on a desktop.
    pub fn desk_scale() -> Self {
        RunConfig {
            profile: Profile::DeskScale,
            search: PlannerConfig {
                expert_budget: 1000,
                ..PlannerConfig::default()
            },
            curriculum: CurriculumSpec {
                team_size_range: [1, 1],
                arena_sizes: vec![1.0],
                games_per_iteration: 100,
                iterations: 2,
                dataset_size: 5000,
                samples_per_game: 10,
                opponent_pool: Vec::new(),
            },
            train: TrainConfig {
                learning_rate: 1e-2,
                ..TrainConfig::default()
            },
            ..Self::paper_defaults()
        }
    }

    pub fn for_profile(p: Profile) -> Self {
        match p {
            Profile::PaperDefaults => Self::paper_defaults(),
            Profile::DeskScale => Self::desk_scale(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.game.validate_at("game")?;
        self.search.validate_at("search")?;
        self.curriculum.validate_at("curriculum")?;
        self.train.validate_at("train")?;
        if self.paths.checkpoint_dir.is_empty() {
            return Err(Error::config("paths.checkpoint_dir", "must not be empty"));
        }
        Ok(())
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parse a JSON document over the defaults of its `profile` (default
/// `paper_defaults`). Unknown keys and out-of-range values are rejected
/// with the offending field path.
pub fn parse_config(document: &str) -> Result<RunConfig> {
    let doc: Value = if document.trim().is_empty() {
        Value::Object(Default::default())
    } else {
        serde_json::from_str(document)?
    };
    if !doc.is_object() {
        return Err(Error::config("", "configuration must be a JSON object"));
    }
    let profile: Profile = match doc.get("profile") {
        Some(p) => serde_json::from_value(p.clone())
            .map_err(|e| Error::config("profile", e.to_string()))?,
        None => Profile::PaperDefaults,
    };
    let mut merged = serde_json::to_value(RunConfig::for_profile(profile))?;
    merge(&mut merged, doc);
    let cfg: RunConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Short hex SHA-256 of the canonical JSON form.
pub fn config_hash(cfg: &RunConfig) -> String {
    let text = serde_json::to_string(cfg).unwrap_or_default();
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
