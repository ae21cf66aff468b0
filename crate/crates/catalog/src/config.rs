//! Runtime settings and the on-disk policy, vocabulary and profile files.
//!
//! Precedence for every setting: command-line flag, then `oc.toml`, then
//! environment (`OC_DATA_DIR`, `OC_OFFLINE`), then the built-in default.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use oc_core::pipeline::{MappingProfile, PublishPolicy};
use oc_core::{ControlledVocabulary, VocabularySet};
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_DATA_DIR: &str = "data";
pub const DEFAULT_POLICY: &str = "policy/publish.json";
pub const DEFAULT_PROFILES: &str = "profiles";
pub const DEFAULT_VOCAB: &str = "vocab";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_CONFIG_FILE: &str = "oc.toml";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    fn io(path: &Path, source: io::Error) -> Self {
        ConfigError::Io { path: path.display().to_string(), source }
    }

    fn invalid(path: &Path, message: impl ToString) -> Self {
        ConfigError::Invalid { path: path.display().to_string(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "table" => Some(OutputFormat::Table),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Framing {
    #[default]
    Ndjson,
    ContentLength,
}

impl Framing {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ndjson" => Some(Framing::Ndjson),
            "content-length" => Some(Framing::ContentLength),
            _ => None,
        }
    }
}

/// Contents of `oc.toml`. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub offline: Option<bool>,
    pub format: Option<String>,
    pub addr: Option<String>,
    pub cors_origin: Option<String>,
    pub mcp_framing: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
        toml::from_str(&text).map_err(|e| ConfigError::invalid(path, e))
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub offline: bool,
    pub format: Option<OutputFormat>,
    pub addr: Option<String>,
    pub cors_origin: Option<String>,
    pub mcp_framing: Option<Framing>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings {
    pub data_dir: PathBuf,
    /// `None` means the built-in policy when the default file is absent.
    pub policy: Option<PathBuf>,
    pub profiles_dir: PathBuf,
    pub vocab_dir: Option<PathBuf>,
    pub offline: bool,
    pub format: OutputFormat,
    pub addr: String,
    pub cors_origin: Option<String>,
    pub mcp_framing: Framing,
}

impl Settings {
    pub fn resolve(
        flags: &Overrides,
        file: &FileConfig,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Settings, ConfigError> {
        let env_dir = env("OC_DATA_DIR").filter(|s| !s.is_empty()).map(PathBuf::from);
        let env_offline = env("OC_OFFLINE").map(|v| matches!(v.trim(), "1" | "true" | "yes"));
        let bad = |m: String| ConfigError::Invalid { path: DEFAULT_CONFIG_FILE.into(), message: m };
        let file_format = match &file.format {
            Some(f) => Some(OutputFormat::parse(f).ok_or_else(|| bad(format!("unknown format `{f}`")))?),
            None => None,
        };
        let file_framing = match &file.mcp_framing {
            Some(f) => Some(Framing::parse(f).ok_or_else(|| bad(format!("unknown mcp framing `{f}`")))?),
            None => None,
        };
        let default_policy = Path::new(DEFAULT_POLICY);
        let default_vocab = Path::new(DEFAULT_VOCAB);
        Ok(Settings {
            data_dir: flags
                .data_dir
                .clone()
                .or_else(|| file.data_dir.clone())
                .or(env_dir)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR)),
            policy: flags
                .policy
                .clone()
                .or_else(|| file.policy.clone())
                .or_else(|| default_policy.exists().then(|| default_policy.to_path_buf())),
            profiles_dir: flags
                .profiles
                .clone()
                .or_else(|| file.profiles.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_PROFILES)),
            vocab_dir: flags
                .vocab
                .clone()
                .or_else(|| file.vocab.clone())
                .or_else(|| default_vocab.is_dir().then(|| default_vocab.to_path_buf())),
            offline: flags.offline || file.offline.or(env_offline).unwrap_or(false),
            format: flags.format.or(file_format).unwrap_or_default(),
            addr: flags.addr.clone().or_else(|| file.addr.clone()).unwrap_or_else(|| DEFAULT_ADDR.into()),
            cors_origin: flags.cors_origin.clone().or_else(|| file.cors_origin.clone()),
            mcp_framing: flags.mcp_framing.or(file_framing).unwrap_or_default(),
        })
    }

    pub fn policy(&self) -> Result<PublishPolicy, ConfigError> {
        match &self.policy {
            Some(p) => load_policy(p),
            None => Ok(PublishPolicy::default()),
        }
    }

    pub fn vocabularies(&self) -> Result<VocabularySet, ConfigError> {
        match &self.vocab_dir {
            Some(d) => load_vocabularies(d),
            None => Ok(VocabularySet::default()),
        }
    }

    /// Resolves `name_or_path` as a file path, else as
    /// `<profiles_dir>/<name>.json`.
    pub fn profile(&self, name_or_path: &str) -> Result<MappingProfile, ConfigError> {
        let direct = Path::new(name_or_path);
        let path = if direct.is_file() {
            direct.to_path_buf()
        } else {
            self.profiles_dir.join(format!("{name_or_path}.json"))
        };
        load_profile(&path)
    }
}

pub fn load_policy(path: &Path) -> Result<PublishPolicy, ConfigError> {
    let bytes = fs::read(path).map_err(|e| ConfigError::io(path, e))?;
    let policy: PublishPolicy = serde_json::from_slice(&bytes).map_err(|e| ConfigError::invalid(path, e))?;
    let t = &policy.thresholds;
    if !(0.0..=1.0).contains(&t.title_similarity) || !(0.0..=1.0).contains(&t.contributor_jaccard) {
        return Err(ConfigError::invalid(path, "thresholds must lie in [0, 1]"));
    }
    Ok(policy)
}

pub fn load_profile(path: &Path) -> Result<MappingProfile, ConfigError> {
    let bytes = fs::read(path).map_err(|e| ConfigError::io(path, e))?;
    MappingProfile::from_json(&bytes).map_err(|e| ConfigError::invalid(path, e))
}

/// Built-in vocabularies, each replaced by a same-named `*.json` file in
/// `dir` when present.
pub fn load_vocabularies(dir: &Path) -> Result<VocabularySet, ConfigError> {
    let mut set = VocabularySet::default();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| ConfigError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    for path in files {
        let bytes = fs::read(&path).map_err(|e| ConfigError::io(&path, e))?;
        let vocab = ControlledVocabulary::from_json(&bytes).map_err(|e| ConfigError::invalid(&path, e))?;
        set.replace(vocab).map_err(|e| ConfigError::invalid(&path, e))?;
    }
    Ok(set)
}
