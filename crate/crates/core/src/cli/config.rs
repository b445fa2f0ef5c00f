use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{FitsError, Result};
use crate::model::Supervision;
use crate::training::TrainSpec;

/// Environment variable naming the directory relative dataset paths are
/// resolved against.
pub const DATA_ROOT_ENV: &str = "FITS_DATA_ROOT";

const TRAIN_SPEC_KEYS: [&str; 8] = [
    "learning_rate",
    "batch_size",
    "max_epochs",
    "patience",
    "beta1",
    "beta2",
    "eps_adam",
    "seeds",
];
const DATA_KEYS: [&str; 5] = ["data", "profile", "period", "split", "timestamp"];

/// Keys each command accepts.
pub fn schema(command: &str) -> Vec<&'static str> {
    let mut keys = Vec::new();
    match command {
        "train" => {
            keys.extend(DATA_KEYS);
            keys.extend(["look_back", "horizon", "harmonic", "supervision"]);
            keys.extend(TRAIN_SPEC_KEYS);
        }
        "grid" => {
            keys.extend(DATA_KEYS);
            keys.extend(["look_backs", "horizon", "harmonics", "supervisions", "resume"]);
            keys.extend(TRAIN_SPEC_KEYS);
        }
        "eval" => {
            keys.extend(DATA_KEYS);
            keys.push("checkpoint");
        }
        "detect" => {
            keys.extend([
                "data",
                "timestamp",
                "labels",
                "label_column",
                "train_rows",
                "window",
                "factor",
                "checkpoint",
                "val_fraction",
                "write_scores",
            ]);
            keys.extend(TRAIN_SPEC_KEYS);
        }
        "synth" => keys.extend(["len", "channels", "rate", "seed"]),
        _ => {}
    }
    keys
}

/// Flat `key = value` settings. `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    command: String,
    values: BTreeMap<String, String>,
}

fn config_err(msg: impl Into<String>) -> FitsError {
    FitsError::Config(msg.into())
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_owned(),
            values: BTreeMap::new(),
        }
    }

    pub fn parse(command: &str, text: &str) -> Result<Self> {
        let mut cfg = Self::new(command);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
            let key = key.trim();
            if cfg.values.contains_key(key) {
                return Err(config_err(format!("line {}: duplicate key `{key}`", i + 1)));
            }
            cfg.set(key, value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(command: &str, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FitsError::io(path, e))?;
        Self::parse(command, &text)
    }

    /// Sets or overrides one key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let allowed = schema(&self.command);
        if !allowed.contains(&key) {
            return Err(config_err(format!(
                "unknown key `{key}` for `{}`; accepted keys: {}",
                self.command,
                allowed.join(", ")
            )));
        }
        self.values.insert(key.to_owned(), value.to_owned());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// The settings as they would appear in a config file.
    pub fn render(&self) -> String {
        self.entries().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| config_err(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.parsed(key)?.ok_or_else(|| config_err(format!("missing required key `{key}`")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key).map(|v| v.to_ascii_lowercase()) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(config_err(format!("`{key}`: expected true or false, got `{v}`"))),
            },
        }
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.get(key).map(str::to_owned)
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let items = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| config_err(format!("`{key}`: cannot parse `{s}`"))))
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            return Err(config_err(format!("`{key}` is empty")));
        }
        Ok(Some(items))
    }

    pub fn harmonic(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse_harmonic(v).map_err(|_| config_err(format!("`{key}`: expected a positive integer or `none`, got `{v}`"))),
        }
    }

    pub fn harmonics(&self, key: &str) -> Result<Option<Vec<Option<usize>>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| parse_harmonic(s.trim()).map_err(|_| config_err(format!("`{key}`: bad entry `{}`", s.trim()))))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn supervision_or(&self, key: &str, default: Supervision) -> Result<Supervision> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    /// Optimizer settings on top of `base`.
    pub fn train_spec(&self, base: TrainSpec) -> Result<TrainSpec> {
        let spec = TrainSpec {
            learning_rate: self.f64_or("learning_rate", base.learning_rate)?,
            batch_size: self.usize_or("batch_size", base.batch_size)?,
            max_epochs: self.usize_or("max_epochs", base.max_epochs)?,
            patience: self.usize_or("patience", base.patience)?,
            beta1: self.f64_or("beta1", base.beta1)?,
            beta2: self.f64_or("beta2", base.beta2)?,
            eps_adam: self.f64_or("eps_adam", base.eps_adam)?,
            seed: base.seed,
            seeds_for_reporting: self.list("seeds")?.unwrap_or(base.seeds_for_reporting),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Resolves `key` as a path: existing paths as given, otherwise relative
    /// paths under the data root.
    pub fn data_path(&self, key: &str) -> Result<PathBuf> {
        let raw = self.get(key).ok_or_else(|| config_err(format!("missing required key `{key}`")))?;
        Ok(resolve_data_path(raw, std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from)))
    }
}

fn parse_harmonic(v: &str) -> std::result::Result<Option<usize>, ()> {
    match v.to_ascii_lowercase().as_str() {
        "none" | "0" => Ok(None),
        s => s.parse::<usize>().map(Some).map_err(|_| ()),
    }
}

pub fn resolve_data_path(raw: &str, root: Option<PathBuf>) -> PathBuf {
    let path = PathBuf::from(raw);
    match root {
        Some(root) if path.is_relative() && !path.exists() => root.join(path),
        _ => path,
    }
}
