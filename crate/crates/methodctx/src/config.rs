//! Plain-text `key = value` run configuration.
//!
//! One setting per line; `#` starts a comment; blank lines are ignored.
//! Unknown and repeated keys are errors. [`KEYS`] lists every key.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use methodctx_core::context::{ContextKind, Mode};
use methodctx_core::tasks::{CnnTrainConfig, FitConfig};

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} set twice")]
    Duplicate { line: usize, key: String },
    #[error("{key} = {value:?}: {reason}")]
    Invalid {
        key: String,
        value: String,
        reason: String,
    },
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
}

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("source_root", "directory scanned by `ingest`"),
    ("corpus_dir", "directory holding the ingested corpus files"),
    ("model_dir", "directory holding the checkpoints"),
    ("mode", "checking | suggestion: contexts used for training"),
    ("seed", "master seed; every stage derives its own from it"),
    ("min_count", "minimum occurrences for a vocabulary entry"),
    ("window", "co-occurrence window for the embeddings"),
    ("embedding.dim", "embedding width"),
    (
        "embedding.epochs",
        "AdaGrad passes over the co-occurrence table",
    ),
    ("embedding.learning_rate", "AdaGrad step size"),
    ("embedding.x_max", "co-occurrence weighting cut-off"),
    ("embedding.alpha", "co-occurrence weighting exponent"),
    ("model.hidden", "GRU hidden width"),
    ("model.attention", "attention scorer width"),
    ("model.l_max", "tokens kept per context"),
    ("model.max_name_len", "longest decoded name in sub-tokens"),
    (
        "model.contexts",
        "comma list of internal, interaction, sibling, enclosing",
    ),
    ("model.copy", "true | false: copy from contexts"),
    ("model.noncopy", "true | false: bigram non-copy penalty"),
    ("model.learn_weights", "true | false: learn context weights"),
    ("train.epochs", "passes over the training methods"),
    ("train.learning_rate", "SGD step size"),
    ("train.momentum", "SGD momentum"),
    ("train.clip_norm", "global gradient-norm ceiling"),
    ("train.batch_size", "methods per update"),
    (
        "classifier.enabled",
        "true | false: train the consistency classifier",
    ),
    ("classifier.epochs", "classifier passes"),
    ("classifier.learning_rate", "classifier Adam step size"),
    ("classifier.batch_size", "classifier examples per update"),
    (
        "classifier.negatives",
        "corrupted names per training method",
    ),
    ("suggest.k", "suggestions per method"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source_root: Option<PathBuf>,
    pub corpus_dir: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    pub fit: FitConfig,
    /// Kept when the classifier is disabled so re-enabling restores it.
    pub classifier: CnnTrainConfig,
    pub classifier_enabled: bool,
    pub k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fit = FitConfig::default();
        RunConfig {
            source_root: None,
            corpus_dir: None,
            model_dir: None,
            classifier: fit.cnn.clone().unwrap_or_default(),
            classifier_enabled: fit.cnn.is_some(),
            fit,
            k: 10,
        }
    }
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn count(key: &str, v: &str, min: usize) -> Result<usize, ConfigError> {
    let n: usize = v
        .parse()
        .map_err(|_| invalid(key, v, "expected a whole number"))?;
    if n < min {
        return Err(invalid(key, v, &format!("must be at least {min}")));
    }
    Ok(n)
}

fn positive(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|_| invalid(key, v, "expected a number"))?;
    if !(x.is_finite() && x > 0.0) {
        return Err(invalid(key, v, "must be a positive number"));
    }
    Ok(x)
}

fn flag(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(invalid(key, v, "expected true or false")),
    }
}

pub fn parse_mode(key: &str, v: &str) -> Result<Mode, ConfigError> {
    Mode::parse(v).ok_or_else(|| invalid(key, v, "expected checking or suggestion"))
}

fn contexts(key: &str, v: &str) -> Result<Vec<ContextKind>, ConfigError> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim) {
        let k = ContextKind::parse(part)
            .ok_or_else(|| invalid(key, v, &format!("unknown context {part:?}")))?;
        if out.contains(&k) {
            return Err(invalid(key, v, &format!("context {part} listed twice")));
        }
        out.push(k);
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(ConfigError::UnknownKey {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
            seen.push(key.to_string());
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let f = &mut self.fit;
        match key {
            "source_root" => self.source_root = Some(PathBuf::from(v)),
            "corpus_dir" => self.corpus_dir = Some(PathBuf::from(v)),
            "model_dir" => self.model_dir = Some(PathBuf::from(v)),
            "mode" => f.mode = parse_mode(key, v)?,
            "seed" => {
                f.seed = v
                    .parse()
                    .map_err(|_| invalid(key, v, "expected a whole number"))?
            }
            "min_count" => f.min_count = count(key, v, 1)? as u64,
            "window" => f.window = count(key, v, 1)?,
            "embedding.dim" => f.glove.dim = count(key, v, 1)?,
            "embedding.epochs" => f.glove.epochs = count(key, v, 1)?,
            "embedding.learning_rate" => f.glove.learning_rate = positive(key, v)?,
            "embedding.x_max" => f.glove.x_max = positive(key, v)?,
            "embedding.alpha" => f.glove.alpha = positive(key, v)?,
            "model.hidden" => f.model.hidden = count(key, v, 1)?,
            "model.attention" => f.model.attention = count(key, v, 1)?,
            "model.l_max" => f.model.l_max = count(key, v, 1)?,
            "model.max_name_len" => f.model.max_name_len = count(key, v, 1)?,
            "model.contexts" => f.model.contexts = contexts(key, v)?,
            "model.copy" => f.model.copy = flag(key, v)?,
            "model.noncopy" => f.model.noncopy = flag(key, v)?,
            "model.learn_weights" => f.model.learn_weights = flag(key, v)?,
            "train.epochs" => f.train.epochs = count(key, v, 1)?,
            "train.learning_rate" => f.train.learning_rate = positive(key, v)?,
            "train.momentum" => {
                let m: f64 = v
                    .parse()
                    .map_err(|_| invalid(key, v, "expected a number"))?;
                if !(0.0..1.0).contains(&m) {
                    return Err(invalid(key, v, "must lie in [0, 1)"));
                }
                f.train.momentum = m;
            }
            "train.clip_norm" => f.train.clip_norm = positive(key, v)?,
            "train.batch_size" => f.train.batch_size = count(key, v, 1)?,
            "classifier.enabled" => self.classifier_enabled = flag(key, v)?,
            "classifier.epochs" => self.classifier.epochs = count(key, v, 1)?,
            "classifier.learning_rate" => self.classifier.learning_rate = positive(key, v)?,
            "classifier.batch_size" => self.classifier.batch_size = count(key, v, 1)?,
            "classifier.negatives" => f.negatives = count(key, v, 1)?,
            "suggest.k" => self.k = count(key, v, 1)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        self.fit.cnn = self.classifier_enabled.then(|| self.classifier.clone());
        Ok(())
    }

    /// Every key with its current value, in [`KEYS`] order; unset paths are
    /// omitted. [`RunConfig::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let f = &self.fit;
        let mut out = String::new();
        for (key, _) in KEYS {
            let value = match *key {
                "source_root" => self.source_root.as_ref().map(|p| p.display().to_string()),
                "corpus_dir" => self.corpus_dir.as_ref().map(|p| p.display().to_string()),
                "model_dir" => self.model_dir.as_ref().map(|p| p.display().to_string()),
                "mode" => Some(f.mode.name().to_string()),
                "seed" => Some(f.seed.to_string()),
                "min_count" => Some(f.min_count.to_string()),
                "window" => Some(f.window.to_string()),
                "embedding.dim" => Some(f.glove.dim.to_string()),
                "embedding.epochs" => Some(f.glove.epochs.to_string()),
                "embedding.learning_rate" => Some(f.glove.learning_rate.to_string()),
                "embedding.x_max" => Some(f.glove.x_max.to_string()),
                "embedding.alpha" => Some(f.glove.alpha.to_string()),
                "model.hidden" => Some(f.model.hidden.to_string()),
                "model.attention" => Some(f.model.attention.to_string()),
                "model.l_max" => Some(f.model.l_max.to_string()),
                "model.max_name_len" => Some(f.model.max_name_len.to_string()),
                "model.contexts" => Some(
                    f.model
                        .contexts
                        .iter()
                        .map(|c| c.name())
                        .collect::<Vec<_>>()
                        .join(","),
                ),
                "model.copy" => Some(f.model.copy.to_string()),
                "model.noncopy" => Some(f.model.noncopy.to_string()),
                "model.learn_weights" => Some(f.model.learn_weights.to_string()),
                "train.epochs" => Some(f.train.epochs.to_string()),
                "train.learning_rate" => Some(f.train.learning_rate.to_string()),
                "train.momentum" => Some(f.train.momentum.to_string()),
                "train.clip_norm" => Some(f.train.clip_norm.to_string()),
                "train.batch_size" => Some(f.train.batch_size.to_string()),
                "classifier.enabled" => Some(self.classifier_enabled.to_string()),
                "classifier.epochs" => Some(self.classifier.epochs.to_string()),
                "classifier.learning_rate" => Some(self.classifier.learning_rate.to_string()),
                "classifier.batch_size" => Some(self.classifier.batch_size.to_string()),
                "classifier.negatives" => Some(f.negatives.to_string()),
                "suggest.k" => Some(self.k.to_string()),
                _ => None,
            };
            if let Some(v) = value {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        out
    }
}
