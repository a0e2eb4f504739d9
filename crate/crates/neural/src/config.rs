//! Model and training hyperparameters, and the flat `key=value` config file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("d_model ({d_model}) is not divisible by n_heads ({n_heads})")]
    HeadsDontDivide { d_model: usize, n_heads: usize },
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("dropout must lie in [0, 1), got {0}")]
    Dropout(f64),
    #[error("plateau_factor must lie in (0, 1), got {0}")]
    PlateauFactor(f64),
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_encoder_layers: usize,
    pub n_decoder_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ffn: usize,
    pub dropout: f64,
    pub max_seq_len: usize,
}

impl ModelConfig {
    /// 4+4 layers, 4 heads, 256-wide embeddings, 1024-wide feed-forward.
    pub fn paper() -> ModelConfig {
        ModelConfig {
            n_encoder_layers: 4,
            n_decoder_layers: 4,
            n_heads: 4,
            d_model: 256,
            d_ffn: 1024,
            dropout: 0.1,
            max_seq_len: 512,
        }
    }

    /// One layer each side, one head, width 8; for gradient checks.
    pub fn micro() -> ModelConfig {
        ModelConfig {
            n_encoder_layers: 1,
            n_decoder_layers: 1,
            n_heads: 1,
            d_model: 8,
            d_ffn: 16,
            dropout: 0.0,
            max_seq_len: 64,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("n_encoder_layers", self.n_encoder_layers),
            ("n_decoder_layers", self.n_decoder_layers),
            ("n_heads", self.n_heads),
            ("d_model", self.d_model),
            ("d_ffn", self.d_ffn),
            ("max_seq_len", self.max_seq_len),
        ] {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(ConfigError::HeadsDontDivide {
                d_model: self.d_model,
                n_heads: self.n_heads,
            });
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ConfigError::Dropout(self.dropout));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::paper()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub plateau_factor: f64,
    pub plateau_patience_epochs: usize,
    pub warmup_epochs: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            plateau_factor: 0.5,
            plateau_patience_epochs: 10,
            warmup_epochs: 5,
            batch_size: 16,
            max_epochs: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(ConfigError::NotPositive("lr"));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(ConfigError::PlateauFactor(self.plateau_factor));
        }
        for (name, v) in [
            ("plateau_patience_epochs", self.plateau_patience_epochs),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
        ] {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        Ok(())
    }
}

/// Everything read from a config file. Keys that are not model or training
/// settings are kept in `extra`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub extra: BTreeMap<String, String>,
}

fn parse_value<V: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<V, ConfigError> {
    value.parse().map_err(|_| ConfigError::Syntax {
        line,
        message: format!("bad value {value:?} for {key}"),
    })
}

/// Parses `key = value` lines; `#` starts a comment. Missing keys keep the
/// paper defaults.
pub fn parse_config(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut cfg = ConfigFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected key=value, found {content:?}"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let m = &mut cfg.model;
        let t = &mut cfg.train;
        match key {
            "n_encoder_layers" => m.n_encoder_layers = parse_value(line, key, value)?,
            "n_decoder_layers" => m.n_decoder_layers = parse_value(line, key, value)?,
            "n_heads" => m.n_heads = parse_value(line, key, value)?,
            "d_model" => m.d_model = parse_value(line, key, value)?,
            "d_ffn" => m.d_ffn = parse_value(line, key, value)?,
            "dropout" => m.dropout = parse_value(line, key, value)?,
            "max_seq_len" => m.max_seq_len = parse_value(line, key, value)?,
            "lr" => t.lr = parse_value(line, key, value)?,
            "plateau_factor" => t.plateau_factor = parse_value(line, key, value)?,
            "plateau_patience_epochs" => t.plateau_patience_epochs = parse_value(line, key, value)?,
            "warmup_epochs" => t.warmup_epochs = parse_value(line, key, value)?,
            "batch_size" => t.batch_size = parse_value(line, key, value)?,
            "max_epochs" => t.max_epochs = parse_value(line, key, value)?,
            "seed" => t.seed = parse_value(line, key, value)?,
            _ => {
                cfg.extra.insert(key.to_owned(), value.to_owned());
            }
        }
    }
    cfg.model.validate()?;
    cfg.train.validate()?;
    Ok(cfg)
}

impl ConfigFile {
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let t = &self.train;
        let mut out = format!(
            "n_encoder_layers = {}\nn_decoder_layers = {}\nn_heads = {}\nd_model = {}\nd_ffn = {}\ndropout = {}\nmax_seq_len = {}\n\
             lr = {}\nplateau_factor = {}\nplateau_patience_epochs = {}\nwarmup_epochs = {}\nbatch_size = {}\nmax_epochs = {}\nseed = {}\n",
            m.n_encoder_layers,
            m.n_decoder_layers,
            m.n_heads,
            m.d_model,
            m.d_ffn,
            m.dropout,
            m.max_seq_len,
            t.lr,
            t.plateau_factor,
            t.plateau_patience_epochs,
            t.warmup_epochs,
            t.batch_size,
            t.max_epochs,
            t.seed
        );
        for (k, v) in &self.extra {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
