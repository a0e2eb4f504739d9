//! Character-level encoder-decoder transformer for transliteration between
//! Tajik Cyrillic and Perso-Arabic script, trained from scratch on CPU.

pub mod checkpoint;
pub mod config;
pub mod model;
pub mod ops;
pub mod train;
pub mod vocab;

pub use checkpoint::{CheckpointError, Metadata};
pub use config::{parse_config, ConfigError, ConfigFile, ModelConfig, TrainConfig};
pub use model::{Example, ModelError, Pass, Transducer};
pub use train::{train, EpochLog, PlateauScheduler, TrainError};
pub use vocab::Vocabulary;
