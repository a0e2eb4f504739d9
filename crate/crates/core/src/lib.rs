//! Tajik-Cyrillic and Perso-Arabic script handling: grapheme inventories,
//! normalization, parallel corpora, rule-based transliteration and
//! evaluation metrics.

pub mod corpus;
pub mod lexicon;
pub mod metrics;
pub mod normalize;
pub mod rules;
pub mod script;
pub mod translit;

pub use rules::Direction;
pub use script::{CharClass, Grapheme, Script};
