//! Grapheme vocabularies with fixed reserved indices.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use tajfar_core::metrics::units;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const SPACE: usize = 4;

const RESERVED: [&str; 5] = ["<pad>", "<s>", "</s>", "<unk>", " "];

/// Index ↔ grapheme map for one side. Graphemes are extended grapheme
/// clusters, ZWNJ being one of its own; any whitespace maps to the space
/// token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Reserved entries followed by every grapheme of `texts` in sorted
    /// order.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Vocabulary {
        let mut seen = BTreeSet::new();
        for t in texts {
            for u in units(t) {
                if !u.chars().all(char::is_whitespace) {
                    seen.insert(u);
                }
            }
        }
        let tokens = RESERVED.iter().map(|s| s.to_string()).chain(seen).collect();
        Vocabulary::from_tokens(tokens).expect("built vocabulary is consistent")
    }

    fn from_tokens(tokens: Vec<String>) -> Result<Vocabulary, String> {
        if tokens.len() < RESERVED.len() || tokens[..RESERVED.len()] != RESERVED {
            return Err("vocabulary must start with the reserved tokens".into());
        }
        let mut index = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(format!("duplicate vocabulary entry {t:?}"));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    /// Token ids of `text`, without BOS/EOS. Runs of whitespace become one
    /// space token; leading and trailing whitespace is dropped.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
        units(&text)
            .iter()
            .map(|u| if u == " " { SPACE } else { self.id(u) })
            .collect()
    }

    /// Text of `ids`, stopping at EOS; PAD and BOS are skipped and UNK is
    /// rendered as U+FFFD.
    pub fn decode(&self, ids: &[usize]) -> String {
        let mut out = String::new();
        for &id in ids {
            match id {
                EOS => break,
                PAD | BOS => {}
                UNK => out.push('\u{FFFD}'),
                _ => out.push_str(self.token(id).unwrap_or("\u{FFFD}")),
            }
        }
        out
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = String;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        Vocabulary::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}
