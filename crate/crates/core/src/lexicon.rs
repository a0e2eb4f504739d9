//! Target-side word lists built from parallel text.

use std::collections::HashMap;
use std::sync::LazyLock;

use crate::corpus::{self, ParallelCorpus};
use crate::normalize::{normalize_text, NormalizeConfig};
use crate::rules::{builtin_ref, Direction, Lexicon, RuleSet};
use crate::script::Script;

/// Counts the normalized word forms of one side of `corpus`. Tajik forms
/// are lowercased.
pub fn lexicon_from_corpus(corpus: &ParallelCorpus, script: Script) -> Lexicon {
    let cfg = NormalizeConfig::default();
    let mut counts: HashMap<String, u64> = HashMap::new();
    for pair in &corpus.pairs {
        let side = match script {
            Script::PersoArabic => &pair.farsi,
            Script::TajikCyrillic => &pair.tajik,
        };
        let mut text = normalize_text(side, script, &cfg);
        if script == Script::TajikCyrillic {
            text = text.to_lowercase();
        }
        for word in text.split(' ').filter(|w| !w.is_empty()) {
            *counts.entry(word.to_owned()).or_insert(0) += 1;
        }
    }
    Lexicon::from_counts(counts)
}

static BUILTIN_LEXICONS: LazyLock<[Lexicon; 2]> = LazyLock::new(|| {
    let sample = corpus::sample_corpus();
    [Script::PersoArabic, Script::TajikCyrillic].map(|s| lexicon_from_corpus(&sample, s))
});

/// The word list of the bundled sample corpus for `script`.
pub fn builtin_lexicon(script: Script) -> Lexicon {
    match script {
        Script::PersoArabic => BUILTIN_LEXICONS[0].clone(),
        Script::TajikCyrillic => BUILTIN_LEXICONS[1].clone(),
    }
}

/// Built-in rules for `direction` with the target-script sample lexicon
/// attached.
pub fn builtin_lexicon_ruleset(direction: Direction) -> RuleSet {
    builtin_ref(direction)
        .clone()
        .with_lexicon(builtin_lexicon(direction.target()))
}
