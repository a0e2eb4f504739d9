//! Corpus text normalization: character filtering, Tajik hyphen removal and
//! ZWNJ affix joining for Perso-Arabic.

use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::script::{self, CharClass, Script, ZWNJ};

pub const BUILTIN_AFFIXES: &str = include_str!("../data/affixes.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZwnjMode {
    Keep,
    Remove,
    SpaceReplace,
}

impl FromStr for ZwnjMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keep" => Ok(ZwnjMode::Keep),
            "remove" => Ok(ZwnjMode::Remove),
            "space" => Ok(ZwnjMode::SpaceReplace),
            other => Err(format!("unknown ZWNJ mode {other:?} (keep, remove or space)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeConfig {
    pub strip_diacritics: bool,
    pub strip_digits_punct: bool,
    pub strip_tajik_hyphen: bool,
    /// Only honoured together with [`ZwnjMode::Keep`].
    pub join_affixes: bool,
    pub zwnj_mode: ZwnjMode,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig {
            strip_diacritics: true,
            strip_digits_punct: true,
            strip_tajik_hyphen: true,
            join_affixes: true,
            zwnj_mode: ZwnjMode::Keep,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("affix joining needs the ZWNJ kept, but the mode is {0:?}")]
    JoinWithoutZwnj(ZwnjMode),
    #[error("affix list line {line}: {message}")]
    AffixList { line: usize, message: String },
}

impl NormalizeConfig {
    pub fn validate(&self) -> Result<(), NormalizeError> {
        if self.join_affixes && self.zwnj_mode != ZwnjMode::Keep {
            return Err(NormalizeError::JoinWithoutZwnj(self.zwnj_mode));
        }
        Ok(())
    }
}

fn is_hyphen(c: char) -> bool {
    matches!(c, '-' | '\u{2010}' | '\u{2011}' | '\u{00AD}')
}

fn is_digit_or_punct(c: char) -> bool {
    c.is_numeric() || c.is_ascii_punctuation() || is_general_punct(c) || is_hyphen(c)
}

fn is_general_punct(c: char) -> bool {
    matches!(c,
        '\u{00A1}'..='\u{00BF}'
        | '\u{2012}'..='\u{206F}'
        | '\u{060C}' | '\u{061B}' | '\u{061F}' | '\u{066A}'..='\u{066D}' | '\u{06D4}'
        | '\u{3000}'..='\u{303F}' | '\u{FE50}'..='\u{FE6F}' | '\u{FF01}'..='\u{FF0F}'
    ) && c != '\u{200C}'
        && c != '\u{200D}'
}

/// Filters `text` down to inventory letters of `script`, single spaces and
/// (when kept) ZWNJ. Unknown characters are removed, never rejected.
pub fn normalize_text(text: &str, script: Script, cfg: &NormalizeConfig) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.nfc() {
        if c.is_whitespace() {
            out.push(' ');
        } else if c == ZWNJ {
            if script == Script::PersoArabic {
                match cfg.zwnj_mode {
                    ZwnjMode::Keep => out.push(ZWNJ),
                    ZwnjMode::Remove => {}
                    ZwnjMode::SpaceReplace => out.push(' '),
                }
            }
        } else if let Some(g) = script::is_inventory_char(c, script) {
            if g.class() != CharClass::Diacritic || !cfg.strip_diacritics {
                out.push(c);
            }
        } else if script == Script::TajikCyrillic && is_hyphen(c) && cfg.strip_tajik_hyphen {
            // a hyphenated pair is one word
        } else if is_digit_or_punct(c) {
            if cfg.strip_digits_punct {
                out.push(' ');
            } else {
                out.push(c);
            }
        }
        // anything else (other scripts, format characters) is dropped
    }
    // removals can leave combining marks adjacent and out of canonical order
    let cleaned: String = tidy(&out).nfc().collect();
    if script == Script::PersoArabic && cfg.join_affixes && cfg.zwnj_mode == ZwnjMode::Keep {
        join_affixes(&cleaned)
    } else {
        cleaned
    }
}

/// Collapses whitespace, trims, and drops ZWNJs that touch a space, the
/// string edge or another ZWNJ.
fn tidy(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split(' ').filter(|w| !w.is_empty()) {
        let mut piece = String::with_capacity(word.len());
        for c in word.chars() {
            if c == ZWNJ && (piece.is_empty() || piece.ends_with(ZWNJ)) {
                continue;
            }
            piece.push(c);
        }
        while piece.ends_with(ZWNJ) {
            piece.pop();
        }
        if piece.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&piece);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Affix {
    pub text: String,
    /// Only join after a stem ending in this string.
    pub stem_ending: Option<String>,
}

/// Perso-Arabic affixes that are joined to their stem with a ZWNJ.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AffixList {
    pub prefixes: Vec<Affix>,
    pub suffixes: Vec<Affix>,
}

static BUILTIN_AFFIX_LIST: LazyLock<AffixList> =
    LazyLock::new(|| AffixList::parse(BUILTIN_AFFIXES).expect("shipped affix list is valid"));

impl AffixList {
    pub fn builtin() -> &'static AffixList {
        &BUILTIN_AFFIX_LIST
    }

    /// Parses `side<TAB>affix[<TAB>stem ending]` lines, `side` being `pre`
    /// or `post`.
    pub fn parse(text: &str) -> Result<AffixList, NormalizeError> {
        let mut list = AffixList::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_start_matches('\u{feff}');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| NormalizeError::AffixList {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&fields.len()) || fields[1].is_empty() {
                return Err(err("expected side<TAB>affix[<TAB>stem ending]".into()));
            }
            let affix = Affix {
                text: fields[1].nfc().collect(),
                stem_ending: fields.get(2).map(|s| s.nfc().collect()),
            };
            match fields[0] {
                "pre" => list.prefixes.push(affix),
                "post" => list.suffixes.push(affix),
                other => return Err(err(format!("unknown side {other:?}"))),
            }
        }
        Ok(list)
    }

    pub fn load(path: &Path) -> Result<AffixList, NormalizeError> {
        let text = std::fs::read_to_string(path).map_err(|e| NormalizeError::AffixList {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        AffixList::parse(&text)
    }

    fn is_prefix(&self, token: &str) -> bool {
        self.prefixes.iter().any(|a| a.text == token)
    }

    fn suffix_attaches(&self, token: &str, stem: &str) -> bool {
        letter_count(stem) >= 2
            && self.suffixes.iter().any(|a| {
                a.text == token
                    && a.stem_ending
                        .as_deref()
                        .is_none_or(|end| stem.ends_with(end))
            })
    }
}

fn letter_count(token: &str) -> usize {
    token.chars().filter(|&c| c != ZWNJ).count()
}

/// Joins separated affixes to their stems with a ZWNJ using the shipped
/// affix list.
pub fn join_affixes(text: &str) -> String {
    join_affixes_with(text, AffixList::builtin())
}

/// Replaces the space between an affix and its stem by a ZWNJ. Suffixes
/// only attach to a preceding token of at least two letters, so a lone
/// و is never joined.
pub fn join_affixes_with(text: &str, affixes: &AffixList) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut glue_next = false;
    for token in text.split(' ') {
        match out.last_mut() {
            Some(prev) if glue_next || (!token.is_empty() && affixes.suffix_attaches(token, prev)) => {
                prev.push(ZWNJ);
                prev.push_str(token);
            }
            _ => out.push(token.to_owned()),
        }
        glue_next = affixes.is_prefix(token);
    }
    out.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tj(s: &str) -> String {
        normalize_text(s, Script::TajikCyrillic, &NormalizeConfig::default())
    }

    fn fa(s: &str) -> String {
        normalize_text(s, Script::PersoArabic, &NormalizeConfig::default())
    }

    #[test]
    fn tajik_hyphen_joins_words() {
        assert_eq!(tj("к-аз"), "каз");
        assert_eq!(tj("К-аз"), "Каз");
    }

    #[test]
    fn punctuation_is_stripped() {
        assert_eq!(tj("забон!"), "забон");
        assert_eq!(tj("  ман,  ту. 2024 "), "ман ту");
        assert_eq!(fa("سلام، دنیا؟"), "سلام دنیا");
    }

    #[test]
    fn diacritic_is_removed_and_zwnj_kept() {
        let input: String = ['ک', '\u{064E}', 'ت', 'ا', 'ب', '\u{200C}', 'ه', 'ا'].iter().collect();
        let out = fa(&input);
        let expected: Vec<char> = vec!['ک', 'ت', 'ا', 'ب', '\u{200C}', 'ه', 'ا'];
        assert_eq!(out.chars().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn diacritics_can_be_kept() {
        let cfg = NormalizeConfig {
            strip_diacritics: false,
            ..NormalizeConfig::default()
        };
        let out = normalize_text("کَتاب", Script::PersoArabic, &cfg);
        assert_eq!(out, "کَتاب");
    }

    #[test]
    fn zwnj_modes() {
        let text = "خانه\u{200C}ها";
        let remove = NormalizeConfig {
            join_affixes: false,
            zwnj_mode: ZwnjMode::Remove,
            ..NormalizeConfig::default()
        };
        assert_eq!(normalize_text(text, Script::PersoArabic, &remove), "خانهها");
        let space = NormalizeConfig {
            zwnj_mode: ZwnjMode::SpaceReplace,
            ..remove.clone()
        };
        assert_eq!(normalize_text(text, Script::PersoArabic, &space), "خانه ها");
        assert!(remove.validate().is_ok());
        let bad = NormalizeConfig {
            join_affixes: true,
            ..remove
        };
        assert_eq!(bad.validate(), Err(NormalizeError::JoinWithoutZwnj(ZwnjMode::Remove)));
    }

    #[test]
    fn stray_zwnj_is_dropped() {
        assert_eq!(fa("\u{200C}کتاب\u{200C}\u{200C} \u{200C}"), "کتاب");
        assert_eq!(fa("کتاب\u{200C}\u{200C}ها"), "کتاب\u{200C}ها");
    }

    #[test]
    fn other_scripts_are_removed() {
        assert_eq!(tj("китоб book"), "китоб");
        assert_eq!(fa("کتاب китоб"), "کتاب");
        // ZWNJ has no place in Tajik text
        assert_eq!(tj("кито\u{200C}б"), "китоб");
    }

    #[test]
    fn affix_table_rows() {
        assert_eq!(join_affixes("موضوع را"), "موضوع\u{200C}را");
        assert_eq!(join_affixes("خانه ها"), "خانه\u{200C}ها");
        assert_eq!(join_affixes("می خواهم"), "می\u{200C}خواهم");
        assert_eq!(join_affixes("کتاب فروش"), "کتاب\u{200C}فروش");
        assert_eq!(join_affixes("کرده است"), "کرده\u{200C}است");
    }

    #[test]
    fn affixless_text_is_unchanged() {
        assert_eq!(join_affixes("کتاب"), "کتاب");
        assert_eq!(join_affixes("این کتاب خوب است"), "این کتاب خوب است");
        assert_eq!(join_affixes(""), "");
    }

    #[test]
    fn single_letter_tokens_are_not_joined() {
        assert_eq!(join_affixes("و را"), "و را");
        assert_eq!(join_affixes("تاجیک و ایرانی"), "تاجیک و ایرانی");
    }

    #[test]
    fn chained_affixes() {
        assert_eq!(
            join_affixes("خانه ها را می بینم"),
            "خانه\u{200C}ها\u{200C}را می\u{200C}بینم"
        );
        assert_eq!(join_affixes("کتاب می"), "کتاب می");
    }

    #[test]
    fn normalize_joins_affixes_by_default() {
        assert_eq!(fa("می خواهم!"), "می\u{200C}خواهم");
        let no_join = NormalizeConfig {
            join_affixes: false,
            ..NormalizeConfig::default()
        };
        assert_eq!(
            normalize_text("می خواهم", Script::PersoArabic, &no_join),
            "می خواهم"
        );
    }

    #[test]
    fn affix_list_parsing() {
        let list = AffixList::parse("pre\tبی\npost\tتر\n").unwrap();
        assert_eq!(list.prefixes.len(), 1);
        assert_eq!(join_affixes_with("بی کار", &list), "بی\u{200C}کار");
        assert!(matches!(
            AffixList::parse("mid\tx\n"),
            Err(NormalizeError::AffixList { line: 1, .. })
        ));
    }
}
