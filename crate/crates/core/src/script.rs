//! Grapheme inventories and character classes for the two scripts.
//!
//! Every letter the toolkit knows about lives in one of two static tables.
//! A [`Grapheme`] is an interned reference into those tables, so it is
//! `Copy` and cheap to compare.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Zero-width non-joiner.
pub const ZWNJ: char = '\u{200C}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Script {
    PersoArabic,
    TajikCyrillic,
}

impl Script {
    pub fn code(self) -> &'static str {
        match self {
            Script::PersoArabic => "fa",
            Script::TajikCyrillic => "tj",
        }
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Script::PersoArabic => f.write_str("Perso-Arabic"),
            Script::TajikCyrillic => f.write_str("Tajik-Cyrillic"),
        }
    }
}

impl FromStr for Script {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fa" | "farsi" | "perso-arabic" => Ok(Script::PersoArabic),
            "tj" | "tajik" | "tajik-cyrillic" => Ok(Script::TajikCyrillic),
            other => Err(format!("unknown script {other:?} (expected fa or tj)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CharClass {
    Consonant,
    Vowel,
    /// Perso-Arabic و and ی, which write either a consonant or a long vowel.
    VowelOrConsonant,
    Diacritic,
    Control,
    GlottalSign,
}

impl CharClass {
    pub const ALL: [CharClass; 6] = [
        CharClass::Consonant,
        CharClass::Vowel,
        CharClass::VowelOrConsonant,
        CharClass::Diacritic,
        CharClass::Control,
        CharClass::GlottalSign,
    ];

    /// Letters proper, as opposed to marks and invisible controls.
    pub fn is_letter(self) -> bool {
        !matches!(self, CharClass::Diacritic | CharClass::Control)
    }
}

impl FromStr for CharClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CharClass::ALL
            .into_iter()
            .find(|c| format!("{c:?}") == s)
            .ok_or_else(|| format!("unknown character class {s:?}"))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScriptError {
    #[error("{text:?} is not a grapheme of the {script} inventory")]
    NotInInventory { text: String, script: Script },
}

/// One inventory letter (or mark) of a script.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Grapheme {
    text: &'static str,
    script: Script,
    class: CharClass,
}

impl Grapheme {
    pub fn as_str(&self) -> &'static str {
        self.text
    }

    pub fn script(&self) -> Script {
        self.script
    }

    pub fn class(&self) -> CharClass {
        self.class
    }

    pub fn codepoints(&self) -> impl Iterator<Item = char> + 'static {
        self.text.chars()
    }

    /// Looks up an exact inventory entry (no normalization is applied).
    pub fn lookup(text: &str, script: Script) -> Result<Grapheme, ScriptError> {
        inventory(script).get(text).copied().ok_or_else(|| ScriptError::NotInInventory {
            text: text.to_owned(),
            script,
        })
    }

    /// The lowercase counterpart; identity for Perso-Arabic and for
    /// letters that are already lowercase.
    pub fn to_lowercase(self) -> Grapheme {
        if self.script == Script::PersoArabic {
            return self;
        }
        let lower: String = self.text.chars().flat_map(char::to_lowercase).collect();
        Grapheme::lookup(&lower, self.script).unwrap_or(self)
    }

    pub fn is_uppercase(&self) -> bool {
        self.text.chars().any(char::is_uppercase)
    }
}

impl fmt::Debug for Grapheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let escaped: String = self.text.escape_unicode().collect();
        write!(f, "{}({:?} {})", self.script.code(), self.text, escaped)
    }
}

impl fmt::Display for Grapheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text)
    }
}

use CharClass::*;

static PERSO_ARABIC_TABLE: &[(&str, CharClass)] = &[
    ("ا", Vowel),
    ("آ", Vowel),
    ("أ", GlottalSign),
    ("إ", GlottalSign),
    ("ؤ", GlottalSign),
    ("ئ", GlottalSign),
    ("ء", GlottalSign),
    ("ع", GlottalSign),
    ("ب", Consonant),
    ("پ", Consonant),
    ("ت", Consonant),
    ("ث", Consonant),
    ("ج", Consonant),
    ("چ", Consonant),
    ("ح", Consonant),
    ("خ", Consonant),
    ("د", Consonant),
    ("ذ", Consonant),
    ("ر", Consonant),
    ("ز", Consonant),
    ("ژ", Consonant),
    ("س", Consonant),
    ("ش", Consonant),
    ("ص", Consonant),
    ("ض", Consonant),
    ("ط", Consonant),
    ("ظ", Consonant),
    ("غ", Consonant),
    ("ف", Consonant),
    ("ق", Consonant),
    ("ک", Consonant),
    ("گ", Consonant),
    ("ل", Consonant),
    ("م", Consonant),
    ("ن", Consonant),
    ("ه", Consonant),
    ("و", VowelOrConsonant),
    ("ی", VowelOrConsonant),
    ("\u{200C}", Control),
    // harakat and other combining marks
    ("\u{064B}", Diacritic),
    ("\u{064C}", Diacritic),
    ("\u{064D}", Diacritic),
    ("\u{064E}", Diacritic),
    ("\u{064F}", Diacritic),
    ("\u{0650}", Diacritic),
    ("\u{0651}", Diacritic),
    ("\u{0652}", Diacritic),
    ("\u{0653}", Diacritic),
    ("\u{0654}", Diacritic),
    ("\u{0655}", Diacritic),
    ("\u{0670}", Diacritic),
];

static TAJIK_TABLE: &[(&str, CharClass)] = &[
    ("а", Vowel),
    ("б", Consonant),
    ("в", Consonant),
    ("г", Consonant),
    ("ғ", Consonant),
    ("д", Consonant),
    ("е", Vowel),
    ("ё", Vowel),
    ("ж", Consonant),
    ("з", Consonant),
    ("и", Vowel),
    ("ӣ", Vowel),
    ("й", Consonant),
    ("к", Consonant),
    ("қ", Consonant),
    ("л", Consonant),
    ("м", Consonant),
    ("н", Consonant),
    ("о", Vowel),
    ("п", Consonant),
    ("р", Consonant),
    ("с", Consonant),
    ("т", Consonant),
    ("у", Vowel),
    ("ӯ", Vowel),
    ("ф", Consonant),
    ("х", Consonant),
    ("ҳ", Consonant),
    ("ч", Consonant),
    ("ҷ", Consonant),
    ("ш", Consonant),
    ("ъ", GlottalSign),
    ("э", Vowel),
    ("ю", Vowel),
    ("я", Vowel),
    ("А", Vowel),
    ("Б", Consonant),
    ("В", Consonant),
    ("Г", Consonant),
    ("Ғ", Consonant),
    ("Д", Consonant),
    ("Е", Vowel),
    ("Ё", Vowel),
    ("Ж", Consonant),
    ("З", Consonant),
    ("И", Vowel),
    ("Ӣ", Vowel),
    ("Й", Consonant),
    ("К", Consonant),
    ("Қ", Consonant),
    ("Л", Consonant),
    ("М", Consonant),
    ("Н", Consonant),
    ("О", Vowel),
    ("П", Consonant),
    ("Р", Consonant),
    ("С", Consonant),
    ("Т", Consonant),
    ("У", Vowel),
    ("Ӯ", Vowel),
    ("Ф", Consonant),
    ("Х", Consonant),
    ("Ҳ", Consonant),
    ("Ч", Consonant),
    ("Ҷ", Consonant),
    ("Ш", Consonant),
    ("Ъ", GlottalSign),
    ("Э", Vowel),
    ("Ю", Vowel),
    ("Я", Vowel),
    // stress marks
    ("\u{0300}", Diacritic),
    ("\u{0301}", Diacritic),
];

type Inventory = HashMap<&'static str, Grapheme>;

fn build(table: &'static [(&'static str, CharClass)], script: Script) -> Inventory {
    table
        .iter()
        .map(|&(text, class)| (text, Grapheme { text, script, class }))
        .collect()
}

static PERSO_ARABIC: LazyLock<Inventory> =
    LazyLock::new(|| build(PERSO_ARABIC_TABLE, Script::PersoArabic));
static TAJIK: LazyLock<Inventory> = LazyLock::new(|| build(TAJIK_TABLE, Script::TajikCyrillic));

fn inventory(script: Script) -> &'static Inventory {
    match script {
        Script::PersoArabic => &PERSO_ARABIC,
        Script::TajikCyrillic => &TAJIK,
    }
}

fn table(script: Script) -> &'static [(&'static str, CharClass)] {
    match script {
        Script::PersoArabic => PERSO_ARABIC_TABLE,
        Script::TajikCyrillic => TAJIK_TABLE,
    }
}

/// All graphemes of a script, in table order.
pub fn graphemes(script: Script) -> impl Iterator<Item = Grapheme> {
    let inv = inventory(script);
    table(script).iter().map(move |(text, _)| inv[text])
}

/// Longest inventory entry, in codepoints.
const MAX_GRAPHEME_LEN: usize = 2;

/// Class of a single grapheme. The input is NFC-composed before lookup, so
/// a decomposed `и` + U+0304 classifies like `ӣ`.
pub fn classify(g: &str, script: Script) -> Result<CharClass, ScriptError> {
    let composed: String = g.nfc().collect();
    Grapheme::lookup(&composed, script).map(|g| g.class())
}

/// Does `c` belong to the script as a single-codepoint grapheme?
pub fn is_inventory_char(c: char, script: Script) -> Option<Grapheme> {
    let mut buf = [0u8; 4];
    inventory(script).get(&*c.encode_utf8(&mut buf)).copied()
}

/// NFC-composes `text` and splits it into inventory graphemes, dropping
/// whitespace.
pub fn segment(text: &str, script: Script) -> Result<Vec<Grapheme>, ScriptError> {
    Ok(segment_words(text, script)?.into_iter().flatten().collect())
}

/// Like [`segment`] but keeps whitespace-delimited words apart.
pub fn segment_words(text: &str, script: Script) -> Result<Vec<Vec<Grapheme>>, ScriptError> {
    let composed: Vec<char> = text.nfc().collect();
    let inv = inventory(script);
    let mut words = Vec::new();
    let mut current = Vec::new();
    let mut i = 0;
    let mut key = String::new();
    while i < composed.len() {
        if composed[i].is_whitespace() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            i += 1;
            continue;
        }
        let mut matched = None;
        for len in (1..=MAX_GRAPHEME_LEN.min(composed.len() - i)).rev() {
            key.clear();
            key.extend(&composed[i..i + len]);
            if let Some(g) = inv.get(key.as_str()) {
                matched = Some((*g, len));
                break;
            }
        }
        match matched {
            Some((g, len)) => {
                current.push(g);
                i += len;
            }
            None => {
                return Err(ScriptError::NotInInventory {
                    text: composed[i].to_string(),
                    script,
                })
            }
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    Ok(words)
}

/// Concatenates graphemes back into a string.
pub fn join(graphemes: &[Grapheme]) -> String {
    graphemes.iter().map(|g| g.as_str()).collect()
}
