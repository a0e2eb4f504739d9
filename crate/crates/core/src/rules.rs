//! Grapheme correspondence rules between the two scripts.
//!
//! Rules are plain data, shipped as a tab-separated table (see
//! `data/rules.tsv`) with one rule per line:
//!
//! ```text
//! direction<TAB>source<TAB>position<TAB>target1|target2|...<TAB>priority
//! ```
//!
//! `∅` is the empty target. A source may also be `U+XXXX` (an escaped
//! codepoint), `=word` (a whole-word exception), `+Class` (an optional
//! insertion after any grapheme of that class) or `^Class` (an optional
//! insertion before a word-initial grapheme of that class).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::script::{self, CharClass, Grapheme, Script};

/// The table compiled into the library.
pub const BUILTIN_RULES: &str = include_str!("../data/rules.tsv");

/// Token used for the empty target.
pub const EMPTY_TARGET: &str = "∅";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    FarsiToTajik,
    TajikToFarsi,
}

impl Direction {
    pub fn source(self) -> Script {
        match self {
            Direction::FarsiToTajik => Script::PersoArabic,
            Direction::TajikToFarsi => Script::TajikCyrillic,
        }
    }

    pub fn target(self) -> Script {
        match self {
            Direction::FarsiToTajik => Script::TajikCyrillic,
            Direction::TajikToFarsi => Script::PersoArabic,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Direction::FarsiToTajik => "fa2tj",
            Direction::TajikToFarsi => "tj2fa",
        }
    }

    pub fn reverse(self) -> Direction {
        match self {
            Direction::FarsiToTajik => Direction::TajikToFarsi,
            Direction::TajikToFarsi => Direction::FarsiToTajik,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fa2tj" => Ok(Direction::FarsiToTajik),
            "tj2fa" => Ok(Direction::TajikToFarsi),
            other => Err(format!("unknown direction {other:?} (expected fa2tj or tj2fa)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Position {
    Any,
    WordInitial,
    WordMedial,
    WordFinal,
}

impl Position {
    fn code(self) -> &'static str {
        match self {
            Position::Any => "any",
            Position::WordInitial => "initial",
            Position::WordMedial => "medial",
            Position::WordFinal => "final",
        }
    }

    /// Position of letter `index` in a word of `len` letters. A one-letter
    /// word counts as initial.
    pub fn of(index: usize, len: usize) -> Position {
        if index == 0 {
            Position::WordInitial
        } else if index + 1 == len {
            Position::WordFinal
        } else {
            Position::WordMedial
        }
    }

    /// Conditions consulted, in order, when looking up a grapheme found at
    /// this position.
    fn lookup_chain(self, single_letter_word: bool) -> &'static [Position] {
        match self {
            Position::WordInitial if single_letter_word => {
                &[Position::WordInitial, Position::WordFinal, Position::Any]
            }
            Position::WordInitial => &[Position::WordInitial, Position::Any],
            Position::WordMedial => &[Position::WordMedial, Position::Any],
            Position::WordFinal => &[Position::WordFinal, Position::Any],
            Position::Any => &[Position::Any],
        }
    }
}

impl FromStr for Position {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "any" => Ok(Position::Any),
            "initial" => Ok(Position::WordInitial),
            "medial" => Ok(Position::WordMedial),
            "final" => Ok(Position::WordFinal),
            other => Err(format!("unknown position {other:?}")),
        }
    }
}

/// A target grapheme sequence; empty means deletion.
pub type Target = Vec<Grapheme>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingRule {
    pub source: Grapheme,
    pub targets: Vec<Target>,
    pub position: Position,
    pub priority: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InsertionAnchor {
    /// After a grapheme of this class.
    After(CharClass),
    /// Before the first grapheme of a word, when it has this class.
    BeforeInitial(CharClass),
}

/// An optional slot of extra material. The empty realization is always
/// available at cost zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertionRule {
    pub anchor: InsertionAnchor,
    pub position: Position,
    pub targets: Vec<Target>,
    pub priority: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordException {
    pub word: Vec<Grapheme>,
    pub targets: Vec<Target>,
    pub priority: i32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate rule for {grapheme:?} in {position:?} position")]
    Duplicate {
        line: usize,
        grapheme: String,
        position: Position,
    },
    #[error("no rule covers {} {script} grapheme(s): {}", graphemes.len(), graphemes.join(" "))]
    Uncovered { script: Script, graphemes: Vec<String> },
    #[error("no rule for {grapheme:?} in {position:?} position")]
    NoRule { grapheme: String, position: Position },
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

/// Word forms of one script with their corpus frequencies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    counts: HashMap<String, u64>,
    sorted: BTreeSet<String>,
}

impl Lexicon {
    pub fn from_counts<I, S>(counts: I) -> Lexicon
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut lex = Lexicon::default();
        for (word, n) in counts {
            let word: String = word.as_ref().nfc().collect();
            *lex.counts.entry(word.clone()).or_insert(0) += n;
            lex.sorted.insert(word);
        }
        lex
    }

    /// Parses `wordform<TAB>frequency` lines. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<Lexicon, RuleError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_start_matches('\u{feff}');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| RuleError::Lexicon {
                line: i + 1,
                message,
            };
            let (word, freq) = line
                .split_once('\t')
                .ok_or_else(|| err("expected wordform<TAB>frequency".into()))?;
            let freq: u64 = freq
                .trim()
                .parse()
                .map_err(|e| err(format!("bad frequency {freq:?}: {e}")))?;
            if word.is_empty() {
                return Err(err("empty word form".into()));
            }
            entries.push((word.to_owned(), freq));
        }
        Ok(Lexicon::from_counts(entries))
    }

    pub fn load(path: &Path) -> Result<Lexicon, RuleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RuleError::Io(format!("{}: {e}", path.display())))?;
        Lexicon::parse(&text)
    }

    pub fn frequency(&self, word: &str) -> Option<u64> {
        self.counts.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }

    /// Is `prefix` a prefix of some entry?
    pub fn has_prefix(&self, prefix: &str) -> bool {
        self.sorted
            .range::<str, _>((std::ops::Bound::Included(prefix), std::ops::Bound::Unbounded))
            .next()
            .is_some_and(|w| w.starts_with(prefix))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Entries in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.sorted.iter().map(|w| (w.as_str(), self.counts[w]))
    }

    /// Token-weighted occurrence count of every inventory grapheme.
    pub fn letter_frequencies(&self, script: Script) -> HashMap<Grapheme, u64> {
        let mut freq = HashMap::new();
        for (word, n) in self.iter() {
            if let Ok(gs) = script::segment(word, script) {
                for g in gs {
                    *freq.entry(g.to_lowercase()).or_insert(0) += n;
                }
            }
        }
        freq
    }

    pub fn to_tsv(&self) -> String {
        self.iter().map(|(w, n)| format!("{w}\t{n}\n")).collect()
    }
}

/// An immutable, validated set of rules for one direction.
#[derive(Debug, Clone)]
pub struct RuleSet {
    direction: Direction,
    rules: Vec<MappingRule>,
    insertions: Vec<InsertionRule>,
    exceptions: Vec<WordException>,
    index: HashMap<(Grapheme, Position), usize>,
    lexicon: Option<Lexicon>,
}

static BUILTIN: LazyLock<[RuleSet; 2]> = LazyLock::new(|| {
    [Direction::FarsiToTajik, Direction::TajikToFarsi].map(|d| {
        RuleSet::from_table(BUILTIN_RULES, d).expect("shipped rule table is valid")
    })
});

/// The shipped rules for `direction`, without a lexicon.
pub fn builtin_ruleset(direction: Direction) -> RuleSet {
    builtin_ref(direction).clone()
}

pub(crate) fn builtin_ref(direction: Direction) -> &'static RuleSet {
    match direction {
        Direction::FarsiToTajik => &BUILTIN[0],
        Direction::TajikToFarsi => &BUILTIN[1],
    }
}

fn decode_token(token: &str) -> Result<String, String> {
    if let Some(hex) = token.strip_prefix("U+") {
        let cp = u32::from_str_radix(hex, 16).map_err(|e| format!("bad escape {token:?}: {e}"))?;
        let c = char::from_u32(cp).ok_or_else(|| format!("bad codepoint {token:?}"))?;
        Ok(c.to_string())
    } else {
        Ok(token.nfc().collect())
    }
}

fn encode_token(graphemes: &[Grapheme]) -> String {
    if graphemes.is_empty() {
        return EMPTY_TARGET.to_owned();
    }
    graphemes
        .iter()
        .map(|g| {
            if g.class().is_letter() {
                g.as_str().to_owned()
            } else {
                g.as_str()
                    .chars()
                    .map(|c| format!("U+{:04X}", c as u32))
                    .collect()
            }
        })
        .collect()
}

fn parse_targets(field: &str, script: Script) -> Result<Vec<Target>, String> {
    let mut targets = Vec::new();
    for token in field.split('|') {
        let token = token.trim();
        let target = if token == EMPTY_TARGET {
            Vec::new()
        } else {
            let text = decode_token(token)?;
            if text.is_empty() {
                return Err("empty target token (use ∅)".into());
            }
            script::segment(&text, script).map_err(|e| e.to_string())?
        };
        if targets.contains(&target) {
            return Err(format!("duplicate target {token:?}"));
        }
        targets.push(target);
    }
    Ok(targets)
}

impl RuleSet {
    /// Parses the rules for `direction` out of a rule table; lines for the
    /// other direction are ignored.
    pub fn from_table(text: &str, direction: Direction) -> Result<RuleSet, RuleError> {
        let mut set = RuleSet {
            direction,
            rules: Vec::new(),
            insertions: Vec::new(),
            exceptions: Vec::new(),
            index: HashMap::new(),
            lexicon: None,
        };
        let src = direction.source();
        let tgt = direction.target();
        let mut seen_insertions = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim_start_matches('\u{feff}');
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| RuleError::Parse { line, message };
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 5 {
                return Err(parse_err(format!("expected 5 fields, found {}", fields.len())));
            }
            let dir: Direction = fields[0].parse().map_err(parse_err)?;
            if dir != direction {
                continue;
            }
            let position: Position = fields[2].parse().map_err(parse_err)?;
            let targets = parse_targets(fields[3], tgt).map_err(parse_err)?;
            let priority: i32 = fields[4]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad priority {:?}: {e}", fields[4])))?;
            let source = fields[1];

            if let Some(class) = source.strip_prefix('+') {
                let class: CharClass = class.parse().map_err(parse_err)?;
                let anchor = InsertionAnchor::After(class);
                Self::push_insertion(&mut set, &mut seen_insertions, anchor, position, targets, priority, line)?;
            } else if let Some(class) = source.strip_prefix('^') {
                let class: CharClass = class.parse().map_err(parse_err)?;
                if position != Position::WordInitial {
                    return Err(parse_err("^ insertions must use the initial position".into()));
                }
                let anchor = InsertionAnchor::BeforeInitial(class);
                Self::push_insertion(&mut set, &mut seen_insertions, anchor, position, targets, priority, line)?;
            } else if let Some(word) = source.strip_prefix('=') {
                let word = script::segment(&decode_token(word).map_err(parse_err)?, src)
                    .map_err(|e| parse_err(e.to_string()))?;
                if word.is_empty() || targets.is_empty() {
                    return Err(parse_err("empty word exception".into()));
                }
                if set.exceptions.iter().any(|e| e.word == word) {
                    return Err(RuleError::Duplicate {
                        line,
                        grapheme: source.to_owned(),
                        position,
                    });
                }
                set.exceptions.push(WordException {
                    word,
                    targets,
                    priority,
                });
            } else {
                let text = decode_token(source).map_err(parse_err)?;
                let source_g =
                    Grapheme::lookup(&text, src).map_err(|e| parse_err(e.to_string()))?;
                if set.index.contains_key(&(source_g, position)) {
                    return Err(RuleError::Duplicate {
                        line,
                        grapheme: text,
                        position,
                    });
                }
                set.index.insert((source_g, position), set.rules.len());
                set.rules.push(MappingRule {
                    source: source_g,
                    targets,
                    position,
                    priority,
                });
            }
        }
        set.check_coverage()?;
        Ok(set)
    }

    fn push_insertion(
        set: &mut RuleSet,
        seen: &mut HashSet<(InsertionAnchor, Position)>,
        anchor: InsertionAnchor,
        position: Position,
        targets: Vec<Target>,
        priority: i32,
        line: usize,
    ) -> Result<(), RuleError> {
        if targets.iter().any(Vec::is_empty) {
            return Err(RuleError::Parse {
                line,
                message: "insertion targets may not include ∅ (it is implicit)".into(),
            });
        }
        if !seen.insert((anchor, position)) {
            return Err(RuleError::Duplicate {
                line,
                grapheme: format!("{anchor:?}"),
                position,
            });
        }
        set.insertions.push(InsertionRule {
            anchor,
            position,
            targets,
            priority,
        });
        Ok(())
    }

    pub fn load(path: &Path, direction: Direction) -> Result<RuleSet, RuleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RuleError::Io(format!("{}: {e}", path.display())))?;
        RuleSet::from_table(&text, direction)
    }

    fn check_coverage(&self) -> Result<(), RuleError> {
        let covered: HashSet<Grapheme> = self.rules.iter().map(|r| r.source).collect();
        let missing: Vec<String> = script::graphemes(self.direction.source())
            .filter(|g| g.to_lowercase() == *g && !covered.contains(g))
            .map(|g| format!("{g:?}"))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(RuleError::Uncovered {
                script: self.direction.source(),
                graphemes: missing,
            })
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn rules(&self) -> &[MappingRule] {
        &self.rules
    }

    pub fn insertions(&self) -> &[InsertionRule] {
        &self.insertions
    }

    pub fn exceptions(&self) -> &[WordException] {
        &self.exceptions
    }

    pub fn lexicon(&self) -> Option<&Lexicon> {
        self.lexicon.as_ref()
    }

    /// The rule declared for exactly `(source, position)`, if any.
    pub fn rule(&self, source: Grapheme, position: Position) -> Option<&MappingRule> {
        self.index
            .get(&(source, position))
            .map(|&i| &self.rules[i])
    }

    /// The rule that applies to `source` found at `position`, falling back
    /// to the position-independent rule.
    pub fn lookup(
        &self,
        source: Grapheme,
        position: Position,
        single_letter_word: bool,
    ) -> Result<&MappingRule, RuleError> {
        position
            .lookup_chain(single_letter_word)
            .iter()
            .find_map(|&p| self.rule(source, p))
            .ok_or_else(|| RuleError::NoRule {
                grapheme: source.as_str().to_owned(),
                position,
            })
    }

    pub fn exception(&self, word: &[Grapheme]) -> Option<&WordException> {
        self.exceptions.iter().find(|e| e.word == word)
    }

    /// Insertion rules that may follow `anchor` found at `position`.
    pub fn insertions_after(
        &self,
        anchor: CharClass,
        position: Position,
    ) -> impl Iterator<Item = &InsertionRule> {
        self.insertions.iter().filter(move |r| {
            r.anchor == InsertionAnchor::After(anchor)
                && (r.position == position || r.position == Position::Any)
        })
    }

    pub fn insertions_before_initial(
        &self,
        first: CharClass,
    ) -> impl Iterator<Item = &InsertionRule> {
        self.insertions
            .iter()
            .filter(move |r| r.anchor == InsertionAnchor::BeforeInitial(first))
    }

    /// Attaches a target-script lexicon. Rules whose targets are all single
    /// letters of one class (the many-to-one consonant inverses) are
    /// re-ranked by how often each letter occurs in the lexicon; ties keep
    /// the table order.
    pub fn with_lexicon(mut self, lexicon: Lexicon) -> RuleSet {
        let freq = lexicon.letter_frequencies(self.direction.target());
        for rule in &mut self.rules {
            let single_class = rule.targets.iter().all(|t| t.len() == 1)
                && rule
                    .targets
                    .windows(2)
                    .all(|w| w[0][0].class() == w[1][0].class());
            if rule.targets.len() > 1 && single_class {
                rule.targets
                    .sort_by_key(|t| std::cmp::Reverse(freq.get(&t[0]).copied().unwrap_or(0)));
            }
        }
        self.lexicon = Some(lexicon);
        self
    }

    /// Serializes back to the table format.
    pub fn to_table(&self) -> String {
        let d = self.direction.code();
        let targets = |ts: &[Target]| {
            ts.iter()
                .map(|t| encode_token(t))
                .collect::<Vec<_>>()
                .join("|")
        };
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&format!(
                "{d}\t{}\t{}\t{}\t{}\n",
                encode_token(&[r.source]),
                r.position.code(),
                targets(&r.targets),
                r.priority
            ));
        }
        for e in &self.exceptions {
            out.push_str(&format!(
                "{d}\t={}\tany\t{}\t{}\n",
                encode_token(&e.word),
                targets(&e.targets),
                e.priority
            ));
        }
        for r in &self.insertions {
            let source = match r.anchor {
                InsertionAnchor::After(c) => format!("+{c:?}"),
                InsertionAnchor::BeforeInitial(c) => format!("^{c:?}"),
            };
            out.push_str(&format!(
                "{d}\t{source}\t{}\t{}\t{}\n",
                r.position.code(),
                targets(&r.targets),
                r.priority
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str, script: Script) -> Grapheme {
        Grapheme::lookup(s, script).unwrap()
    }

    fn texts(targets: &[Target]) -> Vec<String> {
        targets.iter().map(|t| script::join(t)).collect()
    }

    #[test]
    fn ze_inverse_lists_common_letter_first() {
        let rs = builtin_ruleset(Direction::TajikToFarsi);
        let rule = rs
            .lookup(g("з", Script::TajikCyrillic), Position::WordMedial, false)
            .unwrap();
        assert_eq!(texts(&rule.targets), ["ز", "ذ", "ض", "ظ"]);
    }

    #[test]
    fn gaf_is_single_target() {
        let rs = builtin_ruleset(Direction::FarsiToTajik);
        let rule = rs.rule(g("گ", Script::PersoArabic), Position::Any).unwrap();
        assert_eq!(texts(&rule.targets), ["г"]);
    }

    #[test]
    fn final_he_reaches_vowels() {
        let rs = builtin_ruleset(Direction::FarsiToTajik);
        let rule = rs
            .rule(g("ه", Script::PersoArabic), Position::WordFinal)
            .unwrap();
        let t = texts(&rule.targets);
        assert!(t.contains(&"а".to_string()));
        assert!(t.contains(&"и".to_string()));
    }

    #[test]
    fn frequent_inverses_outrank_rare_ones() {
        let rs = builtin_ruleset(Direction::TajikToFarsi);
        for (t, f) in [("з", "ز"), ("с", "س"), ("т", "ت"), ("ҳ", "ه")] {
            let rule = rs.rule(g(t, Script::TajikCyrillic), Position::Any).unwrap();
            assert_eq!(script::join(&rule.targets[0]), f);
        }
    }

    #[test]
    fn lexicon_reorders_many_to_one_targets() {
        let lex = Lexicon::from_counts([("حرف", 10), ("حال", 5), ("ده", 1)]);
        let rs = builtin_ruleset(Direction::TajikToFarsi).with_lexicon(lex);
        let rule = rs.rule(g("ҳ", Script::TajikCyrillic), Position::Any).unwrap();
        assert_eq!(texts(&rule.targets), ["ح", "ه"]);
        // vowel rules mix deletions and sequences and are left alone
        let rule = rs
            .rule(g("а", Script::TajikCyrillic), Position::WordMedial)
            .unwrap();
        assert_eq!(texts(&rule.targets), ["", "ا", "ه"]);
    }

    #[test]
    fn table_round_trips() {
        for d in [Direction::FarsiToTajik, Direction::TajikToFarsi] {
            let rs = builtin_ruleset(d);
            let again = RuleSet::from_table(&rs.to_table(), d).unwrap();
            assert_eq!(again.rules(), rs.rules());
            assert_eq!(again.insertions(), rs.insertions());
            assert_eq!(again.exceptions(), rs.exceptions());
        }
    }

    #[test]
    fn duplicate_rule_is_rejected() {
        let table = format!(
            "{BUILTIN_RULES}fa2tj\tب\tany\tп\t0\n"
        );
        let err = RuleSet::from_table(&table, Direction::FarsiToTajik).unwrap_err();
        assert!(matches!(err, RuleError::Duplicate { .. }), "{err}");
    }

    #[test]
    fn missing_coverage_is_an_error() {
        let table: String = BUILTIN_RULES
            .lines()
            .filter(|l| !l.starts_with("fa2tj\tگ\t"))
            .map(|l| format!("{l}\n"))
            .collect();
        let err = RuleSet::from_table(&table, Direction::FarsiToTajik).unwrap_err();
        match err {
            RuleError::Uncovered { graphemes, .. } => {
                assert_eq!(graphemes.len(), 1);
                assert!(graphemes[0].contains('گ'));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_lines_report_line_numbers() {
        let err = RuleSet::from_table("fa2tj\tب\tany\n", Direction::FarsiToTajik).unwrap_err();
        assert_eq!(
            err,
            RuleError::Parse {
                line: 1,
                message: "expected 5 fields, found 3".into()
            }
        );
        let err = RuleSet::from_table("# c\nfa2tj\tب\tsomewhere\tб\t0\n", Direction::FarsiToTajik)
            .unwrap_err();
        assert!(matches!(err, RuleError::Parse { line: 2, .. }));
        let err =
            RuleSet::from_table("fa2tj\tب\tany\tq\t0\n", Direction::FarsiToTajik).unwrap_err();
        assert!(matches!(err, RuleError::Parse { line: 1, .. }));
    }

    #[test]
    fn lexicon_parsing_and_prefixes() {
        let lex = Lexicon::parse("\u{feff}# c\nساعت\t12\nسطر\t3\n\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.frequency("ساعت"), Some(12));
        assert!(lex.has_prefix("سا"));
        assert!(lex.has_prefix(""));
        assert!(!lex.has_prefix("ستر"));
        assert!(matches!(
            Lexicon::parse("a\tb\n"),
            Err(RuleError::Lexicon { line: 1, .. })
        ));
        assert_eq!(Lexicon::parse(&lex.to_tsv()).unwrap(), lex);
    }

    #[test]
    fn single_letter_words_prefer_initial_rules() {
        let rs = builtin_ruleset(Direction::TajikToFarsi);
        let rule = rs
            .lookup(g("ӯ", Script::TajikCyrillic), Position::WordInitial, true)
            .unwrap();
        assert_eq!(script::join(&rule.targets[0]), "او");
    }
}
