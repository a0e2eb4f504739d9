//! Deterministic transliterators built on a [`RuleSet`].
//!
//! [`translit_one_to_one`] takes the first target of every rule and nothing
//! else. [`translit_lattice`] overgenerates: every rule target, optional
//! insertions, geminate handling and (Tajik to Perso-Arabic) the word with
//! its final izofat `-и` dropped, then rescores the candidates against the
//! rule set's lexicon.
//!
//! Known limitations: no izofat is ever inserted going into Tajik, the
//! standalone و always becomes the independent `ва` (never the enclitic
//! `-у`), and nothing is capitalized.

use std::cmp::Ordering;
use std::collections::HashMap;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::rules::{self, Direction, Lexicon, Position, RuleError, RuleSet, Target};
use crate::script::{self, CharClass, Grapheme, Script, ScriptError};

/// Added to the log frequency of a lexicon hit, so that every hit outranks
/// every miss.
pub const LEXICON_BONUS: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslitError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("lattice for {word:?} has {size} expansions, over the cap of {cap}")]
    LatticeOverflow { word: String, size: u64, cap: u64 },
    #[error("beam must be at least 1")]
    InvalidBeam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverflowPolicy {
    /// Fall back to slot-by-slot beam pruning.
    Prune,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    pub beam: usize,
    /// Largest lattice that is expanded exhaustively.
    pub cap: u64,
    /// Partial hypotheses kept per slot once the cap is exceeded.
    pub prune_width: usize,
    pub overflow: OverflowPolicy,
    /// Optional geminate doubling (into Tajik) or collapse (into
    /// Perso-Arabic).
    pub gemination: bool,
    /// Offer each Tajik word ending in `и` also without it.
    pub izofat_variant: bool,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            beam: 10,
            cap: 10_000,
            prune_width: 512,
            overflow: OverflowPolicy::Prune,
            gemination: true,
            izofat_variant: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotCandidate {
    pub text: String,
    pub cost: i32,
}

/// Candidates for one word, one slot per source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateLattice {
    pub slots: Vec<Vec<SlotCandidate>>,
    /// Cost added to every expansion (used by the izofat-dropped variant).
    pub base_cost: i32,
}

impl CandidateLattice {
    /// Number of expansions: the product of the slot sizes, saturating.
    pub fn expansion_count(&self) -> u64 {
        self.slots
            .iter()
            .fold(1u64, |acc, s| acc.saturating_mul(s.len() as u64))
    }

    /// Is `text` one of the expansions? Runs without enumerating them.
    pub fn contains(&self, text: &str) -> bool {
        let mut reachable = vec![0usize];
        for slot in &self.slots {
            let mut next: Vec<usize> = reachable
                .iter()
                .flat_map(|&off| {
                    slot.iter()
                        .filter(move |c| text[off..].starts_with(&c.text))
                        .map(move |c| off + c.text.len())
                })
                .collect();
            next.sort_unstable();
            next.dedup();
            if next.is_empty() {
                return false;
            }
            reachable = next;
        }
        reachable.contains(&text.len())
    }

    /// Every expansion with its summed cost, duplicates included, in
    /// slot order (first candidates first).
    pub fn expand(&self) -> Vec<(String, i32)> {
        let mut out = vec![(String::new(), self.base_cost)];
        for slot in &self.slots {
            out = out
                .iter()
                .flat_map(|(prefix, cost)| {
                    slot.iter()
                        .map(move |c| (format!("{prefix}{}", c.text), cost + c.cost))
                })
                .collect();
        }
        out
    }

    /// The expansion made of every slot's first candidate.
    pub fn first_path(&self) -> String {
        self.slots.iter().filter_map(|s| s.first()).map(|c| c.text.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslitResult {
    pub best: String,
    /// Ranked by score, best first; `alternatives[0].0 == best`.
    pub alternatives: Vec<(String, f64)>,
    /// Lattice expansion count of each input word before pruning.
    pub per_word_candidate_counts: Vec<u64>,
}

/// A source grapheme together with where it sits in its word.
#[derive(Debug, Clone, Copy)]
struct Located {
    g: Grapheme,
    position: Position,
    single: bool,
    /// Index among the letters of its ZWNJ-delimited run, if a letter.
    letter: Option<usize>,
}

/// Position is counted over letters only; a ZWNJ ends a word for
/// positional purposes, and diacritics and controls are position-free.
fn locate(word: &[Grapheme]) -> Vec<Located> {
    let mut out = Vec::with_capacity(word.len());
    for run in word.split_inclusive(|g| g.class() == CharClass::Control) {
        let n = run.iter().filter(|g| g.class().is_letter()).count();
        let mut k = 0;
        for &g in run {
            if g.class().is_letter() {
                out.push(Located {
                    g,
                    position: Position::of(k, n),
                    single: n == 1,
                    letter: Some(k),
                });
                k += 1;
            } else {
                out.push(Located {
                    g,
                    position: Position::Any,
                    single: false,
                    letter: None,
                });
            }
        }
    }
    out
}

fn source_words(text: &str, direction: Direction) -> Result<Vec<Vec<Grapheme>>, ScriptError> {
    let mut words = script::segment_words(text, direction.source())?;
    if direction.source() == Script::TajikCyrillic {
        for w in &mut words {
            for g in w.iter_mut() {
                *g = g.to_lowercase();
            }
        }
    }
    Ok(words)
}

fn target_text(t: &Target) -> String {
    script::join(t)
}

/// Naive transliteration: the first target of each grapheme's rule.
pub fn translit_one_to_one(text: &str, rules: &RuleSet) -> Result<String, TranslitError> {
    let mut words = Vec::new();
    for word in source_words(text, rules.direction())? {
        if let Some(exc) = rules.exception(&word) {
            words.push(target_text(&exc.targets[0]));
            continue;
        }
        let mut out = String::new();
        for loc in locate(&word) {
            let rule = rules.lookup(loc.g, loc.position, loc.single)?;
            out.push_str(&target_text(&rule.targets[0]));
        }
        words.push(out);
    }
    Ok(words.join(" "))
}

/// [`translit_one_to_one`] with the shipped rules.
pub fn translit_one_to_one_builtin(
    text: &str,
    direction: Direction,
) -> Result<String, TranslitError> {
    translit_one_to_one(text, rules::builtin_ref(direction))
}

fn slot_from_targets(targets: &[Target], priority: i32) -> Vec<SlotCandidate> {
    targets
        .iter()
        .enumerate()
        .map(|(i, t)| SlotCandidate {
            text: target_text(t),
            cost: priority + i as i32,
        })
        .collect()
}

fn insertion_slot(targets: &[Target], priority: i32) -> Vec<SlotCandidate> {
    let mut slot = vec![SlotCandidate {
        text: String::new(),
        cost: 0,
    }];
    slot.extend(slot_from_targets(targets, priority));
    slot
}

fn lattice_for(
    word: &[Grapheme],
    rules: &RuleSet,
    cfg: &LatticeConfig,
) -> Result<CandidateLattice, TranslitError> {
    let direction = rules.direction();
    let located = locate(word);
    let mut slots = Vec::new();
    if let Some(first) = located.iter().find(|l| l.letter.is_some()) {
        for ins in rules.insertions_before_initial(first.g.class()) {
            slots.push(insertion_slot(&ins.targets, ins.priority));
        }
    }
    let mut prev_letter: Option<Grapheme> = None;
    for loc in &located {
        let rule = rules.lookup(loc.g, loc.position, loc.single)?;
        let mut slot = slot_from_targets(&rule.targets, rule.priority);
        let geminate_class = matches!(loc.g.class(), CharClass::Consonant | CharClass::GlottalSign);
        if cfg.gemination
            && direction == Direction::TajikToFarsi
            && geminate_class
            && loc.letter.is_some_and(|k| k > 0)
            && prev_letter == Some(loc.g)
            && slot.iter().all(|c| !c.text.is_empty())
        {
            slot.push(SlotCandidate {
                text: String::new(),
                cost: rule.priority + rule.targets.len() as i32,
            });
        }
        slots.push(slot);
        if loc.letter.is_none() {
            if loc.g.class() == CharClass::Control {
                prev_letter = None;
            }
            continue;
        }
        prev_letter = Some(loc.g);
        if cfg.gemination
            && direction == Direction::FarsiToTajik
            && loc.g.class() == CharClass::Consonant
            && loc.position != Position::WordFinal
            && !loc.single
            && rule.targets.len() == 1
            && rule.targets[0].len() == 1
        {
            slots.push(insertion_slot(&rule.targets, rule.priority + 2));
        }
        if loc.single {
            continue;
        }
        for ins in rules.insertions_after(loc.g.class(), loc.position) {
            slots.push(insertion_slot(&ins.targets, ins.priority));
        }
    }
    Ok(CandidateLattice {
        slots,
        base_cost: 0,
    })
}

/// Candidate lattices for one source word: the word itself and, where
/// applicable, its izofat-dropped variant.
pub fn word_lattices(
    word: &str,
    rules: &RuleSet,
    cfg: &LatticeConfig,
) -> Result<Vec<CandidateLattice>, TranslitError> {
    let words = source_words(word, rules.direction())?;
    let mut out = Vec::new();
    for w in &words {
        out.extend(lattices_for_word(w, rules, cfg)?);
    }
    Ok(out)
}

/// Whether `target` is among the candidate spellings of the source `word`.
pub fn generates(word: &str, target: &str, rules: &RuleSet, cfg: &LatticeConfig) -> Result<bool, TranslitError> {
    let target: String = target.nfc().collect();
    Ok(word_lattices(word, rules, cfg)?.iter().any(|l| l.contains(&target)))
}

fn lattices_for_word(
    word: &[Grapheme],
    rules: &RuleSet,
    cfg: &LatticeConfig,
) -> Result<Vec<CandidateLattice>, TranslitError> {
    if let Some(exc) = rules.exception(word) {
        return Ok(vec![CandidateLattice {
            slots: vec![slot_from_targets(&exc.targets, exc.priority)],
            base_cost: 0,
        }]);
    }
    let mut out = vec![lattice_for(word, rules, cfg)?];
    let letters = word.iter().filter(|g| g.class().is_letter()).count();
    if cfg.izofat_variant
        && rules.direction() == Direction::TajikToFarsi
        && letters >= 3
        && word.last().is_some_and(|g| g.as_str() == "и")
    {
        let mut variant = lattice_for(&word[..word.len() - 1], rules, cfg)?;
        variant.base_cost = 1;
        out.push(variant);
    }
    if rules.direction() == Direction::TajikToFarsi {
        if let Some(split) = plural_split(word, rules, cfg)? {
            out.push(split);
        }
    }
    Ok(out)
}

/// Plural `-ҳо`/`-ҳои` written as a ZWNJ-separated `ها`/`های` after a stem
/// that is spelled as a word of its own.
fn plural_split(
    word: &[Grapheme],
    rules: &RuleSet,
    cfg: &LatticeConfig,
) -> Result<Option<CandidateLattice>, TranslitError> {
    let text = script::join(word);
    for (suffix, farsi) in [("ҳои", "های"), ("ҳо", "ها")] {
        let Some(stem) = text.strip_suffix(suffix) else {
            continue;
        };
        let n = word.len() - suffix.chars().count();
        if stem.chars().filter(|c| c.is_alphabetic()).count() < 2 || word[..n].last().is_some_and(|g| !g.class().is_letter()) {
            return Ok(None);
        }
        let mut lattice = lattice_for(&word[..n], rules, cfg)?;
        lattice.slots.push(vec![SlotCandidate {
            text: format!("{}{farsi}", script::ZWNJ),
            cost: 0,
        }]);
        return Ok(Some(lattice));
    }
    Ok(None)
}

fn affixes(script: Script) -> (&'static [&'static str], &'static [&'static str]) {
    match script {
        Script::PersoArabic => (&["نمی", "می"], &["های", "ها", "را"]),
        Script::TajikCyrillic => (&["наме", "ме"], &["ҳои", "ҳо", "ро"]),
    }
}

/// Frequency of the best stem left after stripping known affixes.
fn morphological_match(word: &str, lexicon: &Lexicon, script: Script) -> Option<u64> {
    let (prefixes, suffixes) = affixes(script);
    let with_prefix = std::iter::once(word).chain(prefixes.iter().filter_map(|p| word.strip_prefix(p)));
    let mut best = None;
    for w in with_prefix {
        let stems = std::iter::once(w).chain(suffixes.iter().filter_map(|s| w.strip_suffix(s)));
        for stem in stems {
            if stem.is_empty() || stem.len() == word.len() {
                continue;
            }
            if let Some(f) = lexicon.frequency(stem) {
                best = best.max(Some(f));
            }
        }
    }
    best
}

fn score(text: &str, cost: i32, lexicon: Option<&Lexicon>, script: Script) -> f64 {
    if let Some(lex) = lexicon {
        let hit = lex
            .frequency(text)
            .or_else(|| morphological_match(text, lex, script));
        if let Some(f) = hit {
            return LEXICON_BONUS + (f.max(1) as f64).ln();
        }
    }
    -f64::from(cost)
}

fn rank(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(&b.0))
}

/// Lowest-cost realization of each distinct string.
fn dedupe(expansions: impl IntoIterator<Item = (String, i32)>) -> HashMap<String, i32> {
    let mut best: HashMap<String, i32> = HashMap::new();
    for (s, c) in expansions {
        best.entry(s).and_modify(|old| *old = (*old).min(c)).or_insert(c);
    }
    best
}

fn pruned_expansions(
    lattice: &CandidateLattice,
    lexicon: Option<&Lexicon>,
    width: usize,
) -> Vec<(String, i32)> {
    let mut hyps = vec![(String::new(), lattice.base_cost)];
    for slot in &lattice.slots {
        let grown = dedupe(hyps.iter().flat_map(|(p, c)| {
            slot.iter().map(move |s| (format!("{p}{}", s.text), c + s.cost))
        }));
        let mut grown: Vec<(String, i32, bool)> = grown
            .into_iter()
            .map(|(s, c)| {
                let live = lexicon.is_some_and(|l| l.has_prefix(&s));
                (s, c, live)
            })
            .collect();
        grown.sort_by(|a, b| b.2.cmp(&a.2).then(a.1.cmp(&b.1)).then_with(|| a.0.cmp(&b.0)));
        grown.truncate(width.max(1));
        hyps = grown.into_iter().map(|(s, c, _)| (s, c)).collect();
    }
    hyps
}

fn rank_word(
    word: &[Grapheme],
    rules: &RuleSet,
    cfg: &LatticeConfig,
) -> Result<(Vec<(String, f64)>, u64), TranslitError> {
    let lattices = lattices_for_word(word, rules, cfg)?;
    let count = lattices
        .iter()
        .fold(0u64, |acc, l| acc.saturating_add(l.expansion_count()));
    let lexicon = rules.lexicon();
    let script = rules.direction().target();
    let mut expansions = Vec::new();
    for lattice in &lattices {
        if lattice.expansion_count() <= cfg.cap {
            expansions.extend(lattice.expand());
        } else {
            match cfg.overflow {
                OverflowPolicy::Error => {
                    return Err(TranslitError::LatticeOverflow {
                        word: script::join(word),
                        size: lattice.expansion_count(),
                        cap: cfg.cap,
                    })
                }
                OverflowPolicy::Prune => {
                    expansions.extend(pruned_expansions(lattice, lexicon, cfg.prune_width))
                }
            }
        }
    }
    let mut scored: Vec<(String, f64)> = dedupe(expansions)
        .into_iter()
        .map(|(s, c)| {
            let sc = score(&s, c, lexicon, script);
            (s, sc)
        })
        .collect();
    scored.sort_by(rank);
    scored.truncate(cfg.beam);
    Ok((scored, count))
}

/// Overgenerate-and-rescore transliteration of a normalized text.
pub fn translit_lattice(
    text: &str,
    rules: &RuleSet,
    cfg: &LatticeConfig,
) -> Result<TranslitResult, TranslitError> {
    if cfg.beam == 0 {
        return Err(TranslitError::InvalidBeam);
    }
    let mut combined: Vec<(String, f64)> = vec![(String::new(), 0.0)];
    let mut counts = Vec::new();
    for (i, word) in source_words(text, rules.direction())?.iter().enumerate() {
        let (ranked, count) = rank_word(word, rules, cfg)?;
        counts.push(count);
        let sep = if i == 0 { "" } else { " " };
        let mut next: Vec<(String, f64)> = combined
            .iter()
            .flat_map(|(p, s)| {
                ranked
                    .iter()
                    .map(move |(w, ws)| (format!("{p}{sep}{w}"), s + ws))
            })
            .collect();
        next.sort_by(rank);
        next.truncate(cfg.beam);
        combined = next;
    }
    Ok(TranslitResult {
        best: combined[0].0.clone(),
        alternatives: combined,
        per_word_candidate_counts: counts,
    })
}

/// Mean number of candidates per word over a set of results, or `None` if
/// they contain no words.
pub fn avg_alternatives(results: &[TranslitResult]) -> Option<f64> {
    let counts: Vec<u64> = results
        .iter()
        .flat_map(|r| r.per_word_candidate_counts.iter().copied())
        .collect();
    if counts.is_empty() {
        return None;
    }
    Some(counts.iter().map(|&c| c as f64).sum::<f64>() / counts.len() as f64)
}
