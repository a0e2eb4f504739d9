//! Transliteration evaluation: chrF++, sequence accuracy (exact and within
//! one or two edits), Levenshtein statistics and per-letter-class F1 from
//! an alignment confusion matrix.
//!
//! All functions take `(hypothesis, reference)` pairs. Distances are counted
//! over extended grapheme clusters, with ZWNJ/ZWJ as units of their own.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::script::{self, CharClass, Script, ZWNJ};

const ZWJ: char = '\u{200D}';

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no pairs to evaluate")]
    Empty,
    #[error("hypothesis and reference counts differ ({hyp} vs {reference})")]
    LengthMismatch { hyp: usize, reference: usize },
}

/// Splits NFC-composed `text` into edit units: extended grapheme clusters,
/// except that ZWNJ and ZWJ always stand alone.
pub fn units(text: &str) -> Vec<String> {
    let text: String = text.nfc().collect();
    let mut out = Vec::new();
    for g in text.graphemes(true) {
        if !g.contains([ZWNJ, ZWJ]) {
            out.push(g.to_owned());
            continue;
        }
        let mut cur = String::new();
        for c in g.chars() {
            if c == ZWNJ || c == ZWJ {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            } else {
                cur.push(c);
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

/// Removes all whitespace.
pub fn strip_spaces(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Edit distance with unit-cost insertion, deletion and substitution.
pub fn levenshtein_units<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.len() < b.len() {
        return levenshtein_units(b, a);
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = diag + usize::from(x != y);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

/// Levenshtein distance over [`units`].
pub fn levenshtein(a: &str, b: &str) -> usize {
    levenshtein_units(&units(a), &units(b))
}

fn check<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<(), MetricsError> {
    if pairs.is_empty() {
        Err(MetricsError::Empty)
    } else {
        Ok(())
    }
}

/// Per-pair distance between the space-stripped sides, with the longer
/// side's length in units.
fn stripped_distance(hyp: &str, reference: &str) -> (usize, usize) {
    let h = units(&strip_spaces(hyp));
    let r = units(&strip_spaces(reference));
    (levenshtein_units(&h, &r), h.len().max(r.len()))
}

/// Fraction of pairs whose sides are identical once spaces are removed.
pub fn sequence_accuracy<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<f64, MetricsError> {
    check(pairs)?;
    let hits = pairs
        .iter()
        .filter(|(h, r)| strip_spaces(h.as_ref()) == strip_spaces(r.as_ref()))
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Fraction of space-stripped pairs within `k` edits.
pub fn relaxed_sequence_accuracy<S: AsRef<str>>(pairs: &[(S, S)], k: usize) -> Result<f64, MetricsError> {
    check(pairs)?;
    let hits = pairs
        .iter()
        .filter(|(h, r)| stripped_distance(h.as_ref(), r.as_ref()).0 <= k)
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Mean space-stripped distance and mean per-pair distance ratio (distance
/// over the longer side; two empty sides give 0).
pub fn ld_stats<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<(f64, f64), MetricsError> {
    check(pairs)?;
    let (mut total, mut ratio) = (0.0, 0.0);
    for (h, r) in pairs {
        let (d, len) = stripped_distance(h.as_ref(), r.as_ref());
        total += d as f64;
        if len > 0 {
            ratio += d as f64 / len as f64;
        }
    }
    let n = pairs.len() as f64;
    Ok((total / n, ratio / n))
}

// ---------------------------------------------------------------------------
// chrF++

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfConfig {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        ChrfConfig {
            char_order: 6,
            word_order: 2,
            beta: 2.0,
        }
    }
}

/// Matched, hypothesis and reference n-gram totals for one order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct OrderCounts {
    matched: usize,
    hyp: usize,
    reference: usize,
}

fn ngram_counts<T: std::hash::Hash + Eq + Clone>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if n > 0 && items.len() >= n {
        for w in items.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

fn order_counts<T: std::hash::Hash + Eq + Clone>(hyp: &[T], reference: &[T], n: usize) -> OrderCounts {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matched = h
        .iter()
        .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    OrderCounts {
        matched,
        hyp: h.values().sum(),
        reference: r.values().sum(),
    }
}

fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    if p + r == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / (b2 * p + r)
    }
}

/// Corpus-level chrF++ on a 0-100 scale with the default orders.
pub fn chrf_pp<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<f64, MetricsError> {
    chrf_pp_with(pairs, &ChrfConfig::default())
}

/// Character n-grams run over the whitespace-free text (and so cross word
/// boundaries); word n-grams over whitespace tokens. Counts are summed over
/// the corpus per order, each order scored with F-beta, and the orders that
/// have any reference n-grams are averaged. When no order has reference
/// n-grams the score is 100 for all-empty hypotheses and 0 otherwise.
pub fn chrf_pp_with<S: AsRef<str>>(pairs: &[(S, S)], cfg: &ChrfConfig) -> Result<f64, MetricsError> {
    check(pairs)?;
    let orders = cfg.char_order + cfg.word_order;
    let mut totals = vec![OrderCounts::default(); orders];
    let mut any_hyp = false;
    for (h, r) in pairs {
        let (h, r) = (h.as_ref(), r.as_ref());
        any_hyp |= !strip_spaces(h).is_empty();
        let hc = units(&strip_spaces(h));
        let rc = units(&strip_spaces(r));
        for n in 1..=cfg.char_order {
            let c = order_counts(&hc, &rc, n);
            let t = &mut totals[n - 1];
            t.matched += c.matched;
            t.hyp += c.hyp;
            t.reference += c.reference;
        }
        let hw: Vec<String> = h.split_whitespace().map(|w| w.nfc().collect()).collect();
        let rw: Vec<String> = r.split_whitespace().map(|w| w.nfc().collect()).collect();
        for n in 1..=cfg.word_order {
            let c = order_counts(&hw, &rw, n);
            let t = &mut totals[cfg.char_order + n - 1];
            t.matched += c.matched;
            t.hyp += c.hyp;
            t.reference += c.reference;
        }
    }
    let scored: Vec<f64> = totals
        .iter()
        .filter(|t| t.reference > 0)
        .map(|t| {
            let p = if t.hyp == 0 { 0.0 } else { t.matched as f64 / t.hyp as f64 };
            let r = t.matched as f64 / t.reference as f64;
            f_beta(p, r, cfg.beta)
        })
        .collect();
    if scored.is_empty() {
        return Ok(if any_hyp { 0.0 } else { 100.0 });
    }
    Ok(100.0 * scored.iter().sum::<f64>() / scored.len() as f64)
}

// ---------------------------------------------------------------------------
// character-class F1

/// Placeholder for the missing side of an insertion or deletion.
pub const GAP: &str = "∅";

/// One aligned step: `(reference unit, hypothesis unit)`, `None` for a gap.
pub type AlignedPair = (Option<String>, Option<String>);

/// Minimum-edit alignment of two unit sequences. When several alignments
/// are optimal the backtrace prefers a substitution, then a deletion
/// (reference unit against a gap), then an insertion.
pub fn align(reference: &[String], hyp: &[String]) -> Vec<AlignedPair> {
    let (n, m) = (reference.len(), hyp.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, v) in d[0].iter_mut().enumerate() {
        *v = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(reference[i - 1] != hyp[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut out = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + usize::from(reference[i - 1] != hyp[j - 1]) {
            out.push((Some(reference[i - 1].clone()), Some(hyp[j - 1].clone())));
            i -= 1;
            j -= 1;
        } else if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            out.push((Some(reference[i - 1].clone()), None));
            i -= 1;
        } else {
            out.push((None, Some(hyp[j - 1].clone())));
            j -= 1;
        }
    }
    out.reverse();
    out
}

/// Counts of `(reference, hypothesis)` unit pairs; gaps are `None`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: BTreeMap<(Option<String>, Option<String>), usize>,
}

impl ConfusionMatrix {
    pub fn add(&mut self, reference: Option<&str>, hyp: Option<&str>) {
        *self
            .counts
            .entry((reference.map(str::to_owned), hyp.map(str::to_owned)))
            .or_insert(0) += 1;
    }

    /// Aligns a space-stripped pair and adds every step.
    pub fn add_pair(&mut self, hyp: &str, reference: &str) {
        let r = units(&strip_spaces(reference));
        let h = units(&strip_spaces(hyp));
        for (a, b) in align(&r, &h) {
            *self.counts.entry((a, b)).or_insert(0) += 1;
        }
    }

    pub fn get(&self, reference: Option<&str>, hyp: Option<&str>) -> usize {
        self.counts
            .get(&(reference.map(str::to_owned), hyp.map(str::to_owned)))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Option<&str>, Option<&str>, usize)> {
        self.counts
            .iter()
            .map(|((r, h), &n)| (r.as_deref(), h.as_deref(), n))
    }

    /// Per-unit (TP, FP, FN, reference support). The gap is keyed `None`.
    fn class_counts(&self) -> BTreeMap<Option<String>, [usize; 4]> {
        let mut out: BTreeMap<Option<String>, [usize; 4]> = BTreeMap::new();
        for ((r, h), &n) in &self.counts {
            if r == h {
                let e = out.entry(r.clone()).or_default();
                e[0] += n;
                e[3] += n;
            } else {
                out.entry(h.clone()).or_default()[1] += n;
                let e = out.entry(r.clone()).or_default();
                e[2] += n;
                e[3] += n;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    #[serde(rename = "macro")]
    pub macro_f1: f64,
    #[serde(rename = "micro")]
    pub micro_f1: f64,
    #[serde(rename = "weighted")]
    pub weighted_f1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct F1Blocks {
    pub consonants: F1Scores,
    pub vowels: F1Scores,
    pub all: F1Scores,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassSubset {
    Consonants,
    Vowels,
    All,
}

fn unit_class(unit: &str, script: Script) -> Option<CharClass> {
    script::classify(unit, script).ok().or_else(|| {
        let first = unit.chars().next()?;
        script::is_inventory_char(first, script).map(|g| g.class())
    })
}

impl ClassSubset {
    /// Whether a unit belongs to the subset. Perso-Arabic و and ی count as
    /// both consonants and vowels; Tajik letters fall into exactly one.
    pub fn contains(self, unit: &str, script: Script) -> bool {
        if self == ClassSubset::All {
            return true;
        }
        let Some(class) = unit_class(unit, script) else {
            return false;
        };
        match (self, class) {
            (_, CharClass::VowelOrConsonant) => script == Script::PersoArabic,
            (ClassSubset::Consonants, CharClass::Consonant) => true,
            (ClassSubset::Vowels, CharClass::Vowel) => true,
            _ => false,
        }
    }
}

/// F1 scores of the units in `subset`. Macro and weighted averages run over
/// units with reference support; the gap takes part only in the micro
/// score of the `All` subset. A subset with no reference support scores 1
/// when nothing was predicted into it either, otherwise 0.
pub fn f1_scores(matrix: &ConfusionMatrix, script: Script, subset: ClassSubset) -> F1Scores {
    let counts = matrix.class_counts();
    let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
    let mut per_class = Vec::new();
    for (unit, [t, p, n, support]) in &counts {
        let member = match unit {
            Some(u) => subset.contains(u, script),
            None => subset == ClassSubset::All,
        };
        if !member {
            continue;
        }
        tp += t;
        fp += p;
        fnn += n;
        if unit.is_some() && *support > 0 {
            let f1 = 2.0 * *t as f64 / (2 * t + p + n) as f64;
            per_class.push((f1, *support));
        }
    }
    if per_class.is_empty() {
        let v = if tp + fp + fnn == 0 { 1.0 } else { 0.0 };
        return F1Scores {
            macro_f1: v,
            micro_f1: v,
            weighted_f1: v,
        };
    }
    let macro_f1 = per_class.iter().map(|(f, _)| f).sum::<f64>() / per_class.len() as f64;
    let support: usize = per_class.iter().map(|(_, s)| s).sum();
    let weighted_f1 = per_class.iter().map(|(f, s)| f * *s as f64).sum::<f64>() / support as f64;
    let micro_f1 = if tp + fp + fnn == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fnn) as f64
    };
    F1Scores {
        macro_f1,
        micro_f1,
        weighted_f1,
    }
}

/// Builds the confusion matrix over all pairs and scores the three subsets.
pub fn char_class_f1<S: AsRef<str>>(pairs: &[(S, S)], script: Script) -> Result<F1Blocks, MetricsError> {
    check(pairs)?;
    let mut m = ConfusionMatrix::default();
    for (h, r) in pairs {
        m.add_pair(h.as_ref(), r.as_ref());
    }
    Ok(F1Blocks {
        consonants: f1_scores(&m, script, ClassSubset::Consonants),
        vowels: f1_scores(&m, script, ClassSubset::Vowels),
        all: f1_scores(&m, script, ClassSubset::All),
    })
}

// ---------------------------------------------------------------------------
// report

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Delete U+200C from both sides before scoring.
    pub strip_zwnj: bool,
    pub chrf: ChrfConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub chrf_pp: f64,
    pub seq_acc: f64,
    pub rsa1: f64,
    pub rsa2: f64,
    pub avg_ld: f64,
    pub ld_ratio: f64,
    pub f1_blocks: F1Blocks,
    pub n_pairs: usize,
}

fn prepare<S: AsRef<str>>(pairs: &[(S, S)], cfg: &EvalConfig) -> Vec<(String, String)> {
    let fix = |s: &str| -> String {
        let s: String = s.nfc().collect();
        if cfg.strip_zwnj {
            s.chars().filter(|&c| c != ZWNJ).collect()
        } else {
            s
        }
    };
    pairs
        .iter()
        .map(|(h, r)| (fix(h.as_ref()), fix(r.as_ref())))
        .collect()
}

/// Computes every metric; `script` is the script of both sides.
pub fn evaluate<S: AsRef<str>>(pairs: &[(S, S)], script: Script, cfg: &EvalConfig) -> Result<EvalReport, MetricsError> {
    check(pairs)?;
    let pairs = prepare(pairs, cfg);
    let (avg_ld, ld_ratio) = ld_stats(&pairs)?;
    Ok(EvalReport {
        chrf_pp: chrf_pp_with(&pairs, &cfg.chrf)?,
        seq_acc: sequence_accuracy(&pairs)?,
        rsa1: relaxed_sequence_accuracy(&pairs, 1)?,
        rsa2: relaxed_sequence_accuracy(&pairs, 2)?,
        avg_ld,
        ld_ratio,
        f1_blocks: char_class_f1(&pairs, script)?,
        n_pairs: pairs.len(),
    })
}

/// Zips hypothesis and reference line lists.
pub fn zip_lines<'a>(hyp: &[&'a str], reference: &[&'a str]) -> Result<Vec<(&'a str, &'a str)>, MetricsError> {
    if hyp.len() != reference.len() {
        return Err(MetricsError::LengthMismatch {
            hyp: hyp.len(),
            reference: reference.len(),
        });
    }
    Ok(hyp.iter().copied().zip(reference.iter().copied()).collect())
}

/// `index<TAB>distance<TAB>ratio<TAB>hypothesis<TAB>reference` per pair,
/// after the same preprocessing as [`evaluate`].
pub fn per_pair_tsv<S: AsRef<str>>(pairs: &[(S, S)], cfg: &EvalConfig) -> String {
    let mut out = String::from("index\tdistance\tratio\thypothesis\treference\n");
    for (i, (h, r)) in prepare(pairs, cfg).iter().enumerate() {
        let (d, len) = stripped_distance(h, r);
        let ratio = if len == 0 { 0.0 } else { d as f64 / len as f64 };
        out.push_str(&format!("{i}\t{d}\t{ratio:.6}\t{h}\t{r}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_split_zwnj_and_keep_accents() {
        assert_eq!(units("а\u{301}б"), ["а\u{301}", "б"]);
        assert_eq!(units("ه\u{200C}ها"), ["ه", "\u{200C}", "ه", "ا"]);
        assert_eq!(units(""), Vec::<String>::new());
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein("китоб", "китоб"), 0);
        assert_eq!(levenshtein("", "ӯро"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("а\u{301}", "а"), 1);
    }

    #[test]
    fn accuracy_examples() {
        let pairs = [("ман рафтам", "манрафтам"), ("аб", "ав")];
        assert_eq!(sequence_accuracy(&pairs).unwrap(), 0.5);
        assert_eq!(relaxed_sequence_accuracy(&pairs, 1).unwrap(), 1.0);
        let pairs = [("абв", "агд")];
        assert_eq!(relaxed_sequence_accuracy(&pairs, 1).unwrap(), 0.0);
        assert_eq!(relaxed_sequence_accuracy(&pairs, 2).unwrap(), 1.0);
        let empty: [(&str, &str); 0] = [];
        assert_eq!(sequence_accuracy(&empty), Err(MetricsError::Empty));
    }

    #[test]
    fn ld_stats_example() {
        let (avg, ratio) = ld_stats(&[("ab", "ab"), ("ab", "cd")]).unwrap();
        assert_eq!(avg, 1.0);
        assert_eq!(ratio, 0.5);
        assert_eq!(ld_stats(&[("", "")]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn chrf_extremes() {
        assert_eq!(chrf_pp(&[("ман рафтам", "ман рафтам")]).unwrap(), 100.0);
        assert_eq!(chrf_pp(&[("abc", "xyz")]).unwrap(), 0.0);
        assert_eq!(chrf_pp(&[("", "")]).unwrap(), 100.0);
        assert_eq!(chrf_pp(&[("a", "")]).unwrap(), 0.0);
        assert_eq!(chrf_pp(&[("", "a")]).unwrap(), 0.0);
    }

    #[test]
    fn f1_hand_example() {
        let b = char_class_f1(&[("ав", "аб")], Script::TajikCyrillic).unwrap();
        assert_eq!(b.all.macro_f1, 0.5);
        // micro: TP 1, FP 1, FN 1
        assert_eq!(b.all.micro_f1, 0.5);
        assert_eq!(b.vowels.macro_f1, 1.0);
        assert_eq!(b.consonants.macro_f1, 0.0);
    }

    #[test]
    fn f1_perfect() {
        let b = char_class_f1(&[("китоб", "китоб"), ("дарё", "дарё")], Script::TajikCyrillic).unwrap();
        for s in [b.consonants, b.vowels, b.all] {
            assert_eq!(s, F1Scores { macro_f1: 1.0, micro_f1: 1.0, weighted_f1: 1.0 });
        }
    }

    #[test]
    fn alignment_prefers_substitution() {
        let r = units("аб");
        let h = units("ба");
        let a = align(&r, &h);
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|(x, y)| x.is_some() && y.is_some()));
        let a = align(&units("аб"), &units("б"));
        assert_eq!(a, [(Some("а".into()), None), (Some("б".into()), Some("б".into()))]);
    }

    #[test]
    fn zwnj_switch() {
        let pairs = [("خانه\u{200C}ها", "خانهها")];
        let with = evaluate(&pairs, Script::PersoArabic, &EvalConfig::default()).unwrap();
        assert_eq!(with.seq_acc, 0.0);
        let cfg = EvalConfig {
            strip_zwnj: true,
            ..EvalConfig::default()
        };
        let without = evaluate(&pairs, Script::PersoArabic, &cfg).unwrap();
        assert_eq!(without.seq_acc, 1.0);
        assert_eq!(without.chrf_pp, 100.0);
    }

    #[test]
    fn report_json_field_names() {
        let r = evaluate(&[("а", "а")], Script::TajikCyrillic, &EvalConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for k in ["chrf_pp", "seq_acc", "rsa1", "rsa2", "avg_ld", "ld_ratio", "f1_blocks", "n_pairs"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert!(v["f1_blocks"]["vowels"]["macro"].is_number());
    }

    #[test]
    fn mismatch_and_tsv() {
        assert!(zip_lines(&["a"], &[]).is_err());
        let tsv = per_pair_tsv(&[("ab", "cd")], &EvalConfig::default());
        assert_eq!(tsv.lines().nth(1).unwrap(), "0\t2\t1.000000\tab\tcd");
    }
}
