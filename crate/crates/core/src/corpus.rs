//! Parallel corpus ingestion, Gale-Church sentence alignment, corpus
//! statistics and train/dev/test split generation.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty side in pair(s) {ids:?}")]
    EmptySide { ids: Vec<usize> },
    #[error("source {tag:?} has {found} pairs, at least {needed} are needed")]
    InsufficientData {
        tag: String,
        found: usize,
        needed: usize,
    },
    #[error("invalid split spec: {0}")]
    InvalidSplit(String),
    #[error("alignment needs sentences on both sides")]
    EmptyInput,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: usize,
    pub farsi: String,
    pub tajik: String,
    pub source_tag: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Tsv,
    Jsonl,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(CorpusFormat::Tsv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

impl CorpusFormat {
    /// Guesses from the file extension, defaulting to TSV.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Tsv,
        }
    }
}

/// Tag given to TSV rows without a third column.
pub const UNKNOWN_SOURCE: &str = "unknown";

#[derive(Deserialize)]
struct JsonRecord {
    farsi: String,
    tajik: String,
    #[serde(default)]
    source_tag: Option<String>,
}

fn clean(s: &str) -> String {
    s.trim_start_matches('\u{feff}').nfc().collect::<String>().trim().to_owned()
}

impl ParallelCorpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Reads a corpus; ids are assigned densely in file order. Blank lines
    /// are skipped.
    pub fn read<R: BufRead>(reader: R, format: CorpusFormat) -> Result<ParallelCorpus, CorpusError> {
        let mut pairs = Vec::new();
        let mut empty = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| CorpusError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            let line = line.trim_start_matches('\u{feff}').trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (farsi, tajik, tag) = match format {
                CorpusFormat::Tsv => {
                    let cols: Vec<&str> = line.split('\t').collect();
                    match cols.len() {
                        2 => (cols[0], cols[1], UNKNOWN_SOURCE),
                        3 => (cols[0], cols[1], cols[2]),
                        n => {
                            return Err(CorpusError::Parse {
                                line: lineno,
                                message: format!("expected 2 or 3 tab-separated columns, found {n}"),
                            })
                        }
                    }
                    .into_owned_tuple()
                }
                CorpusFormat::Jsonl => {
                    let rec: JsonRecord =
                        serde_json::from_str(line).map_err(|e| CorpusError::Parse {
                            line: lineno,
                            message: e.to_string(),
                        })?;
                    let tag = rec.source_tag.unwrap_or_else(|| UNKNOWN_SOURCE.to_owned());
                    (rec.farsi, rec.tajik, tag)
                }
            };
            let id = pairs.len();
            let pair = SentencePair {
                id,
                farsi: clean(&farsi),
                tajik: clean(&tajik),
                source_tag: {
                    let t = clean(&tag);
                    if t.is_empty() {
                        UNKNOWN_SOURCE.to_owned()
                    } else {
                        t
                    }
                },
            };
            if pair.farsi.is_empty() || pair.tajik.is_empty() {
                empty.push(id);
            }
            pairs.push(pair);
        }
        if !empty.is_empty() {
            return Err(CorpusError::EmptySide { ids: empty });
        }
        Ok(ParallelCorpus {
            pairs,
            provenance: String::new(),
        })
    }

    pub fn parse(text: &str, format: CorpusFormat) -> Result<ParallelCorpus, CorpusError> {
        ParallelCorpus::read(text.as_bytes(), format)
    }

    pub fn to_tsv(&self) -> String {
        self.pairs
            .iter()
            .map(|p| format!("{}\t{}\t{}\n", p.farsi, p.tajik, p.source_tag))
            .collect()
    }

    /// Pairs with the given ids, in id order.
    pub fn select(&self, ids: &[usize]) -> Vec<&SentencePair> {
        ids.iter().filter_map(|&i| self.pairs.get(i)).collect()
    }
}

trait IntoOwnedTuple {
    fn into_owned_tuple(self) -> (String, String, String);
}

impl IntoOwnedTuple for (&str, &str, &str) {
    fn into_owned_tuple(self) -> (String, String, String) {
        (self.0.to_owned(), self.1.to_owned(), self.2.to_owned())
    }
}

/// Loads a TSV (`farsi<TAB>tajik[<TAB>source_tag]`) or JSONL corpus.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<ParallelCorpus, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut corpus = ParallelCorpus::read(std::io::BufReader::new(file), format)?;
    corpus.provenance = format!("{} ({format:?}); no deduplication applied", path.display());
    Ok(corpus)
}

/// The small parallel sample shipped with the library.
pub const SAMPLE_CORPUS: &str = include_str!("../data/sample_corpus.tsv");

pub fn sample_corpus() -> ParallelCorpus {
    let mut c = ParallelCorpus::parse(SAMPLE_CORPUS, CorpusFormat::Tsv).expect("shipped sample is valid");
    c.provenance = "built-in sample corpus".to_owned();
    c
}

// ---------------------------------------------------------------------------
// Gale-Church

/// An m:n alignment unit: `src` sentence indices grouped with `tgt` ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bead {
    pub src: Vec<usize>,
    pub tgt: Vec<usize>,
}

impl Bead {
    pub fn kind(&self) -> (usize, usize) {
        (self.src.len(), self.tgt.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaleChurchParams {
    /// Expected target characters per source character.
    pub c: f64,
    /// Variance per source character.
    pub s2: f64,
    /// Prior probability of each bead shape.
    pub priors: Vec<((usize, usize), f64)>,
}

impl Default for GaleChurchParams {
    fn default() -> Self {
        GaleChurchParams {
            c: 1.0,
            s2: 6.8,
            priors: vec![
                ((1, 1), 0.89),
                ((1, 0), 0.0099),
                ((0, 1), 0.0099),
                ((2, 1), 0.089 / 2.0),
                ((1, 2), 0.089 / 2.0),
                ((2, 2), 0.011),
            ],
        }
    }
}

/// Cost of a match whose length deviate is effectively impossible.
const IMPOSSIBLE_MATCH: f64 = 1e4;

impl GaleChurchParams {
    /// −log prior − log P(|δ|) for a bead with the given character totals.
    pub fn bead_cost(&self, shape: (usize, usize), src_len: usize, tgt_len: usize) -> f64 {
        let prior = self
            .priors
            .iter()
            .find(|(s, _)| *s == shape)
            .map(|(_, p)| *p)
            .unwrap_or(0.0);
        if prior <= 0.0 {
            return f64::INFINITY;
        }
        -prior.ln() + self.match_cost(src_len as f64, tgt_len as f64)
    }

    fn match_cost(&self, l1: f64, l2: f64) -> f64 {
        let mean = (l1 + l2 / self.c) / 2.0;
        if mean <= 0.0 {
            return 0.0;
        }
        let z = (self.c * l1 - l2) / (self.s2 * mean).sqrt();
        // two-tailed probability of a deviate at least this large
        let p = statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2);
        if p > 0.0 {
            (-p.ln()).min(IMPOSSIBLE_MATCH)
        } else {
            IMPOSSIBLE_MATCH
        }
    }
}

/// Character length used by the aligner: extended grapheme clusters,
/// whitespace excluded.
pub fn char_length(s: &str) -> usize {
    s.graphemes(true).filter(|g| !g.chars().all(char::is_whitespace)).count()
}

/// Aligns two sentence lists with the Gale-Church length-based dynamic
/// program. Ties keep the earliest-listed bead shape.
pub fn gale_church_align<S: AsRef<str>>(src: &[S], tgt: &[S]) -> Result<Vec<Bead>, CorpusError> {
    gale_church_align_with(src, tgt, &GaleChurchParams::default())
}

pub fn gale_church_align_with<S: AsRef<str>>(
    src: &[S],
    tgt: &[S],
    params: &GaleChurchParams,
) -> Result<Vec<Bead>, CorpusError> {
    if src.is_empty() || tgt.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let sl: Vec<usize> = src.iter().map(|s| char_length(s.as_ref())).collect();
    let tl: Vec<usize> = tgt.iter().map(|s| char_length(s.as_ref())).collect();
    let (n, m) = (sl.len(), tl.len());
    let mut cost = vec![vec![f64::INFINITY; m + 1]; n + 1];
    let mut back = vec![vec![(0usize, 0usize); m + 1]; n + 1];
    cost[0][0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            for &((di, dj), _) in &params.priors {
                if di > i || dj > j {
                    continue;
                }
                let prev = cost[i - di][j - dj];
                if !prev.is_finite() {
                    continue;
                }
                let ls: usize = sl[i - di..i].iter().sum();
                let lt: usize = tl[j - dj..j].iter().sum();
                let c = prev + params.bead_cost((di, dj), ls, lt);
                if c < cost[i][j] {
                    cost[i][j] = c;
                    back[i][j] = (di, dj);
                }
            }
        }
    }
    let mut beads = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let (di, dj) = back[i][j];
        beads.push(Bead {
            src: (i - di..i).collect(),
            tgt: (j - dj..j).collect(),
        });
        i -= di;
        j -= dj;
    }
    beads.reverse();
    Ok(beads)
}

/// Total cost of a bead sequence under `params`.
pub fn alignment_cost<S: AsRef<str>>(src: &[S], tgt: &[S], beads: &[Bead], params: &GaleChurchParams) -> f64 {
    beads
        .iter()
        .map(|b| {
            let ls = b.src.iter().map(|&i| char_length(src[i].as_ref())).sum();
            let lt = b.tgt.iter().map(|&j| char_length(tgt[j].as_ref())).sum();
            params.bead_cost(b.kind(), ls, lt)
        })
        .sum()
}

// ---------------------------------------------------------------------------
// statistics

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SideStats {
    pub tokens: usize,
    pub chars: usize,
    pub avg_tokens: f64,
    pub avg_chars: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_sentences: usize,
    pub farsi: SideStats,
    pub tajik: SideStats,
}

fn side_stats<'a>(texts: impl Iterator<Item = &'a str>, n: usize) -> SideStats {
    let (tokens, chars) = texts.fold((0, 0), |(t, c), s| {
        (t + s.split_whitespace().count(), c + char_length(s))
    });
    let avg = |x: usize| if n == 0 { 0.0 } else { x as f64 / n as f64 };
    SideStats {
        tokens,
        chars,
        avg_tokens: avg(tokens),
        avg_chars: avg(chars),
    }
}

/// Sentence, token and character counts; characters are extended grapheme
/// clusters with whitespace excluded.
pub fn corpus_stats(corpus: &ParallelCorpus) -> CorpusStats {
    let n = corpus.pairs.len();
    CorpusStats {
        n_sentences: n,
        farsi: side_stats(corpus.pairs.iter().map(|p| p.farsi.as_str()), n),
        tajik: side_stats(corpus.pairs.iter().map(|p| p.tajik.as_str()), n),
    }
}

impl CorpusStats {
    /// A two-column block in the layout of a corpus-statistics table.
    pub fn render(&self) -> String {
        let rows = [
            ("# of sentences", self.n_sentences.to_string(), self.n_sentences.to_string()),
            ("# of word tokens", self.farsi.tokens.to_string(), self.tajik.tokens.to_string()),
            ("# of characters*", self.farsi.chars.to_string(), self.tajik.chars.to_string()),
            (
                "Avg. # of tokens in a sentence",
                format!("{:.2}", self.farsi.avg_tokens),
                format!("{:.2}", self.tajik.avg_tokens),
            ),
            (
                "Avg. # of characters* in a sentence",
                format!("{:.2}", self.farsi.avg_chars),
                format!("{:.2}", self.tajik.avg_chars),
            ),
        ];
        let mut out = String::from("Statistics\tFarsi\tTajik\n");
        for (label, fa, tj) in rows {
            out.push_str(&format!("{label}\t{fa}\t{tj}\n"));
        }
        out.push_str("* whitespace not counted\n");
        out
    }
}

// ---------------------------------------------------------------------------
// splits

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train: f64,
    pub dev: f64,
    pub test: f64,
    pub folds: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            seed: 0,
            train: 0.8,
            dev: 0.1,
            test: 0.1,
            folds: 10,
        }
    }
}

/// Pairs needed per source tag before a split is attempted.
pub const MIN_PAIRS_PER_SOURCE: usize = 10;

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(CorpusError::InvalidSplit("fractions must lie in [0, 1]".into()));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidSplit("fractions must sum to 1".into()));
        }
        if self.folds == 0 {
            return Err(CorpusError::InvalidSplit("at least one fold is required".into()));
        }
        Ok(())
    }

    /// Seed of fold `k`, derived from the spec seed.
    pub fn fold_seed(&self, fold: usize) -> u64 {
        // splitmix64 step
        let mut z = self
            .seed
            .wrapping_add((fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

/// Repeated random subsampling: each fold is an independent shuffle of
/// every source tag, cut into train/dev/test by the spec fractions (the
/// rounding remainder goes to train). Ids in each part are sorted.
pub fn make_splits(corpus: &ParallelCorpus, spec: &SplitSpec) -> Result<Vec<Split>, CorpusError> {
    spec.validate()?;
    let mut by_tag: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for p in &corpus.pairs {
        by_tag.entry(p.source_tag.as_str()).or_default().push(p.id);
    }
    if by_tag.is_empty() {
        return Err(CorpusError::InsufficientData {
            tag: UNKNOWN_SOURCE.to_owned(),
            found: 0,
            needed: MIN_PAIRS_PER_SOURCE,
        });
    }
    for (tag, ids) in &by_tag {
        if ids.len() < MIN_PAIRS_PER_SOURCE {
            return Err(CorpusError::InsufficientData {
                tag: (*tag).to_owned(),
                found: ids.len(),
                needed: MIN_PAIRS_PER_SOURCE,
            });
        }
    }
    let mut folds = Vec::with_capacity(spec.folds);
    for k in 0..spec.folds {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.fold_seed(k));
        let mut split = Split::default();
        for ids in by_tag.values() {
            let mut ids = ids.clone();
            ids.shuffle(&mut rng);
            let n = ids.len();
            let n_dev = (n as f64 * spec.dev).floor() as usize;
            let n_test = (n as f64 * spec.test).floor() as usize;
            split.dev.extend_from_slice(&ids[..n_dev]);
            split.test.extend_from_slice(&ids[n_dev..n_dev + n_test]);
            split.train.extend_from_slice(&ids[n_dev + n_test..]);
        }
        split.train.sort_unstable();
        split.dev.sort_unstable();
        split.test.sort_unstable();
        folds.push(split);
    }
    Ok(folds)
}

#[derive(Serialize)]
struct ManifestLine<'a> {
    fold: usize,
    split: &'a str,
    ids: &'a [usize],
}

/// One JSON line per (fold, part): `{"fold":0,"split":"train","ids":[...]}`.
pub fn split_manifest(splits: &[Split]) -> String {
    let mut out = String::new();
    for (fold, s) in splits.iter().enumerate() {
        for (name, ids) in [("train", &s.train), ("dev", &s.dev), ("test", &s.test)] {
            let line = ManifestLine {
                fold,
                split: name,
                ids,
            };
            out.push_str(&serde_json::to_string(&line).expect("manifest serializes"));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_three_lines() {
        let c = ParallelCorpus::parse("ا\tа\tblog\nب\tб\tbbc\nپ\tп\tnews\n", CorpusFormat::Tsv).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.pairs.iter().map(|p| p.id).collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(c.pairs[1].source_tag, "bbc");
    }

    #[test]
    fn tsv_two_columns_defaults_tag() {
        let c = ParallelCorpus::parse("ا\tа\n", CorpusFormat::Tsv).unwrap();
        assert_eq!(c.pairs[0].source_tag, "unknown");
    }

    #[test]
    fn empty_side_lists_ids() {
        let err = ParallelCorpus::parse("ا\tа\nب\t\nپ\t \n", CorpusFormat::Tsv).unwrap_err();
        match err {
            CorpusError::EmptySide { ids } => assert_eq!(ids, [1, 2]),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn parse_error_has_line_number() {
        let err = ParallelCorpus::parse("ا\tа\n\nonly-one-column\n", CorpusFormat::Tsv).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 3, .. }), "{err}");
        let err = ParallelCorpus::parse("{\"farsi\":\"ا\"}\n", CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 1, .. }));
    }

    #[test]
    fn jsonl_and_bom() {
        let text = "\u{feff}{\"farsi\":\"کتاب\",\"tajik\":\"китоб\",\"source_tag\":\"poetry\"}\n{\"farsi\":\"آب\",\"tajik\":\"об\"}\n";
        let c = ParallelCorpus::parse(text, CorpusFormat::Jsonl).unwrap();
        assert_eq!(c.pairs[0].source_tag, "poetry");
        assert_eq!(c.pairs[1].source_tag, "unknown");
        assert_eq!(c.pairs[0].farsi, "کتاب");
    }

    #[test]
    fn sample_corpus_loads() {
        let c = sample_corpus();
        assert!(c.len() >= 500);
        assert!(make_splits(&c, &SplitSpec::default()).is_ok());
    }

    #[test]
    fn stats_example() {
        let c = ParallelCorpus::parse("ا ب\tаб вг\n", CorpusFormat::Tsv).unwrap();
        let s = corpus_stats(&c);
        assert_eq!(s.n_sentences, 1);
        assert_eq!((s.tajik.tokens, s.tajik.chars), (2, 4));
        assert_eq!((s.farsi.tokens, s.farsi.chars), (2, 2));
        assert_eq!(s.tajik.avg_chars, 4.0);
    }

    #[test]
    fn stats_empty() {
        let s = corpus_stats(&ParallelCorpus::default());
        assert_eq!(s, CorpusStats::default());
        assert!(s.render().contains("# of sentences\t0\t0"));
    }

    #[test]
    fn equal_lists_align_one_to_one() {
        let src = ["aaaa", "bbbbbbb", "cc", "dddddddddd", "eeeee"];
        let beads = gale_church_align(&src, &src).unwrap();
        assert_eq!(beads.len(), 5);
        for (k, b) in beads.iter().enumerate() {
            assert_eq!(b.src, [k]);
            assert_eq!(b.tgt, [k]);
        }
    }

    #[test]
    fn empty_side_is_rejected() {
        let empty: [&str; 0] = [];
        assert!(matches!(
            gale_church_align(&empty, &["x"]),
            Err(CorpusError::EmptyInput)
        ));
        assert!(matches!(
            gale_church_align(&["x"], &empty),
            Err(CorpusError::EmptyInput)
        ));
    }

    #[test]
    fn bead_costs_are_sane() {
        let p = GaleChurchParams::default();
        // a perfect length match costs only its prior
        assert!((p.bead_cost((1, 1), 20, 20) - (-(0.89f64).ln())).abs() < 1e-12);
        assert!(p.bead_cost((1, 1), 20, 40) > p.bead_cost((1, 1), 20, 22));
        assert!(p.bead_cost((0, 2), 0, 10).is_infinite());
    }

    #[test]
    fn splits_80_10_10() {
        let text: String = (0..100).map(|i| format!("ا{i}\tа{i}\tblog\n")).collect();
        let c = ParallelCorpus::parse(&text, CorpusFormat::Tsv).unwrap();
        let spec = SplitSpec {
            folds: 1,
            seed: 3,
            ..SplitSpec::default()
        };
        let s = make_splits(&c, &spec).unwrap();
        assert_eq!((s[0].train.len(), s[0].dev.len(), s[0].test.len()), (80, 10, 10));
        assert_eq!(s, make_splits(&c, &spec).unwrap());
    }

    #[test]
    fn fractions_apply_per_source() {
        let mut text = String::new();
        for i in 0..50 {
            text.push_str(&format!("ا{i}\tа{i}\tblog\n"));
        }
        for i in 0..25 {
            text.push_str(&format!("ب{i}\tб{i}\tpoetry\n"));
        }
        let c = ParallelCorpus::parse(&text, CorpusFormat::Tsv).unwrap();
        let s = make_splits(&c, &SplitSpec::default()).unwrap();
        for fold in &s {
            let poetry_test = fold.test.iter().filter(|&&i| i >= 50).count();
            assert_eq!(poetry_test, 2);
            assert_eq!(fold.test.len(), 5 + 2);
            assert_eq!(fold.dev.len(), 5 + 2);
            assert_eq!(fold.train.len(), 40 + 21);
        }
    }

    #[test]
    fn insufficient_data_per_tag() {
        let mut text: String = (0..20).map(|i| format!("ا{i}\tа{i}\tblog\n")).collect();
        text.push_str("ب\tб\tpoetry\n");
        let c = ParallelCorpus::parse(&text, CorpusFormat::Tsv).unwrap();
        match make_splits(&c, &SplitSpec::default()).unwrap_err() {
            CorpusError::InsufficientData { tag, found, .. } => {
                assert_eq!(tag, "poetry");
                assert_eq!(found, 1);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn invalid_spec() {
        let c = sample_corpus();
        let spec = SplitSpec {
            train: 0.9,
            ..SplitSpec::default()
        };
        assert!(matches!(make_splits(&c, &spec), Err(CorpusError::InvalidSplit(_))));
        let spec = SplitSpec {
            folds: 0,
            ..SplitSpec::default()
        };
        assert!(matches!(make_splits(&c, &spec), Err(CorpusError::InvalidSplit(_))));
    }

    #[test]
    fn manifest_lines() {
        let s = vec![Split {
            train: vec![0, 2],
            dev: vec![1],
            test: vec![],
        }];
        assert_eq!(
            split_manifest(&s),
            "{\"fold\":0,\"split\":\"train\",\"ids\":[0,2]}\n{\"fold\":0,\"split\":\"dev\",\"ids\":[1]}\n{\"fold\":0,\"split\":\"test\",\"ids\":[]}\n"
        );
    }
}
