//! Slow reference implementations the library is checked against. They
//! share only unit splitting and bead costs with the library code.
#![allow(dead_code)]

use std::collections::HashMap;

use tajfar_core::corpus::{Bead, GaleChurchParams};
use tajfar_core::metrics::units;

pub const GOLDEN_PAIRS: &str = include_str!("../fixtures/golden_pairs.tsv");

/// `(script code, hypothesis, reference)` rows of the pinned metric set.
pub fn golden_pairs() -> Vec<(String, String, String)> {
    GOLDEN_PAIRS
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            (c[0].to_owned(), c[1].to_owned(), c[2].to_owned())
        })
        .collect()
}

/// Plain exponential recursion; only for short inputs.
pub fn lev_recursive(a: &[String], b: &[String]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    if a[0] == b[0] {
        return lev_recursive(&a[1..], &b[1..]);
    }
    1 + lev_recursive(&a[1..], b)
        .min(lev_recursive(a, &b[1..]))
        .min(lev_recursive(&a[1..], &b[1..]))
}

/// Top-down memoized recursion over suffixes.
pub fn lev_memo(a: &[String], b: &[String]) -> usize {
    fn go(a: &[String], b: &[String], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo)
                .min(go(a, b, i, j + 1, memo))
                .min(go(a, b, i + 1, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

fn nospace(s: &str) -> Vec<String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    units(&s)
}

pub fn seq_acc_oracle(pairs: &[(String, String)]) -> f64 {
    let hits = pairs.iter().filter(|(h, r)| nospace(h) == nospace(r)).count();
    hits as f64 / pairs.len() as f64
}

pub fn rsa_oracle(pairs: &[(String, String)], k: usize) -> f64 {
    let hits = pairs
        .iter()
        .filter(|(h, r)| lev_memo(&nospace(h), &nospace(r)) <= k)
        .count();
    hits as f64 / pairs.len() as f64
}

pub fn ld_oracle(pairs: &[(String, String)]) -> (f64, f64) {
    let mut sum = 0.0;
    let mut ratios = Vec::new();
    for (h, r) in pairs {
        let (h, r) = (nospace(h), nospace(r));
        let d = lev_memo(&h, &r) as f64;
        sum += d;
        let longest = h.len().max(r.len());
        ratios.push(if longest == 0 { 0.0 } else { d / longest as f64 });
    }
    let n = pairs.len() as f64;
    (sum / n, ratios.iter().sum::<f64>() / n)
}

/// n-grams as joined strings (units separated by U+0001).
fn ngram_bag(items: &[String], n: usize) -> HashMap<String, usize> {
    let mut bag = HashMap::new();
    if items.len() < n {
        return bag;
    }
    for start in 0..=items.len() - n {
        let key = items[start..start + n].join("\u{1}");
        *bag.entry(key).or_insert(0) += 1;
    }
    bag
}

/// chrF++ with six character orders, two word orders and beta 2.
pub fn chrf_oracle(pairs: &[(String, String)]) -> f64 {
    let mut matched = [0usize; 8];
    let mut hyp_total = [0usize; 8];
    let mut ref_total = [0usize; 8];
    let mut hyp_nonempty = false;
    for (h, r) in pairs {
        let hc = nospace(h);
        let rc = nospace(r);
        if !hc.is_empty() {
            hyp_nonempty = true;
        }
        let hw: Vec<String> = h.split_whitespace().map(|w| units(w).concat()).collect();
        let rw: Vec<String> = r.split_whitespace().map(|w| units(w).concat()).collect();
        for order in 0..8 {
            let (hb, rb) = if order < 6 {
                (ngram_bag(&hc, order + 1), ngram_bag(&rc, order + 1))
            } else {
                (ngram_bag(&hw, order - 5), ngram_bag(&rw, order - 5))
            };
            for (k, v) in &hb {
                hyp_total[order] += v;
                if let Some(w) = rb.get(k) {
                    matched[order] += (*v).min(*w);
                }
            }
            for v in rb.values() {
                ref_total[order] += v;
            }
        }
    }
    let mut scores = Vec::new();
    for order in 0..8 {
        if ref_total[order] == 0 {
            continue;
        }
        let p = if hyp_total[order] == 0 {
            0.0
        } else {
            matched[order] as f64 / hyp_total[order] as f64
        };
        let r = matched[order] as f64 / ref_total[order] as f64;
        let f = if p == 0.0 && r == 0.0 { 0.0 } else { 5.0 * p * r / (4.0 * p + r) };
        scores.push(f);
    }
    if scores.is_empty() {
        return if hyp_nonempty { 0.0 } else { 100.0 };
    }
    100.0 * scores.iter().sum::<f64>() / scores.len() as f64
}

pub const GAP: &str = "∅";

/// Optimal alignment by memoized recursion over prefixes; ties prefer a
/// substitution, then a deletion, then an insertion at the end.
pub fn align_oracle(r: &[String], h: &[String]) -> Vec<(String, String)> {
    let n = r.len();
    let m = h.len();
    let mut memo: HashMap<(usize, usize), usize> = HashMap::new();
    fn cost(r: &[String], h: &[String], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == 0 || j == 0 {
            return i + j;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let sub = cost(r, h, i - 1, j - 1, memo) + usize::from(r[i - 1] != h[j - 1]);
        let del = cost(r, h, i - 1, j, memo) + 1;
        let ins = cost(r, h, i, j - 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo.insert((i, j), v);
        v
    }
    let mut steps = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost(r, h, i, j, &mut memo);
        if i > 0 && j > 0 && cost(r, h, i - 1, j - 1, &mut memo) + usize::from(r[i - 1] != h[j - 1]) == here {
            steps.push((r[i - 1].clone(), h[j - 1].clone()));
            i -= 1;
            j -= 1;
        } else if i > 0 && cost(r, h, i - 1, j, &mut memo) + 1 == here {
            steps.push((r[i - 1].clone(), GAP.to_owned()));
            i -= 1;
        } else {
            steps.push((GAP.to_owned(), h[j - 1].clone()));
            j -= 1;
        }
    }
    steps.reverse();
    steps
}

const TJ_CONSONANTS: &str = "бвгғджзйкқлмнпрстфхҳчҷш";
const TJ_VOWELS: &str = "аеёиӣоуӯэюя";
const FA_CONSONANTS: &str = "بپتثجچحخدذرزژسشصضطظغفقکگلمنهوی";
const FA_VOWELS: &str = "اآوی";

fn lower_base(unit: &str) -> Option<char> {
    let c = unit.chars().next()?;
    c.to_lowercase().next()
}

pub fn in_subset(unit: &str, script: &str, subset: &str) -> bool {
    if subset == "all" {
        return true;
    }
    let Some(c) = lower_base(unit) else { return false };
    let list = match (script, subset) {
        ("tj", "consonants") => TJ_CONSONANTS,
        ("tj", "vowels") => TJ_VOWELS,
        ("fa", "consonants") => FA_CONSONANTS,
        ("fa", "vowels") => FA_VOWELS,
        _ => unreachable!(),
    };
    // classed by the first letter; Tajik case folded
    list.contains(c)
}

/// (macro, micro, weighted) F1 for one subset.
pub fn f1_oracle(pairs: &[(String, String)], script: &str, subset: &str) -> (f64, f64, f64) {
    let mut confusion: HashMap<(String, String), usize> = HashMap::new();
    for (h, r) in pairs {
        for step in align_oracle(&nospace(r), &nospace(h)) {
            *confusion.entry(step).or_insert(0) += 1;
        }
    }
    let mut labels: Vec<String> = Vec::new();
    for (a, b) in confusion.keys() {
        for l in [a, b] {
            if !labels.contains(l) {
                labels.push(l.clone());
            }
        }
    }
    let member = |l: &str| if l == GAP { subset == "all" } else { in_subset(l, script, subset) };
    let (mut tp_sum, mut fp_sum, mut fn_sum) = (0usize, 0usize, 0usize);
    let mut f1s = Vec::new();
    for l in labels.iter().filter(|l| member(l)) {
        let mut tp = 0;
        let mut fp = 0;
        let mut fnn = 0;
        for ((a, b), &n) in &confusion {
            if a == l && b == l {
                tp += n;
            } else if a == l {
                fnn += n;
            } else if b == l {
                fp += n;
            }
        }
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fnn;
        let support = tp + fnn;
        if l != GAP && support > 0 {
            let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let recall = tp as f64 / support as f64;
            let f = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            f1s.push((f, support));
        }
    }
    if f1s.is_empty() {
        let v = if tp_sum + fp_sum + fn_sum == 0 { 1.0 } else { 0.0 };
        return (v, v, v);
    }
    let macro_f1 = f1s.iter().map(|x| x.0).sum::<f64>() / f1s.len() as f64;
    let total: usize = f1s.iter().map(|x| x.1).sum();
    let weighted = f1s.iter().map(|x| x.0 * x.1 as f64).sum::<f64>() / total as f64;
    let p = tp_sum as f64 / (tp_sum + fp_sum).max(1) as f64;
    let r = tp_sum as f64 / (tp_sum + fn_sum).max(1) as f64;
    let micro = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (macro_f1, micro, weighted)
}

/// Every bead sequence covering both lists, by recursion; returns the
/// lowest total cost.
pub fn gale_church_exhaustive(src: &[usize], tgt: &[usize], params: &GaleChurchParams) -> f64 {
    fn go(src: &[usize], tgt: &[usize], i: usize, j: usize, params: &GaleChurchParams, enumerated: &mut u64) -> f64 {
        if i == src.len() && j == tgt.len() {
            *enumerated += 1;
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for &((di, dj), _) in &params.priors {
            if i + di > src.len() || j + dj > tgt.len() || (di == 0 && dj == 0) {
                continue;
            }
            let ls: usize = src[i..i + di].iter().sum();
            let lt: usize = tgt[j..j + dj].iter().sum();
            let c = params.bead_cost((di, dj), ls, lt);
            if !c.is_finite() {
                continue;
            }
            best = best.min(c + go(src, tgt, i + di, j + dj, params, enumerated));
        }
        best
    }
    let mut n = 0;
    go(src, tgt, 0, 0, params, &mut n)
}

/// Cost of a bead sequence given sentence lengths.
pub fn beads_cost(src: &[usize], tgt: &[usize], beads: &[Bead], params: &GaleChurchParams) -> f64 {
    beads
        .iter()
        .map(|b| {
            let ls = b.src.iter().map(|&i| src[i]).sum();
            let lt = b.tgt.iter().map(|&j| tgt[j]).sum();
            params.bead_cost(b.kind(), ls, lt)
        })
        .sum()
}
