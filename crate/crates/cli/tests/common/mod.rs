#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tajfar_core::corpus::{sample_corpus, ParallelCorpus};
use tajfar_core::normalize::{normalize_text, NormalizeConfig};
use tajfar_core::script::Script;

pub fn tajfar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tajfar"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

pub fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

/// 200 pairs of the bundled sample: ids with `id % 5 < 2`.
pub fn corpus_200() -> ParallelCorpus {
    let mut c = sample_corpus();
    c.pairs.retain(|p| p.id % 5 < 2);
    c.pairs.truncate(200);
    assert_eq!(c.pairs.len(), 200);
    c
}

pub fn corpus_200_tsv() -> String {
    corpus_200()
        .pairs
        .iter()
        .map(|p| format!("{}\t{}\t{}\n", p.farsi, p.tajik, p.source_tag))
        .collect()
}

/// A two-layer, 64-wide transformer that trains in seconds.
pub const DESK_CONFIG: &str = "\
# desk-scale transducer
n_encoder_layers = 2
n_decoder_layers = 2
n_heads = 4
d_model = 64
d_ffn = 256
dropout = 0.0
max_seq_len = 128
lr = 0.003
warmup_epochs = 2
batch_size = 16
max_epochs = 60
seed = 1
";

pub fn norm(text: &str, script: Script) -> String {
    normalize_text(text, script, &NormalizeConfig::default())
}
