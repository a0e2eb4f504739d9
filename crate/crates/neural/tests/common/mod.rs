#![allow(dead_code)]

use tajfar_neural::{ModelConfig, Transducer, Vocabulary};

pub const PAIRS: &[(&str, &str)] = &[
    ("китоб", "کتاب"),
    ("хона", "خانه"),
    ("модар", "مادر"),
    ("дар хона", "در خانه"),
    ("обу ҳаво", "آب و هوا"),
    ("гов", "گاو"),
];

pub fn vocabs() -> (Vocabulary, Vocabulary) {
    (
        Vocabulary::build(PAIRS.iter().map(|p| p.0)),
        Vocabulary::build(PAIRS.iter().map(|p| p.1)),
    )
}

pub fn micro<T: tajfar_neural::ops::Float>(seed: u64) -> Transducer<T> {
    let (s, t) = vocabs();
    Transducer::new(ModelConfig::micro(), s, t, seed).unwrap()
}

/// Micro shape with dropout, for tests that need a stochastic pass.
pub fn small(dropout: f64, seed: u64) -> Transducer<f64> {
    let (s, t) = vocabs();
    let cfg = ModelConfig {
        n_heads: 2,
        d_model: 8,
        dropout,
        ..ModelConfig::micro()
    };
    Transducer::new(cfg, s, t, seed).unwrap()
}
