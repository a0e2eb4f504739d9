//! Binary checkpoints: an 8-byte magic, a little-endian u32 format version,
//! then length-prefixed sections (metadata JSON, source vocabulary JSON,
//! target vocabulary JSON, tensor manifest JSON, raw f32 weights).

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ModelConfig, TrainConfig};
use crate::model::Transducer;
use crate::vocab::Vocabulary;

pub const MAGIC: &[u8; 8] = b"TJFRCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("checkpoint format version {found}, this build reads version {expected}")]
    Version { found: u32, expected: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub model: ModelConfig,
    pub train: Option<TrainConfig>,
    /// Modelling choices that are not visible in the config.
    pub decisions: BTreeMap<String, String>,
    /// Free-form entries such as the transliteration direction.
    pub extra: BTreeMap<String, String>,
}

/// The fixed modelling choices of this implementation.
pub fn decisions() -> BTreeMap<String, String> {
    [
        ("optimizer", "adam beta1=0.9 beta2=0.98 eps=1e-9"),
        ("lr_schedule", "linear warmup per step, then x factor after patience epochs without dev improvement"),
        ("label_smoothing", "none"),
        ("normalization", "pre-layer-norm with final encoder and decoder norms"),
        ("positional_encoding", "sinusoidal"),
        ("init", "xavier-uniform weights, N(0, d_model^-0.5) embeddings, zero biases"),
        ("decoding", "greedy, max_len = 2 * source length + 10"),
        ("units", "extended grapheme clusters, ZWNJ as its own token"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: (usize, usize),
}

fn section(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(bytes);
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec(v).expect("serializable checkpoint section")
}

/// Serializes a model and its metadata.
pub fn to_bytes(model: &Transducer<f32>, train: Option<&TrainConfig>, extra: &BTreeMap<String, String>) -> Vec<u8> {
    let meta = Metadata {
        model: model.config().clone(),
        train: train.cloned(),
        decisions: decisions(),
        extra: extra.clone(),
    };
    let manifest: Vec<TensorEntry> = model
        .layout()
        .names()
        .iter()
        .zip(model.layout().shapes())
        .map(|(name, &shape)| TensorEntry {
            name: name.clone(),
            shape,
        })
        .collect();
    let mut blob = Vec::with_capacity(model.parameter_count() * 4);
    for p in model.params() {
        for v in p.iter() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut out = Vec::with_capacity(blob.len() + 4096);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    section(&mut out, &json(&meta));
    section(&mut out, &json(model.src_vocab()));
    section(&mut out, &json(model.tgt_vocab()));
    section(&mut out, &json(&manifest));
    section(&mut out, &blob);
    out
}

pub fn save(
    path: &Path,
    model: &Transducer<f32>,
    train: Option<&TrainConfig>,
    extra: &BTreeMap<String, String>,
) -> Result<(), CheckpointError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&to_bytes(model, train, extra))?;
    f.sync_all()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| CheckpointError::Format(format!("truncated in {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn section(&mut self, what: &str) -> Result<&'a [u8], CheckpointError> {
        let len = u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes"));
        let len = usize::try_from(len).map_err(|_| CheckpointError::Format(format!("{what} too large")))?;
        self.take(len, what)
    }
}

fn parse<'a, T: Deserialize<'a>>(bytes: &'a [u8], what: &str) -> Result<T, CheckpointError> {
    serde_json::from_slice(bytes).map_err(|e| CheckpointError::Format(format!("{what}: {e}")))
}

pub fn from_bytes(bytes: &[u8]) -> Result<(Transducer<f32>, Metadata), CheckpointError> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8, "header")? != MAGIC {
        return Err(CheckpointError::Format("not a checkpoint file".into()));
    }
    let found = u32::from_le_bytes(c.take(4, "header")?.try_into().expect("4 bytes"));
    if found != VERSION {
        return Err(CheckpointError::Version {
            found,
            expected: VERSION,
        });
    }
    let meta: Metadata = parse(c.section("metadata")?, "metadata")?;
    let src: Vocabulary = parse(c.section("source vocabulary")?, "source vocabulary")?;
    let tgt: Vocabulary = parse(c.section("target vocabulary")?, "target vocabulary")?;
    let manifest: Vec<TensorEntry> = parse(c.section("manifest")?, "manifest")?;
    let blob = c.section("weights")?;
    if c.pos != bytes.len() {
        return Err(CheckpointError::Format("trailing bytes after weights".into()));
    }
    let expected: usize = manifest.iter().map(|t| t.shape.0 * t.shape.1).sum();
    if blob.len() != expected * 4 {
        return Err(CheckpointError::Format(format!(
            "weights hold {} bytes, manifest needs {}",
            blob.len(),
            expected * 4
        )));
    }
    let mut values = blob.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")));
    let params = manifest
        .iter()
        .map(|t| Array2::from_shape_fn(t.shape, |_| values.next().expect("length checked")))
        .collect();
    let model = Transducer::from_parts(meta.model.clone(), src, tgt, params).map_err(CheckpointError::Format)?;
    let names_match = model.layout().names().iter().eq(manifest.iter().map(|t| &t.name));
    if !names_match {
        return Err(CheckpointError::Format("tensor names do not match the model layout".into()));
    }
    Ok((model, meta))
}

pub fn load(path: &Path) -> Result<(Transducer<f32>, Metadata), CheckpointError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}
