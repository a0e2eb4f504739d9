//! The encoder-decoder transformer: parameters, packed forward/backward,
//! and greedy decoding.

use ndarray::{s, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ModelConfig};
use crate::ops::{self, cast, AttnGrads, AttnParams, Float, Segment};
use crate::vocab::{Vocabulary, BOS, EOS, PAD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sequence of {len} tokens exceeds max_seq_len {max}")]
    TooLong { len: usize, max: usize },
    #[error("token id {id} is outside a vocabulary of {size}")]
    BadToken { id: usize, size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct LnIdx {
    g: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct AttnIdx {
    wq: usize,
    bq: usize,
    wk: usize,
    bk: usize,
    wv: usize,
    bv: usize,
    wo: usize,
    bo: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct FfnIdx {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EncIdx {
    ln1: LnIdx,
    attn: AttnIdx,
    ln2: LnIdx,
    ffn: FfnIdx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DecIdx {
    ln1: LnIdx,
    self_attn: AttnIdx,
    ln2: LnIdx,
    cross: AttnIdx,
    ln3: LnIdx,
    ffn: FfnIdx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    Zeros,
    Ones,
    /// Normal with standard deviation d_model^-1/2.
    Embedding,
    /// Uniform in ±sqrt(6 / (fan_in + fan_out)).
    Xavier,
}

/// Names, shapes and roles of every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    names: Vec<String>,
    shapes: Vec<(usize, usize)>,
    inits: Vec<Init>,
    src_emb: usize,
    tgt_emb: usize,
    enc: Vec<EncIdx>,
    enc_ln: LnIdx,
    dec: Vec<DecIdx>,
    dec_ln: LnIdx,
    out_w: usize,
    out_b: usize,
}

struct LayoutBuilder {
    names: Vec<String>,
    shapes: Vec<(usize, usize)>,
    inits: Vec<Init>,
}

impl LayoutBuilder {
    fn add(&mut self, name: String, shape: (usize, usize), init: Init) -> usize {
        self.names.push(name);
        self.shapes.push(shape);
        self.inits.push(init);
        self.names.len() - 1
    }

    fn ln(&mut self, prefix: &str, d: usize) -> LnIdx {
        LnIdx {
            g: self.add(format!("{prefix}.gamma"), (1, d), Init::Ones),
            b: self.add(format!("{prefix}.beta"), (1, d), Init::Zeros),
        }
    }

    fn attn(&mut self, prefix: &str, d: usize) -> AttnIdx {
        let mut pair = |n: &str| {
            (
                self.add(format!("{prefix}.w{n}"), (d, d), Init::Xavier),
                self.add(format!("{prefix}.b{n}"), (1, d), Init::Zeros),
            )
        };
        let (wq, bq) = pair("q");
        let (wk, bk) = pair("k");
        let (wv, bv) = pair("v");
        let (wo, bo) = pair("o");
        AttnIdx {
            wq,
            bq,
            wk,
            bk,
            wv,
            bv,
            wo,
            bo,
        }
    }

    fn ffn(&mut self, prefix: &str, d: usize, f: usize) -> FfnIdx {
        FfnIdx {
            w1: self.add(format!("{prefix}.w1"), (d, f), Init::Xavier),
            b1: self.add(format!("{prefix}.b1"), (1, f), Init::Zeros),
            w2: self.add(format!("{prefix}.w2"), (f, d), Init::Xavier),
            b2: self.add(format!("{prefix}.b2"), (1, d), Init::Zeros),
        }
    }
}

impl Layout {
    pub fn new(cfg: &ModelConfig, src_vocab: usize, tgt_vocab: usize) -> Layout {
        let d = cfg.d_model;
        let mut b = LayoutBuilder {
            names: Vec::new(),
            shapes: Vec::new(),
            inits: Vec::new(),
        };
        let src_emb = b.add("src_embedding".into(), (src_vocab, d), Init::Embedding);
        let tgt_emb = b.add("tgt_embedding".into(), (tgt_vocab, d), Init::Embedding);
        let enc = (0..cfg.n_encoder_layers)
            .map(|l| EncIdx {
                ln1: b.ln(&format!("enc{l}.ln1"), d),
                attn: b.attn(&format!("enc{l}.self_attn"), d),
                ln2: b.ln(&format!("enc{l}.ln2"), d),
                ffn: b.ffn(&format!("enc{l}.ffn"), d, cfg.d_ffn),
            })
            .collect();
        let enc_ln = b.ln("enc.ln", d);
        let dec = (0..cfg.n_decoder_layers)
            .map(|l| DecIdx {
                ln1: b.ln(&format!("dec{l}.ln1"), d),
                self_attn: b.attn(&format!("dec{l}.self_attn"), d),
                ln2: b.ln(&format!("dec{l}.ln2"), d),
                cross: b.attn(&format!("dec{l}.cross_attn"), d),
                ln3: b.ln(&format!("dec{l}.ln3"), d),
                ffn: b.ffn(&format!("dec{l}.ffn"), d, cfg.d_ffn),
            })
            .collect();
        let dec_ln = b.ln("dec.ln", d);
        let out_w = b.add("out.w".into(), (d, tgt_vocab), Init::Xavier);
        let out_b = b.add("out.b".into(), (1, tgt_vocab), Init::Zeros);
        Layout {
            names: b.names,
            shapes: b.shapes,
            inits: b.inits,
            src_emb,
            tgt_emb,
            enc,
            enc_ln,
            dec,
            dec_ln,
            out_w,
            out_b,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn shapes(&self) -> &[(usize, usize)] {
        &self.shapes
    }

    pub fn zeros<T: Float>(&self) -> Vec<Array2<T>> {
        self.shapes.iter().map(|&s| Array2::zeros(s)).collect()
    }
}

/// The decoder inputs and outputs built from a source/target id pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub src: Vec<usize>,
    pub tgt: Vec<usize>,
}

fn strip_padding(ids: &[usize]) -> &[usize] {
    let end = ids.iter().rposition(|&i| i != PAD).map_or(0, |p| p + 1);
    &ids[..end]
}

/// Several examples stacked into rows: source tokens (with EOS), decoder
/// inputs (BOS + target) and decoder outputs (target + EOS).
struct Packed {
    src_ids: Vec<usize>,
    src_pos: Vec<usize>,
    tgt_in: Vec<usize>,
    tgt_out: Vec<usize>,
    tgt_pos: Vec<usize>,
    enc_segments: Vec<Segment>,
    dec_segments: Vec<Segment>,
    cross_segments: Vec<Segment>,
}

fn pack(examples: &[(&[usize], &[usize])]) -> Packed {
    let mut p = Packed {
        src_ids: Vec::new(),
        src_pos: Vec::new(),
        tgt_in: Vec::new(),
        tgt_out: Vec::new(),
        tgt_pos: Vec::new(),
        enc_segments: Vec::new(),
        dec_segments: Vec::new(),
        cross_segments: Vec::new(),
    };
    for (src, tgt) in examples {
        let (src, tgt) = (strip_padding(src), strip_padding(tgt));
        let s0 = p.src_ids.len();
        p.src_ids.extend_from_slice(src);
        p.src_ids.push(EOS);
        p.src_pos.extend(0..=src.len());
        let t0 = p.tgt_in.len();
        p.tgt_in.push(BOS);
        p.tgt_in.extend_from_slice(tgt);
        p.tgt_out.extend_from_slice(tgt);
        p.tgt_out.push(EOS);
        p.tgt_pos.extend(0..=tgt.len());
        let sr = s0..p.src_ids.len();
        let tr = t0..p.tgt_in.len();
        p.enc_segments.push(Segment {
            q: sr.clone(),
            k: sr.clone(),
        });
        p.dec_segments.push(Segment {
            q: tr.clone(),
            k: tr.clone(),
        });
        p.cross_segments.push(Segment { q: tr, k: sr });
    }
    p
}

struct EncLayerCache<T> {
    ln1: ops::LnCache<T>,
    attn: ops::AttnCache<T>,
    drop1: Option<Array2<T>>,
    ln2: ops::LnCache<T>,
    ffn: ops::FfnCache<T>,
    drop2: Option<Array2<T>>,
}

struct DecLayerCache<T> {
    ln1: ops::LnCache<T>,
    self_attn: ops::AttnCache<T>,
    drop1: Option<Array2<T>>,
    ln2: ops::LnCache<T>,
    cross: ops::AttnCache<T>,
    drop2: Option<Array2<T>>,
    ln3: ops::LnCache<T>,
    ffn: ops::FfnCache<T>,
    drop3: Option<Array2<T>>,
}

struct Encoded<T> {
    memory: Array2<T>,
    src_drop: Option<Array2<T>>,
    enc: Vec<EncLayerCache<T>>,
    enc_ln: ops::LnCache<T>,
}

struct ForwardCache<T> {
    src_drop: Option<Array2<T>>,
    enc: Vec<EncLayerCache<T>>,
    enc_ln: ops::LnCache<T>,
    tgt_drop: Option<Array2<T>>,
    dec: Vec<DecLayerCache<T>>,
    dec_ln: ops::LnCache<T>,
    dec_out: Array2<T>,
}

/// Options for one forward pass.
pub struct Pass<'a> {
    /// Dropout randomness; `None` runs deterministically without dropout.
    pub rng: Option<&'a mut ChaCha8Rng>,
    /// Mask future positions in decoder self-attention.
    pub causal: bool,
}

impl Pass<'_> {
    pub fn eval() -> Pass<'static> {
        Pass {
            rng: None,
            causal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transducer<T: Float> {
    config: ModelConfig,
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    layout: Layout,
    params: Vec<Array2<T>>,
}

fn attn_params<T: Float>(p: &[Array2<T>], i: AttnIdx) -> AttnParams<'_, T> {
    AttnParams {
        wq: &p[i.wq],
        bq: &p[i.bq],
        wk: &p[i.wk],
        bk: &p[i.bk],
        wv: &p[i.wv],
        bv: &p[i.bv],
        wo: &p[i.wo],
        bo: &p[i.bo],
    }
}

/// Mutable borrows of eight distinct gradient tensors.
fn attn_grads<T: Float>(g: &mut [Array2<T>], i: AttnIdx) -> AttnGrads<'_, T> {
    let idx = [i.wq, i.bq, i.wk, i.bk, i.wv, i.bv, i.wo, i.bo];
    let mut slots: Vec<Option<&mut Array2<T>>> = g.iter_mut().map(Some).collect();
    let mut take = |k: usize| slots[idx[k]].take().expect("distinct parameter indices");
    AttnGrads {
        wq: take(0),
        bq: take(1),
        wk: take(2),
        bk: take(3),
        wv: take(4),
        bv: take(5),
        wo: take(6),
        bo: take(7),
    }
}

fn two_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert!(a < b);
    let (lo, hi) = v.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}

fn four_mut<T>(v: &mut [T], idx: [usize; 4]) -> [&mut T; 4] {
    let mut slots: Vec<Option<&mut T>> = v.iter_mut().map(Some).collect();
    idx.map(|i| slots[i].take().expect("distinct parameter indices"))
}

impl<T: Float> Transducer<T> {
    /// A freshly initialized model; the same seed gives the same weights.
    pub fn new(config: ModelConfig, src_vocab: Vocabulary, tgt_vocab: Vocabulary, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = Layout::new(&config, src_vocab.len(), tgt_vocab.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.d_model as f64;
        let params = layout
            .shapes
            .iter()
            .zip(&layout.inits)
            .map(|(&(r, c), init)| match init {
                Init::Zeros => Array2::zeros((r, c)),
                Init::Ones => Array2::ones((r, c)),
                Init::Embedding => {
                    let sd = d.powf(-0.5);
                    Array2::from_shape_fn((r, c), |_| cast(sd * standard_normal(&mut rng)))
                }
                Init::Xavier => {
                    let a = (6.0 / (r + c) as f64).sqrt();
                    Array2::from_shape_fn((r, c), |_| cast(rng.gen_range(-a..a)))
                }
            })
            .collect();
        Ok(Transducer {
            config,
            src_vocab,
            tgt_vocab,
            layout,
            params,
        })
    }

    /// Reassembles a model from stored parts; shapes must match the layout.
    pub fn from_parts(
        config: ModelConfig,
        src_vocab: Vocabulary,
        tgt_vocab: Vocabulary,
        params: Vec<Array2<T>>,
    ) -> Result<Self, String> {
        config.validate().map_err(|e| e.to_string())?;
        let layout = Layout::new(&config, src_vocab.len(), tgt_vocab.len());
        if params.len() != layout.shapes.len() {
            return Err(format!("expected {} tensors, found {}", layout.shapes.len(), params.len()));
        }
        for ((p, &shape), name) in params.iter().zip(&layout.shapes).zip(&layout.names) {
            if p.dim() != shape {
                return Err(format!("{name}: expected shape {shape:?}, found {:?}", p.dim()));
            }
        }
        Ok(Transducer {
            config,
            src_vocab,
            tgt_vocab,
            layout,
            params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn src_vocab(&self) -> &Vocabulary {
        &self.src_vocab
    }

    pub fn tgt_vocab(&self) -> &Vocabulary {
        &self.tgt_vocab
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[Array2<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Array2<T>] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    /// Converts every parameter to another float type.
    pub fn cast<U: Float>(&self) -> Transducer<U> {
        Transducer {
            config: self.config.clone(),
            src_vocab: self.src_vocab.clone(),
            tgt_vocab: self.tgt_vocab.clone(),
            layout: self.layout.clone(),
            params: self
                .params
                .iter()
                .map(|p| p.mapv(|v| cast::<U>(num_traits::ToPrimitive::to_f64(&v).unwrap_or(0.0))))
                .collect(),
        }
    }

    /// Source/target token ids of a text pair.
    pub fn example(&self, src: &str, tgt: &str) -> Example {
        Example {
            src: self.src_vocab.encode(src),
            tgt: self.tgt_vocab.encode(tgt),
        }
    }

    fn check(&self, examples: &[(&[usize], &[usize])]) -> Result<(), ModelError> {
        let max = self.config.max_seq_len;
        for (s, t) in examples {
            let (s, t) = (strip_padding(s), strip_padding(t));
            for (ids, size) in [(s, self.src_vocab.len()), (t, self.tgt_vocab.len())] {
                if ids.len() + 1 > max {
                    return Err(ModelError::TooLong { len: ids.len() + 1, max });
                }
                if let Some(&id) = ids.iter().find(|&&i| i >= size) {
                    return Err(ModelError::BadToken { id, size });
                }
            }
        }
        Ok(())
    }

    fn embed(&self, table: usize, ids: &[usize], pos: &[usize]) -> Array2<T> {
        let d = self.config.d_model;
        let max_pos = pos.iter().copied().max().map_or(0, |m| m + 1);
        let pe = ops::positional_encoding::<T>(max_pos, d);
        let scale = cast::<T>((d as f64).sqrt());
        let emb = &self.params[table];
        let mut x = Array2::<T>::zeros((ids.len(), d));
        for (r, (&id, &p)) in ids.iter().zip(pos).enumerate() {
            let mut row = x.row_mut(r);
            row.assign(&emb.row(id));
            row.mapv_inplace(|v| v * scale);
            row += &pe.row(p);
        }
        x
    }

    fn encode(&self, b: &Packed, pass: &mut Pass) -> Encoded<T> {
        let p = &self.params;
        let h = self.config.n_heads;
        let drop = self.config.dropout;
        let mut x = self.embed(self.layout.src_emb, &b.src_ids, &b.src_pos);
        let src_drop = ops::dropout(&mut x, drop, pass.rng.as_deref_mut());
        let mut enc = Vec::with_capacity(self.layout.enc.len());
        for l in &self.layout.enc {
            let (a, ln1) = ops::layer_norm(&x, &p[l.ln1.g], &p[l.ln1.b]);
            let (mut att, attn) = ops::attention(&a, &a, &attn_params(p, l.attn), &b.enc_segments, h, false);
            let drop1 = ops::dropout(&mut att, drop, pass.rng.as_deref_mut());
            x += &att;
            let (c, ln2) = ops::layer_norm(&x, &p[l.ln2.g], &p[l.ln2.b]);
            let (mut f, ffn) = ops::ffn(&c, &p[l.ffn.w1], &p[l.ffn.b1], &p[l.ffn.w2], &p[l.ffn.b2]);
            let drop2 = ops::dropout(&mut f, drop, pass.rng.as_deref_mut());
            x += &f;
            enc.push(EncLayerCache {
                ln1,
                attn,
                drop1,
                ln2,
                ffn,
                drop2,
            });
        }
        let (memory, enc_ln) = ops::layer_norm(&x, &p[self.layout.enc_ln.g], &p[self.layout.enc_ln.b]);
        Encoded {
            memory,
            src_drop,
            enc,
            enc_ln,
        }
    }

    fn forward_packed(&self, b: &Packed, pass: &mut Pass) -> (Array2<T>, ForwardCache<T>) {
        let p = &self.params;
        let h = self.config.n_heads;
        let drop = self.config.dropout;
        let Encoded {
            memory,
            src_drop,
            enc,
            enc_ln,
        } = self.encode(b, pass);

        let mut y = self.embed(self.layout.tgt_emb, &b.tgt_in, &b.tgt_pos);
        let tgt_drop = ops::dropout(&mut y, drop, pass.rng.as_deref_mut());
        let mut dec = Vec::with_capacity(self.layout.dec.len());
        for l in &self.layout.dec {
            let (a, ln1) = ops::layer_norm(&y, &p[l.ln1.g], &p[l.ln1.b]);
            let (mut att, self_attn) =
                ops::attention(&a, &a, &attn_params(p, l.self_attn), &b.dec_segments, h, pass.causal);
            let drop1 = ops::dropout(&mut att, drop, pass.rng.as_deref_mut());
            y += &att;
            let (c, ln2) = ops::layer_norm(&y, &p[l.ln2.g], &p[l.ln2.b]);
            let (mut cr, cross) = ops::attention(&c, &memory, &attn_params(p, l.cross), &b.cross_segments, h, false);
            let drop2 = ops::dropout(&mut cr, drop, pass.rng.as_deref_mut());
            y += &cr;
            let (e, ln3) = ops::layer_norm(&y, &p[l.ln3.g], &p[l.ln3.b]);
            let (mut f, ffn) = ops::ffn(&e, &p[l.ffn.w1], &p[l.ffn.b1], &p[l.ffn.w2], &p[l.ffn.b2]);
            let drop3 = ops::dropout(&mut f, drop, pass.rng.as_deref_mut());
            y += &f;
            dec.push(DecLayerCache {
                ln1,
                self_attn,
                drop1,
                ln2,
                cross,
                drop2,
                ln3,
                ffn,
                drop3,
            });
        }
        let (dec_out, dec_ln) = ops::layer_norm(&y, &p[self.layout.dec_ln.g], &p[self.layout.dec_ln.b]);
        let logits = ops::linear(&dec_out.view(), &p[self.layout.out_w], &p[self.layout.out_b]);
        let cache = ForwardCache {
            src_drop,
            enc,
            enc_ln,
            tgt_drop,
            dec,
            dec_ln,
            dec_out,
        };
        (logits, cache)
    }

    fn backward_packed(&self, b: &Packed, cache: &ForwardCache<T>, dlogits: &Array2<T>) -> Vec<Array2<T>> {
        let p = &self.params;
        let lay = &self.layout;
        let h = self.config.n_heads;
        let mut g = lay.zeros::<T>();

        let mut dy = {
            let (dw, db) = two_mut(&mut g, lay.out_w, lay.out_b);
            ops::linear_back(&cache.dec_out.view(), &p[lay.out_w], dlogits, dw, db)
        };
        dy = {
            let (dg, db) = two_mut(&mut g, lay.dec_ln.g, lay.dec_ln.b);
            ops::layer_norm_back(&dy, &p[lay.dec_ln.g], &cache.dec_ln, dg, db)
        };
        let mut dmemory = Array2::<T>::zeros((b.src_ids.len(), self.config.d_model));
        for (l, c) in lay.dec.iter().zip(&cache.dec).rev() {
            // feed-forward sublayer
            let mut df = dy.clone();
            ops::dropout_back(&mut df, &c.drop3);
            let de = {
                let [w1, b1, w2, b2] = four_mut(&mut g, [l.ffn.w1, l.ffn.b1, l.ffn.w2, l.ffn.b2]);
                ops::ffn_back(&df, &p[l.ffn.w1], &p[l.ffn.w2], &c.ffn, w1, b1, w2, b2)
            };
            dy += &{
                let (dg, db) = two_mut(&mut g, l.ln3.g, l.ln3.b);
                ops::layer_norm_back(&de, &p[l.ln3.g], &c.ln3, dg, db)
            };
            // cross-attention sublayer
            let mut dcr = dy.clone();
            ops::dropout_back(&mut dcr, &c.drop2);
            let (dc, dmem) = {
                let mut ag = attn_grads(&mut g, l.cross);
                ops::attention_back(&dcr, &attn_params(p, l.cross), &mut ag, &c.cross, &b.cross_segments, h)
            };
            dmemory += &dmem;
            dy += &{
                let (dg, db) = two_mut(&mut g, l.ln2.g, l.ln2.b);
                ops::layer_norm_back(&dc, &p[l.ln2.g], &c.ln2, dg, db)
            };
            // self-attention sublayer
            let mut datt = dy.clone();
            ops::dropout_back(&mut datt, &c.drop1);
            let (dq, dkv) = {
                let mut ag = attn_grads(&mut g, l.self_attn);
                ops::attention_back(&datt, &attn_params(p, l.self_attn), &mut ag, &c.self_attn, &b.dec_segments, h)
            };
            let da = dq + dkv;
            dy += &{
                let (dg, db) = two_mut(&mut g, l.ln1.g, l.ln1.b);
                ops::layer_norm_back(&da, &p[l.ln1.g], &c.ln1, dg, db)
            };
        }
        ops::dropout_back(&mut dy, &cache.tgt_drop);
        self.embed_back(&mut g[lay.tgt_emb], &b.tgt_in, &dy);

        let mut dx = {
            let (dg, db) = two_mut(&mut g, lay.enc_ln.g, lay.enc_ln.b);
            ops::layer_norm_back(&dmemory, &p[lay.enc_ln.g], &cache.enc_ln, dg, db)
        };
        for (l, c) in lay.enc.iter().zip(&cache.enc).rev() {
            let mut df = dx.clone();
            ops::dropout_back(&mut df, &c.drop2);
            let dc = {
                let [w1, b1, w2, b2] = four_mut(&mut g, [l.ffn.w1, l.ffn.b1, l.ffn.w2, l.ffn.b2]);
                ops::ffn_back(&df, &p[l.ffn.w1], &p[l.ffn.w2], &c.ffn, w1, b1, w2, b2)
            };
            dx += &{
                let (dg, db) = two_mut(&mut g, l.ln2.g, l.ln2.b);
                ops::layer_norm_back(&dc, &p[l.ln2.g], &c.ln2, dg, db)
            };
            let mut datt = dx.clone();
            ops::dropout_back(&mut datt, &c.drop1);
            let (dq, dkv) = {
                let mut ag = attn_grads(&mut g, l.attn);
                ops::attention_back(&datt, &attn_params(p, l.attn), &mut ag, &c.attn, &b.enc_segments, h)
            };
            let da = dq + dkv;
            dx += &{
                let (dg, db) = two_mut(&mut g, l.ln1.g, l.ln1.b);
                ops::layer_norm_back(&da, &p[l.ln1.g], &c.ln1, dg, db)
            };
        }
        ops::dropout_back(&mut dx, &cache.src_drop);
        self.embed_back(&mut g[lay.src_emb], &b.src_ids, &dx);
        g
    }

    fn embed_back(&self, grad: &mut Array2<T>, ids: &[usize], dx: &Array2<T>) {
        let scale = cast::<T>((self.config.d_model as f64).sqrt());
        for (&id, row) in ids.iter().zip(dx.rows()) {
            let mut g = grad.row_mut(id);
            g.scaled_add(scale, &row);
        }
    }

    /// Decoder logits for teacher-forced targets: one row per target token
    /// plus one for EOS, per example.
    pub fn logits(&self, src: &[usize], tgt: &[usize]) -> Result<Array2<T>, ModelError> {
        self.check(&[(src, tgt)])?;
        let b = pack(&[(src, tgt)]);
        Ok(self.forward_packed(&b, &mut Pass::eval()).0)
    }

    /// Mean token cross-entropy over all examples. Trailing PAD ids are
    /// ignored.
    pub fn loss(&self, examples: &[(&[usize], &[usize])], pass: &mut Pass) -> Result<T, ModelError> {
        self.check(examples)?;
        let b = pack(examples);
        let (logits, _) = self.forward_packed(&b, pass);
        Ok(ops::cross_entropy(&logits, &b.tgt_out).0)
    }

    /// Loss and its gradient with respect to every parameter tensor.
    pub fn loss_and_grad(
        &self,
        examples: &[(&[usize], &[usize])],
        pass: &mut Pass,
    ) -> Result<(T, Vec<Array2<T>>), ModelError> {
        self.check(examples)?;
        let b = pack(examples);
        let (logits, cache) = self.forward_packed(&b, pass);
        let (loss, dlogits) = ops::cross_entropy(&logits, &b.tgt_out);
        Ok((loss, self.backward_packed(&b, &cache, &dlogits)))
    }

    /// Attention weight matrices of every layer for one example, encoder
    /// first, then decoder self- and cross-attention per layer.
    pub fn attention_weights(&self, src: &[usize], tgt: &[usize]) -> Result<Vec<Array2<T>>, ModelError> {
        self.check(&[(src, tgt)])?;
        let b = pack(&[(src, tgt)]);
        let (_, cache) = self.forward_packed(&b, &mut Pass::eval());
        let mut out = Vec::new();
        for c in &cache.enc {
            out.extend(c.attn.probs.iter().cloned());
        }
        for c in &cache.dec {
            out.extend(c.self_attn.probs.iter().cloned());
            out.extend(c.cross.probs.iter().cloned());
        }
        Ok(out)
    }

    /// Greedy decoding of one text.
    pub fn decode(&self, src: &str, max_len: Option<usize>) -> String {
        self.decode_batch(&[src], max_len).pop().unwrap_or_default()
    }

    /// Greedy decoding of several texts at once. The output stops at EOS,
    /// after `max_len` graphemes (default twice the source length plus 10),
    /// or at the model's sequence limit.
    pub fn decode_batch(&self, sources: &[&str], max_len: Option<usize>) -> Vec<String> {
        let ids: Vec<Vec<usize>> = sources.iter().map(|s| self.src_vocab.encode(s)).collect();
        self.decode_ids(&ids, max_len)
            .iter()
            .map(|out| self.tgt_vocab.decode(out))
            .collect()
    }

    /// Greedy decoding over id sequences; returns target ids without EOS.
    /// Trailing PAD ids in the sources are ignored.
    pub fn decode_ids(&self, sources: &[Vec<usize>], max_len: Option<usize>) -> Vec<Vec<usize>> {
        let limit = self.config.max_seq_len;
        let srcs: Vec<Vec<usize>> = sources
            .iter()
            .map(|s| {
                let mut s: Vec<usize> = strip_padding(s)
                    .iter()
                    .map(|&i| if i < self.src_vocab.len() { i } else { crate::vocab::UNK })
                    .collect();
                s.truncate(limit.saturating_sub(1));
                s
            })
            .collect();
        if srcs.is_empty() {
            return Vec::new();
        }
        let examples: Vec<(&[usize], &[usize])> = srcs.iter().map(|s| (s.as_slice(), &[][..])).collect();
        let b = pack(&examples);
        let memory = self.encode(&b, &mut Pass::eval()).memory;
        // nothing to transliterate means nothing to emit
        let caps: Vec<usize> = srcs
            .iter()
            .map(|s| if s.is_empty() { 0 } else { max_len.unwrap_or(2 * s.len() + 10).min(limit.saturating_sub(1)) })
            .collect();
        IncrementalDecoder::new(self, &memory, &b.enc_segments).run(&caps)
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Keys and values for each step decoded so far.
type StepCache<T> = (Vec<Array2<T>>, Vec<Array2<T>>);

/// Step-by-step greedy decoder that keeps every layer's keys and values.
struct IncrementalDecoder<'m, T: Float> {
    model: &'m Transducer<T>,
    /// Per decoder layer, per sequence: cross-attention keys and values.
    cross_kv: Vec<Vec<(Array2<T>, Array2<T>)>>,
    /// Per decoder layer, per sequence: self-attention keys and values so far.
    self_kv: Vec<Vec<StepCache<T>>>,
}

impl<'m, T: Float> IncrementalDecoder<'m, T> {
    fn new(model: &'m Transducer<T>, memory: &Array2<T>, segments: &[Segment]) -> Self {
        let p = &model.params;
        let cross_kv = model
            .layout
            .dec
            .iter()
            .map(|l| {
                let k = ops::linear(&memory.view(), &p[l.cross.wk], &p[l.cross.bk]);
                let v = ops::linear(&memory.view(), &p[l.cross.wv], &p[l.cross.bv]);
                segments
                    .iter()
                    .map(|s| (k.slice(s![s.k.clone(), ..]).to_owned(), v.slice(s![s.k.clone(), ..]).to_owned()))
                    .collect()
            })
            .collect();
        let self_kv = model
            .layout
            .dec
            .iter()
            .map(|_| segments.iter().map(|_| (Vec::new(), Vec::new())).collect())
            .collect();
        IncrementalDecoder {
            model,
            cross_kv,
            self_kv,
        }
    }

    fn attend(q: &Array2<T>, k: &Array2<T>, v: &Array2<T>, n_heads: usize) -> Array2<T> {
        let dk = q.ncols() / n_heads;
        let scale = cast::<T>(1.0 / (dk as f64).sqrt());
        let mut o = Array2::<T>::zeros((1, q.ncols()));
        for h in 0..n_heads {
            let cols = h * dk..(h + 1) * dk;
            let mut sc = q.slice(s![.., cols.clone()]).dot(&k.slice(s![.., cols.clone()]).t());
            sc.mapv_inplace(|x| x * scale);
            ops::softmax_rows(&mut sc);
            o.slice_mut(s![.., cols.clone()]).assign(&sc.dot(&v.slice(s![.., cols])));
        }
        o
    }

    fn run(mut self, caps: &[usize]) -> Vec<Vec<usize>> {
        let m = self.model;
        let p = &m.params;
        let d = m.config.d_model;
        let h = m.config.n_heads;
        let n = caps.len();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut last = vec![BOS; n];
        let mut active: Vec<usize> = (0..n).filter(|&i| caps[i] > 0).collect();
        let mut step = 0;
        while !active.is_empty() {
            let ids: Vec<usize> = active.iter().map(|&i| last[i]).collect();
            let pos = vec![step; active.len()];
            let mut y = m.embed(m.layout.tgt_emb, &ids, &pos);
            for (li, l) in m.layout.dec.iter().enumerate() {
                let (a, _) = ops::layer_norm(&y, &p[l.ln1.g], &p[l.ln1.b]);
                let q = ops::linear(&a.view(), &p[l.self_attn.wq], &p[l.self_attn.bq]);
                let k = ops::linear(&a.view(), &p[l.self_attn.wk], &p[l.self_attn.bk]);
                let v = ops::linear(&a.view(), &p[l.self_attn.wv], &p[l.self_attn.bv]);
                let mut o = Array2::<T>::zeros((active.len(), d));
                for (r, &seq) in active.iter().enumerate() {
                    let (ks, vs) = &mut self.self_kv[li][seq];
                    ks.push(k.slice(s![r..r + 1, ..]).to_owned());
                    vs.push(v.slice(s![r..r + 1, ..]).to_owned());
                    let kk = ndarray::concatenate(Axis(0), &ks.iter().map(|x| x.view()).collect::<Vec<_>>())
                        .expect("rows of equal width");
                    let vv = ndarray::concatenate(Axis(0), &vs.iter().map(|x| x.view()).collect::<Vec<_>>())
                        .expect("rows of equal width");
                    let qr = q.slice(s![r..r + 1, ..]).to_owned();
                    o.row_mut(r).assign(&Self::attend(&qr, &kk, &vv, h).row(0));
                }
                y += &ops::linear(&o.view(), &p[l.self_attn.wo], &p[l.self_attn.bo]);
                let (c, _) = ops::layer_norm(&y, &p[l.ln2.g], &p[l.ln2.b]);
                let q = ops::linear(&c.view(), &p[l.cross.wq], &p[l.cross.bq]);
                let mut o = Array2::<T>::zeros((active.len(), d));
                for (r, &seq) in active.iter().enumerate() {
                    let (kk, vv) = &self.cross_kv[li][seq];
                    let qr = q.slice(s![r..r + 1, ..]).to_owned();
                    o.row_mut(r).assign(&Self::attend(&qr, kk, vv, h).row(0));
                }
                y += &ops::linear(&o.view(), &p[l.cross.wo], &p[l.cross.bo]);
                let (e, _) = ops::layer_norm(&y, &p[l.ln3.g], &p[l.ln3.b]);
                let (f, _) = ops::ffn(&e, &p[l.ffn.w1], &p[l.ffn.b1], &p[l.ffn.w2], &p[l.ffn.b2]);
                y += &f;
            }
            let (z, _) = ops::layer_norm(&y, &p[m.layout.dec_ln.g], &p[m.layout.dec_ln.b]);
            let logits = ops::linear(&z.view(), &p[m.layout.out_w], &p[m.layout.out_b]);
            let mut still = Vec::with_capacity(active.len());
            for (r, &seq) in active.iter().enumerate() {
                let row = logits.row(r);
                // PAD and BOS never appear in targets
                let mut best = EOS;
                for (j, &v) in row.iter().enumerate().skip(EOS + 1) {
                    if v > row[best] {
                        best = j;
                    }
                }
                if best == EOS {
                    continue;
                }
                out[seq].push(best);
                last[seq] = best;
                if out[seq].len() < caps[seq] {
                    still.push(seq);
                }
            }
            active = still;
            step += 1;
        }
        out
    }
}
