//! Forward and backward passes of the transformer building blocks over
//! packed row matrices (one row per token, all sequences stacked).

use std::ops::Range;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, NdFloat, Zip};
use rand::Rng;

pub trait Float: NdFloat + num_traits::Float {}
impl<T: NdFloat + num_traits::Float> Float for T {}

pub fn cast<T: Float>(x: f64) -> T {
    <T as num_traits::NumCast>::from(x).expect("finite constant")
}

const LN_EPS: f64 = 1e-5;

/// `x·w + b` with `b` a 1×n row.
pub fn linear<T: Float>(x: &ArrayView2<T>, w: &Array2<T>, b: &Array2<T>) -> Array2<T> {
    let mut y = Array2::<T>::zeros((x.nrows(), w.ncols()));
    y.assign(&b.row(0).broadcast((x.nrows(), w.ncols())).expect("bias row"));
    general_mat_mul(T::one(), x, w, T::one(), &mut y);
    y
}

/// Accumulates weight and bias gradients and returns the input gradient.
pub fn linear_back<T: Float>(
    x: &ArrayView2<T>,
    w: &Array2<T>,
    dy: &Array2<T>,
    dw: &mut Array2<T>,
    db: &mut Array2<T>,
) -> Array2<T> {
    general_mat_mul(T::one(), &x.t(), dy, T::one(), dw);
    *db += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    dy.dot(&w.t())
}

pub struct LnCache<T> {
    xhat: Array2<T>,
    rstd: Array1<T>,
}

pub fn layer_norm<T: Float>(x: &Array2<T>, g: &Array2<T>, b: &Array2<T>) -> (Array2<T>, LnCache<T>) {
    let n = cast::<T>(x.ncols() as f64);
    let eps = cast::<T>(LN_EPS);
    let mut xhat = x.clone();
    let mut rstd = Array1::<T>::zeros(x.nrows());
    for (mut row, r) in xhat.rows_mut().into_iter().zip(rstd.iter_mut()) {
        let mean = row.sum() / n;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|&v| v * v).fold(T::zero(), |a, v| a + v) / n;
        *r = T::one() / num_traits::Float::sqrt(var + eps);
        let rr = *r;
        row.mapv_inplace(|v| v * rr);
    }
    let y = &xhat * &g.row(0) + b.row(0);
    (y, LnCache { xhat, rstd })
}

pub fn layer_norm_back<T: Float>(
    dy: &Array2<T>,
    g: &Array2<T>,
    cache: &LnCache<T>,
    dg: &mut Array2<T>,
    db: &mut Array2<T>,
) -> Array2<T> {
    *dg += &(dy * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    *db += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    let n = cast::<T>(dy.ncols() as f64);
    let dxhat = dy * &g.row(0);
    let mut dx = Array2::<T>::zeros(dy.raw_dim());
    for ((mut out, dh), (xh, &r)) in dx
        .rows_mut()
        .into_iter()
        .zip(dxhat.rows())
        .zip(cache.xhat.rows().into_iter().zip(cache.rstd.iter()))
    {
        let mean_dh = dh.sum() / n;
        let mean_dh_xh = dh.iter().zip(xh.iter()).fold(T::zero(), |a, (&p, &q)| a + p * q) / n;
        Zip::from(&mut out)
            .and(&dh)
            .and(&xh)
            .for_each(|o, &d, &h| *o = r * (d - mean_dh - h * mean_dh_xh));
    }
    dx
}

/// Parameters of one multi-head attention block.
pub struct AttnParams<'a, T> {
    pub wq: &'a Array2<T>,
    pub bq: &'a Array2<T>,
    pub wk: &'a Array2<T>,
    pub bk: &'a Array2<T>,
    pub wv: &'a Array2<T>,
    pub bv: &'a Array2<T>,
    pub wo: &'a Array2<T>,
    pub bo: &'a Array2<T>,
}

/// Gradient buffers matching [`AttnParams`].
pub struct AttnGrads<'a, T> {
    pub wq: &'a mut Array2<T>,
    pub bq: &'a mut Array2<T>,
    pub wk: &'a mut Array2<T>,
    pub bk: &'a mut Array2<T>,
    pub wv: &'a mut Array2<T>,
    pub bv: &'a mut Array2<T>,
    pub wo: &'a mut Array2<T>,
    pub bo: &'a mut Array2<T>,
}

/// Query rows attend to the key rows of the same segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub q: Range<usize>,
    pub k: Range<usize>,
}

pub struct AttnCache<T> {
    q_in: Array2<T>,
    kv_in: Array2<T>,
    q: Array2<T>,
    k: Array2<T>,
    v: Array2<T>,
    o: Array2<T>,
    /// Row-stochastic weights per (segment, head).
    pub probs: Vec<Array2<T>>,
}

/// Row-wise softmax in place; `-inf` entries get zero weight.
pub fn softmax_rows<T: Float>(m: &mut Array2<T>) {
    for mut row in m.rows_mut() {
        let max = row.iter().fold(T::neg_infinity(), |a, &v| if v > a { v } else { a });
        row.mapv_inplace(|v| num_traits::Float::exp(v - max));
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

#[allow(clippy::too_many_arguments)]
pub fn attention<T: Float>(
    q_in: &Array2<T>,
    kv_in: &Array2<T>,
    p: &AttnParams<T>,
    segments: &[Segment],
    n_heads: usize,
    causal: bool,
) -> (Array2<T>, AttnCache<T>) {
    let q = linear(&q_in.view(), p.wq, p.bq);
    let k = linear(&kv_in.view(), p.wk, p.bk);
    let v = linear(&kv_in.view(), p.wv, p.bv);
    let d = q.ncols();
    let dk = d / n_heads;
    let scale = cast::<T>(1.0 / (dk as f64).sqrt());
    let mut o = Array2::<T>::zeros(q.raw_dim());
    let mut probs = Vec::with_capacity(segments.len() * n_heads);
    for seg in segments {
        for h in 0..n_heads {
            let cols = h * dk..(h + 1) * dk;
            let qh = q.slice(s![seg.q.clone(), cols.clone()]);
            let kh = k.slice(s![seg.k.clone(), cols.clone()]);
            let vh = v.slice(s![seg.k.clone(), cols.clone()]);
            let mut sc = qh.dot(&kh.t());
            sc.mapv_inplace(|x| x * scale);
            if causal {
                for (i, mut row) in sc.rows_mut().into_iter().enumerate() {
                    for x in row.iter_mut().skip(i + 1) {
                        *x = T::neg_infinity();
                    }
                }
            }
            softmax_rows(&mut sc);
            o.slice_mut(s![seg.q.clone(), cols]).assign(&sc.dot(&vh));
            probs.push(sc);
        }
    }
    let out = linear(&o.view(), p.wo, p.bo);
    let cache = AttnCache {
        q_in: q_in.clone(),
        kv_in: kv_in.clone(),
        q,
        k,
        v,
        o,
        probs,
    };
    (out, cache)
}

/// Returns the gradients with respect to the query input and the key/value
/// input.
pub fn attention_back<T: Float>(
    dout: &Array2<T>,
    p: &AttnParams<T>,
    g: &mut AttnGrads<T>,
    cache: &AttnCache<T>,
    segments: &[Segment],
    n_heads: usize,
) -> (Array2<T>, Array2<T>) {
    let d_o = linear_back(&cache.o.view(), p.wo, dout, g.wo, g.bo);
    let d = cache.q.ncols();
    let dk = d / n_heads;
    let scale = cast::<T>(1.0 / (dk as f64).sqrt());
    let mut dq = Array2::<T>::zeros(cache.q.raw_dim());
    let mut dkm = Array2::<T>::zeros(cache.k.raw_dim());
    let mut dv = Array2::<T>::zeros(cache.v.raw_dim());
    let mut probs = cache.probs.iter();
    for seg in segments {
        for h in 0..n_heads {
            let pr = probs.next().expect("one weight matrix per segment and head");
            let cols = h * dk..(h + 1) * dk;
            let qh = cache.q.slice(s![seg.q.clone(), cols.clone()]);
            let kh = cache.k.slice(s![seg.k.clone(), cols.clone()]);
            let vh = cache.v.slice(s![seg.k.clone(), cols.clone()]);
            let doh = d_o.slice(s![seg.q.clone(), cols.clone()]);
            let dp = doh.dot(&vh.t());
            {
                let mut dvh = dv.slice_mut(s![seg.k.clone(), cols.clone()]);
                general_mat_mul(T::one(), &pr.t(), &doh, T::one(), &mut dvh);
            }
            let mut ds = &dp * pr;
            for (mut row, prow) in ds.rows_mut().into_iter().zip(pr.rows()) {
                let dot = row.sum();
                Zip::from(&mut row).and(&prow).for_each(|x, &pv| *x = (*x - pv * dot) * scale);
            }
            // ds currently holds p*dp - p*sum(p*dp), scaled
            dq.slice_mut(s![seg.q.clone(), cols.clone()]).assign(&ds.dot(&kh));
            let mut dkh = dkm.slice_mut(s![seg.k.clone(), cols]);
            general_mat_mul(T::one(), &ds.t(), &qh, T::one(), &mut dkh);
        }
    }
    let dq_in = linear_back(&cache.q_in.view(), p.wq, &dq, g.wq, g.bq);
    let mut dkv_in = linear_back(&cache.kv_in.view(), p.wk, &dkm, g.wk, g.bk);
    dkv_in += &linear_back(&cache.kv_in.view(), p.wv, &dv, g.wv, g.bv);
    (dq_in, dkv_in)
}

pub struct FfnCache<T> {
    x: Array2<T>,
    h: Array2<T>,
}

pub fn ffn<T: Float>(
    x: &Array2<T>,
    w1: &Array2<T>,
    b1: &Array2<T>,
    w2: &Array2<T>,
    b2: &Array2<T>,
) -> (Array2<T>, FfnCache<T>) {
    let mut h = linear(&x.view(), w1, b1);
    h.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
    let y = linear(&h.view(), w2, b2);
    (y, FfnCache { x: x.clone(), h })
}

#[allow(clippy::too_many_arguments)]
pub fn ffn_back<T: Float>(
    dy: &Array2<T>,
    w1: &Array2<T>,
    w2: &Array2<T>,
    cache: &FfnCache<T>,
    dw1: &mut Array2<T>,
    db1: &mut Array2<T>,
    dw2: &mut Array2<T>,
    db2: &mut Array2<T>,
) -> Array2<T> {
    let mut dh = linear_back(&cache.h.view(), w2, dy, dw2, db2);
    Zip::from(&mut dh).and(&cache.h).for_each(|d, &h| {
        if h <= T::zero() {
            *d = T::zero();
        }
    });
    linear_back(&cache.x.view(), w1, &dh, dw1, db1)
}

/// Inverted dropout; returns the scaled keep-mask when anything was dropped.
pub fn dropout<T: Float, R: Rng>(x: &mut Array2<T>, p: f64, rng: Option<&mut R>) -> Option<Array2<T>> {
    let rng = rng?;
    if p <= 0.0 {
        return None;
    }
    let keep = cast::<T>(1.0 / (1.0 - p));
    let mask = Array2::from_shape_fn(x.raw_dim(), |_| if rng.gen::<f64>() < p { T::zero() } else { keep });
    *x *= &mask;
    Some(mask)
}

pub fn dropout_back<T: Float>(dy: &mut Array2<T>, mask: &Option<Array2<T>>) {
    if let Some(m) = mask {
        *dy *= m;
    }
}

/// Mean cross-entropy of `logits` rows against `targets`, and its gradient.
pub fn cross_entropy<T: Float>(logits: &Array2<T>, targets: &[usize]) -> (T, Array2<T>) {
    let mut p = logits.clone();
    softmax_rows(&mut p);
    let n = cast::<T>(targets.len().max(1) as f64);
    let mut loss = T::zero();
    for (i, &t) in targets.iter().enumerate() {
        loss -= num_traits::Float::ln(p[[i, t]]);
        p[[i, t]] -= T::one();
    }
    p.mapv_inplace(|v| v / n);
    (loss / n, p)
}

/// Sinusoidal position encodings for positions `0..len`.
pub fn positional_encoding<T: Float>(len: usize, d: usize) -> Array2<T> {
    Array2::from_shape_fn((len, d), |(pos, i)| {
        let k = (i / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * k / d as f64);
        cast(if i % 2 == 0 { angle.sin() } else { angle.cos() })
    })
}
