//! Per-chunk forward operations.
//!
//! A chunk of `K·L + L` input samples per ear flows through five stages:
//!
//! 1. [`project_in`] — strided dual-channel conv (kernel `2L`, hop `L`,
//!    ReLU) producing `K` latent frames; frame `K−1` reads the `L`
//!    lookahead samples.
//! 2. [`encode_chunk`] — the dilated-causal-conv stack. Each layer keeps
//!    the `2·2^j` most recent *input* frames in [`EncoderState`], so a
//!    chunk is encoded exactly as if the full history were recomputed
//!    ([`encode_full_history`] is that reference path).
//! 3. [`decode_mask`] — one transformer decoder layer attending over the
//!    previous and current encoded chunks (2K frames, no causal mask, no
//!    positional encoding). The query side is the encoding gated by the
//!    label embedding; the memory side is the raw encoding. Output: the
//!    last K frames, used as a multiplicative mask.
//! 4. [`apply_mask`] — elementwise gate.
//! 5. [`project_out`] — transposed conv (kernel `L`, hop `L`) back to
//!    `2 × K·L` samples.
//!
//! All arithmetic is `f32`, including accumulations, matching the
//! deployment target. Blocks are stored frame-major, so every inner loop
//! below is a dot product over two contiguous slices.

use super::config::ModelConfig;
use super::weights::WeightBundle;
use crate::error::{Error, Result};
use crate::ontology::QueryVector;

const LAYER_NORM_EPS: f32 = 1e-5;

/// A `D × K` block of latent frames, stored frame-major: frame `t` is the
/// contiguous slice `data[t·D .. (t+1)·D]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentBlock {
    d: usize,
    k: usize,
    data: Vec<f32>,
}

impl LatentBlock {
    pub fn zeros(d: usize, k: usize) -> Self {
        Self { d, k, data: vec![0.0; d * k] }
    }

    pub fn from_data(d: usize, k: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != d * k {
            return Err(Error::Shape(format!(
                "latent block {d}×{k} needs {} values, got {}",
                d * k,
                data.len()
            )));
        }
        Ok(Self { d, k, data })
    }

    /// Channels per frame (D).
    pub fn d(&self) -> usize {
        self.d
    }

    /// Frame count (K).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.data[t * self.d..(t + 1) * self.d]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f32] {
        &mut self.data[t * self.d..(t + 1) * self.d]
    }

    /// Channel `c` at frame `t`.
    pub fn get(&self, c: usize, t: usize) -> f32 {
        self.data[t * self.d + c]
    }

    pub fn set(&mut self, c: usize, t: usize, v: f32) {
        self.data[t * self.d + c] = v;
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Concatenate blocks along the frame axis.
    pub fn concat(blocks: &[&LatentBlock]) -> Result<Self> {
        let d = blocks.first().map_or(0, |b| b.d);
        if blocks.iter().any(|b| b.d != d) {
            return Err(Error::Shape("latent blocks differ in channel count".into()));
        }
        let k = blocks.iter().map(|b| b.k).sum();
        let mut data = Vec::with_capacity(d * k);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(Self { d, k, data })
    }

    pub fn max_abs_diff(&self, other: &LatentBlock) -> f32 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }
}

/// Rolling per-layer context for the dilated encoder: layer `j` holds its
/// `2·2^j` most recent input frames (zeros at stream start).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState {
    pub(crate) ctxs: Vec<Vec<f32>>,
    d: usize,
}

impl EncoderState {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let d = cfg.latent_dim;
        let ctxs = (0..cfg.enc_layers).map(|j| vec![0.0; 2 * (1 << j) * d]).collect();
        Self { ctxs, d }
    }

    /// Frames cached across all layers (2046 for the default config).
    pub fn total_context_frames(&self) -> usize {
        self.ctxs.iter().map(|c| c.len() / self.d).sum()
    }
}

/// The decoder's memory of the previous chunk: the *unconditioned*
/// encoder output `e_{k−1}` (zeros before the first chunk).
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub(crate) prev: LatentBlock,
}

impl DecoderState {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        Self { prev: LatentBlock::zeros(cfg.latent_dim, cfg.chunk_frames) }
    }

    pub fn prev(&self) -> &LatentBlock {
        &self.prev
    }
}

/// Dot product over two equal-length slices with four accumulators; the
/// fixed association keeps results reproducible run to run while letting
/// the loop vectorize.
#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = [0.0f32; 4];
    let ac = a.chunks_exact(4);
    let bc = b.chunks_exact(4);
    let ra = ac.remainder();
    let rb = bc.remainder();
    for (ca, cb) in ac.zip(bc) {
        s[0] += ca[0] * cb[0];
        s[1] += ca[1] * cb[1];
        s[2] += ca[2] * cb[2];
        s[3] += ca[3] * cb[3];
    }
    let mut total = (s[0] + s[1]) + (s[2] + s[3]);
    for (x, y) in ra.iter().zip(rb) {
        total += x * y;
    }
    total
}

/// `out[i] = bias[i] + row_i(w) · x` for a row-major `out.len() × x.len()`
/// matrix.
#[inline]
fn matvec(w: &[f32], bias: &[f32], x: &[f32], out: &mut [f32]) {
    let cols = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = bias[i] + dot(&w[i * cols..(i + 1) * cols], x);
    }
}

/// Latent frames for one chunk of dual-channel audio.
///
/// `left` and `right` must each hold exactly `K·L + L` samples (the chunk
/// plus lookahead). Frame `i` applies the `[D, 2, 2L]` kernel over samples
/// `[i·L, i·L + 2L)` of both channels, adds the bias and applies ReLU.
pub fn project_in(w: &WeightBundle, left: &[f32], right: &[f32]) -> Result<LatentBlock> {
    let cfg = w.config();
    let expected = cfg.input_samples();
    if left.len() != expected || right.len() != expected {
        return Err(Error::Shape(format!(
            "project_in expects {expected} samples per channel, got {} / {}",
            left.len(),
            right.len()
        )));
    }
    let d = cfg.latent_dim;
    let l = cfg.stride;
    let k = cfg.chunk_frames;
    let weight = &w.tensor("in_proj.weight").data;
    let bias = &w.tensor("in_proj.bias").data;

    let mut block = LatentBlock::zeros(d, k);
    for i in 0..k {
        let lwin = &left[i * l..i * l + 2 * l];
        let rwin = &right[i * l..i * l + 2 * l];
        let frame = block.frame_mut(i);
        for (dout, f) in frame.iter_mut().enumerate() {
            let row = &weight[dout * 4 * l..(dout + 1) * 4 * l];
            let acc = bias[dout] + dot(&row[..2 * l], lwin) + dot(&row[2 * l..], rwin);
            *f = acc.max(0.0);
        }
    }
    Ok(block)
}

/// One dilated causal conv layer with residual and ReLU over an extended
/// buffer `ext` of `2·dilation` history frames followed by `n_out` input
/// frames. Output frame `t` reads `ext` frames `t`, `t + dilation` and
/// `t + 2·dilation` (i.e. input frames `t − 2·dilation`, `t − dilation`,
/// `t`) and adds input frame `t` as the residual.
fn dilated_layer(
    taps: [&[f32]; 3],
    bias: &[f32],
    ext: &[f32],
    d: usize,
    dilation: usize,
    n_out: usize,
) -> Vec<f32> {
    debug_assert_eq!(ext.len(), (2 * dilation + n_out) * d);
    let mut out = vec![0.0f32; n_out * d];
    for t in 0..n_out {
        let srcs = [
            &ext[t * d..(t + 1) * d],
            &ext[(t + dilation) * d..(t + dilation + 1) * d],
            &ext[(t + 2 * dilation) * d..(t + 2 * dilation + 1) * d],
        ];
        let residual = &ext[(t + 2 * dilation) * d..(t + 2 * dilation + 1) * d];
        let frame = &mut out[t * d..(t + 1) * d];
        for (dout, o) in frame.iter_mut().enumerate() {
            let mut acc = bias[dout];
            for (tap, src) in taps.iter().zip(srcs) {
                acc += dot(&tap[dout * d..(dout + 1) * d], src);
            }
            *o = residual[dout] + acc.max(0.0);
        }
    }
    out
}

/// Encode one chunk through the dilated stack, consuming and updating the
/// rolling per-layer context. Equivalent to recomputing the entire stream
/// history (see [`encode_full_history`]) at a fraction of the cost.
pub fn encode_chunk(
    w: &WeightBundle,
    x: &LatentBlock,
    state: &mut EncoderState,
) -> Result<LatentBlock> {
    let cfg = w.config();
    let d = cfg.latent_dim;
    let k = cfg.chunk_frames;
    if x.d() != d || x.k() != k {
        return Err(Error::Shape(format!(
            "encoder expects a {d}×{k} block, got {}×{}",
            x.d(),
            x.k()
        )));
    }
    if state.d != d || state.ctxs.len() != cfg.enc_layers {
        return Err(Error::Shape("encoder state does not match the model config".into()));
    }

    let mut cur = x.data.clone();
    for j in 0..cfg.enc_layers {
        let dilation = 1 << j;
        let pad = 2 * dilation;
        let ctx = &mut state.ctxs[j];

        let mut ext = Vec::with_capacity((pad + k) * d);
        ext.extend_from_slice(ctx);
        ext.extend_from_slice(&cur);

        // The cache keeps the trailing `pad` *input* frames of this layer.
        ctx.copy_from_slice(&ext[k * d..(k + pad) * d]);

        let bias = &w.tensor(&format!("enc.{j}.bias")).data;
        cur = dilated_layer(
            [w.enc_tap(j, 0), w.enc_tap(j, 1), w.enc_tap(j, 2)],
            bias,
            &ext,
            d,
            dilation,
            k,
        );
    }
    LatentBlock::from_data(d, k, cur)
}

/// Reference encoder path: run the whole stream history through the stack
/// with zero left-padding and no caching. Returns all `T` output frames;
/// the last `K` must match what [`encode_chunk`] produced for the final
/// chunk of the same stream.
pub fn encode_full_history(w: &WeightBundle, x: &LatentBlock) -> Result<LatentBlock> {
    let cfg = w.config();
    let d = cfg.latent_dim;
    if x.d() != d {
        return Err(Error::Shape(format!("expected {d} channels, got {}", x.d())));
    }
    let t_frames = x.k();
    let mut cur = x.data.clone();
    for j in 0..cfg.enc_layers {
        let dilation = 1 << j;
        let pad = 2 * dilation;
        let mut ext = vec![0.0f32; pad * d];
        ext.extend_from_slice(&cur);
        let bias = &w.tensor(&format!("enc.{j}.bias")).data;
        cur = dilated_layer(
            [w.enc_tap(j, 0), w.enc_tap(j, 1), w.enc_tap(j, 2)],
            bias,
            &ext,
            d,
            dilation,
            t_frames,
        );
    }
    LatentBlock::from_data(d, t_frames, cur)
}

/// Label embedding `l = query_embed · q` for a multi-hot query (no bias).
pub fn embed_query(w: &WeightBundle, q: &QueryVector) -> Result<Vec<f32>> {
    if q.len() != w.config().n_classes {
        return Err(Error::Shape(format!(
            "query has {} bits, model expects {}",
            q.len(),
            w.config().n_classes
        )));
    }
    embed_query_dense(w, &q.to_dense())
}

/// Real-relaxed embedding used by tests of the embedding's linearity; the
/// binary path above is the special case of a {0,1} vector.
pub fn embed_query_dense(w: &WeightBundle, q: &[f32]) -> Result<Vec<f32>> {
    let cfg = w.config();
    if q.len() != cfg.n_classes {
        return Err(Error::Shape(format!(
            "query has {} entries, model expects {}",
            q.len(),
            cfg.n_classes
        )));
    }
    let weight = &w.tensor("query_embed.weight").data;
    let nc = cfg.n_classes;
    Ok((0..cfg.latent_dim).map(|dout| dot(&weight[dout * nc..(dout + 1) * nc], q)).collect())
}

fn layer_norm(frame: &mut [f32], gain: &[f32], bias: &[f32]) {
    let n = frame.len() as f32;
    let mean = frame.iter().sum::<f32>() / n;
    let var = frame.iter().map(|&v| (v - mean) * (v - mean)).sum::<f32>() / n;
    let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    for (i, v) in frame.iter_mut().enumerate() {
        *v = (*v - mean) * inv * gain[i] + bias[i];
    }
}

/// Multi-head scaled-dot-product attention over frame-major buffers.
/// No masking, no positional encoding: chunk windows are short enough
/// that order information comes from the cache structure itself.
#[allow(clippy::too_many_arguments)]
fn attention(
    w: &WeightBundle,
    block: &str,
    q_frames: &[f32],
    n_q: usize,
    kv_frames: &[f32],
    n_kv: usize,
    d: usize,
    heads: usize,
) -> Vec<f32> {
    let head_dim = d / heads;
    let scale = 1.0 / (head_dim as f32).sqrt();

    let proj = |name: &str, frames: &[f32], n: usize| -> Vec<f32> {
        let weight = &w.tensor(&format!("dec.{block}.{name}.weight")).data;
        let bias = &w.tensor(&format!("dec.{block}.{name}.bias")).data;
        let mut out = vec![0.0f32; n * d];
        for t in 0..n {
            matvec(weight, bias, &frames[t * d..(t + 1) * d], &mut out[t * d..(t + 1) * d]);
        }
        out
    };
    let q = proj("q", q_frames, n_q);
    let k = proj("k", kv_frames, n_kv);
    let v = proj("v", kv_frames, n_kv);

    let mut ctx = vec![0.0f32; n_q * d];
    let mut scores = vec![0.0f32; n_kv];
    for h in 0..heads {
        let off = h * head_dim;
        for tq in 0..n_q {
            let qh = &q[tq * d + off..tq * d + off + head_dim];
            for (tk, s) in scores.iter_mut().enumerate() {
                let kh = &k[tk * d + off..tk * d + off + head_dim];
                *s = dot(qh, kh) * scale;
            }
            // Softmax with max subtraction.
            let max = scores.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let mut sum = 0.0f32;
            for s in scores.iter_mut() {
                *s = (*s - max).exp();
                sum += *s;
            }
            let inv = 1.0 / sum;
            let out = &mut ctx[tq * d + off..tq * d + off + head_dim];
            for (tk, &s) in scores.iter().enumerate() {
                let alpha = s * inv;
                let vh = &v[tk * d + off..tk * d + off + head_dim];
                for (o, &vv) in out.iter_mut().zip(vh) {
                    *o += alpha * vv;
                }
            }
        }
    }
    proj("out", &ctx, n_q)
}

/// One transformer-decoder step producing the mask for the current chunk.
///
/// Builds the 2K-frame target stream `[l⊙e_prev, l⊙e]` and memory stream
/// `[e_prev, e]`, runs self-attention, cross-attention and the
/// feed-forward block (each post-normed residual sub-blocks), and returns
/// the last K frames. No output nonlinearity — genuine masks are learned,
/// not enforced. The state is updated to the *unconditioned* `e` so the
/// next chunk's window is gated only by its own label term.
pub fn decode_mask(
    w: &WeightBundle,
    e: &LatentBlock,
    label: &[f32],
    state: &mut DecoderState,
) -> Result<LatentBlock> {
    let cfg = w.config();
    let d = cfg.latent_dim;
    let k = cfg.chunk_frames;
    if e.d() != d || e.k() != k {
        return Err(Error::Shape(format!(
            "decoder expects a {d}×{k} block, got {}×{}",
            e.d(),
            e.k()
        )));
    }
    if label.len() != d {
        return Err(Error::Shape(format!(
            "label embedding has {} channels, model expects {d}",
            label.len()
        )));
    }
    if state.prev.d() != d || state.prev.k() != k {
        return Err(Error::Shape("decoder state does not match the model config".into()));
    }

    let n = 2 * k;
    let prev = &state.prev;

    // Target stream: label-gated encodings of the previous and current
    // chunk. Memory stream: the same encodings, ungated.
    let mut tgt = vec![0.0f32; n * d];
    let mut mem = vec![0.0f32; n * d];
    for t in 0..k {
        for c in 0..d {
            tgt[t * d + c] = label[c] * prev.get(c, t);
            tgt[(k + t) * d + c] = label[c] * e.get(c, t);
            mem[t * d + c] = prev.get(c, t);
            mem[(k + t) * d + c] = e.get(c, t);
        }
    }

    let add_residual = |acc: &mut [f32], res: &[f32]| {
        for (a, r) in acc.iter_mut().zip(res) {
            *a += r;
        }
    };
    let norm_frames = |frames: &mut [f32], which: &str| {
        let gain = &w.tensor(&format!("dec.{which}.gain")).data;
        let bias = &w.tensor(&format!("dec.{which}.bias")).data;
        for t in 0..n {
            layer_norm(&mut frames[t * d..(t + 1) * d], gain, bias);
        }
    };

    // Self-attention over the target stream.
    let mut x1 = attention(w, "self_attn", &tgt, n, &tgt, n, d, cfg.heads);
    add_residual(&mut x1, &tgt);
    norm_frames(&mut x1, "norm1");

    // Cross-attention against the unconditioned memory.
    let mut x2 = attention(w, "cross_attn", &x1, n, &mem, n, d, cfg.heads);
    add_residual(&mut x2, &x1);
    norm_frames(&mut x2, "norm2");

    // Position-wise feed-forward.
    let w1 = &w.tensor("dec.ffn.w1.weight").data;
    let b1 = &w.tensor("dec.ffn.w1.bias").data;
    let w2 = &w.tensor("dec.ffn.w2.weight").data;
    let b2 = &w.tensor("dec.ffn.w2.bias").data;
    let ff = cfg.ff_dim;
    let mut x3 = vec![0.0f32; n * d];
    let mut hidden = vec![0.0f32; ff];
    for t in 0..n {
        matvec(w1, b1, &x2[t * d..(t + 1) * d], &mut hidden);
        for h in hidden.iter_mut() {
            *h = h.max(0.0);
        }
        matvec(w2, b2, &hidden, &mut x3[t * d..(t + 1) * d]);
    }
    add_residual(&mut x3, &x2);
    norm_frames(&mut x3, "norm3");

    state.prev = e.clone();
    LatentBlock::from_data(d, k, x3[k * d..].to_vec())
}

/// Elementwise gate: `y = x ⊙ m`.
pub fn apply_mask(x: &LatentBlock, m: &LatentBlock) -> Result<LatentBlock> {
    if x.d() != m.d() || x.k() != m.k() {
        return Err(Error::Shape(format!(
            "mask {}×{} does not match block {}×{}",
            m.d(),
            m.k(),
            x.d(),
            x.k()
        )));
    }
    let data = x.data.iter().zip(&m.data).map(|(a, b)| a * b).collect();
    LatentBlock::from_data(x.d, x.k, data)
}

/// Transposed conv back to samples: frame `i` writes samples
/// `[i·L, (i+1)·L)` of both channels — non-overlapping, so each output
/// sample is one frame's projection plus the channel bias.
pub fn project_out(w: &WeightBundle, y: &LatentBlock) -> Result<(Vec<f32>, Vec<f32>)> {
    let cfg = w.config();
    let d = cfg.latent_dim;
    let k = cfg.chunk_frames;
    let l = cfg.stride;
    if y.d() != d || y.k() != k {
        return Err(Error::Shape(format!(
            "output projection expects a {d}×{k} block, got {}×{}",
            y.d(),
            y.k()
        )));
    }
    let weight = &w.tensor("out_proj.weight").data;
    let bias = &w.tensor("out_proj.bias").data;

    let mut out = [vec![0.0f32; k * l], vec![0.0f32; k * l]];
    for i in 0..k {
        let frame = y.frame(i);
        for (c, ch) in out.iter_mut().enumerate() {
            let seg = &mut ch[i * l..(i + 1) * l];
            seg.fill(bias[c]);
            let wc = &weight[c * d * l..(c + 1) * d * l];
            for (dd, &v) in frame.iter().enumerate() {
                let row = &wc[dd * l..(dd + 1) * l];
                for (s, &wv) in seg.iter_mut().zip(row) {
                    *s += wv * v;
                }
            }
        }
    }
    let [left, right] = out;
    Ok((left, right))
}
