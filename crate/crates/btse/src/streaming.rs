//! Chunk scheduling, stream state lifecycle and latency accounting.
//!
//! [`StreamSession`] is the real-time entry point: feed it arbitrary
//! slices of binaural input and it emits a `K·L`-sample extracted chunk
//! every time enough audio has accumulated. The engine needs `K·L + L`
//! samples in hand to emit `K·L` — one stride of lookahead feeds the last
//! frame of the input convolution — so the algorithmic latency is
//! `(K·L + L) / fs` regardless of how fast the hardware is.
//!
//! [`process_offline`] runs the same chunk loop from zero state over a
//! whole recording in one call. It is deliberately written as its own
//! direct loop over the input (no pending buffer, no incremental
//! draining) so that comparing it against concatenated [`StreamSession`]
//! output checks the buffering logic rather than restating it.

use crate::error::{Error, Result};
use crate::network::ops::{
    apply_mask, decode_mask, embed_query, encode_chunk, project_in, project_out, DecoderState,
    EncoderState,
};
use crate::network::weights::WeightBundle;
use crate::network::ModelConfig;
use crate::ontology::QueryVector;
use crate::signal::BinauralSignal;
use serde::Serialize;
use std::time::Instant;

/// One emitted chunk of extracted audio: `K·L` samples per ear.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputChunk {
    pub left: Vec<f32>,
    pub right: Vec<f32>,
    /// Ordinal of this chunk within the stream, starting at 0.
    pub index: u64,
}

/// Per-stream mutable state: the pending input buffer, the encoder's
/// per-layer contexts and the decoder's previous-chunk encoding.
///
/// A session is single-owner and not reentrant. Distinct sessions may
/// share one [`WeightBundle`] and run fully in parallel; calls into one
/// session must be externally serialized.
pub struct StreamSession<'w> {
    weights: &'w WeightBundle,
    query: QueryVector,
    label: Vec<f32>,
    pending_left: Vec<f32>,
    pending_right: Vec<f32>,
    enc_state: EncoderState,
    dec_state: DecoderState,
    emitted_samples: u64,
    chunks_emitted: u64,
}

impl<'w> StreamSession<'w> {
    /// Open a stream for one target query against a loaded bundle.
    pub fn new(weights: &'w WeightBundle, query: QueryVector) -> Result<Self> {
        let label = embed_query(weights, &query)?;
        let cfg = weights.config();
        let cap = cfg.input_samples();
        Ok(Self {
            weights,
            query,
            label,
            pending_left: Vec::with_capacity(cap),
            pending_right: Vec::with_capacity(cap),
            enc_state: EncoderState::zeros(cfg),
            dec_state: DecoderState::zeros(cfg),
            emitted_samples: 0,
            chunks_emitted: 0,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        self.weights.config()
    }

    pub fn query(&self) -> &QueryVector {
        &self.query
    }

    /// Input samples buffered but not yet consumed; always `< K·L + L`
    /// on return from [`push_samples`](Self::push_samples).
    pub fn pending_len(&self) -> usize {
        self.pending_left.len()
    }

    /// Total extracted samples emitted per ear; always a multiple of
    /// `K·L`.
    pub fn emitted_samples(&self) -> u64 {
        self.emitted_samples
    }

    /// Feed `n` more samples per ear, in any granularity from single
    /// samples to whole recordings, and collect every chunk that becomes
    /// ready. The pending buffer never grows beyond one chunk-plus-
    /// lookahead: input is consumed incrementally, emitting as it goes,
    /// so memory stays constant no matter how much is pushed at once.
    pub fn push_samples(&mut self, left: &[f32], right: &[f32]) -> Result<Vec<OutputChunk>> {
        if left.len() != right.len() {
            return Err(Error::Shape(format!(
                "left and right pushes differ: {} vs {} samples",
                left.len(),
                right.len()
            )));
        }
        let cfg = *self.weights.config();
        let input_len = cfg.input_samples();
        let chunk_len = cfg.chunk_samples();

        let mut out = Vec::new();
        let mut offset = 0;
        while offset < left.len() {
            let take = (input_len - self.pending_left.len()).min(left.len() - offset);
            self.pending_left.extend_from_slice(&left[offset..offset + take]);
            self.pending_right.extend_from_slice(&right[offset..offset + take]);
            offset += take;

            if self.pending_left.len() == input_len {
                let (ol, or) = run_chunk(
                    self.weights,
                    &self.label,
                    &self.pending_left,
                    &self.pending_right,
                    &mut self.enc_state,
                    &mut self.dec_state,
                )?;
                out.push(OutputChunk { left: ol, right: or, index: self.chunks_emitted });
                self.chunks_emitted += 1;
                self.emitted_samples += chunk_len as u64;
                // Consume the chunk body; the L newest samples stay as
                // the next chunk's lookahead-turned-history.
                self.pending_left.drain(..chunk_len);
                self.pending_right.drain(..chunk_len);
            }
        }
        Ok(out)
    }
}

/// The five pipeline stages for one chunk, shared by the streaming and
/// offline drivers (which differ in everything around this call).
fn run_chunk(
    w: &WeightBundle,
    label: &[f32],
    left: &[f32],
    right: &[f32],
    enc: &mut EncoderState,
    dec: &mut DecoderState,
) -> Result<(Vec<f32>, Vec<f32>)> {
    let x = project_in(w, left, right)?;
    let e = encode_chunk(w, &x, enc)?;
    let m = decode_mask(w, &e, label, dec)?;
    let y = apply_mask(&x, &m)?;
    project_out(w, &y)
}

/// Run the whole signal through the chunk loop from zero state.
///
/// Chunk `k` reads input samples `[k·KL, (k+1)·KL + L)`; lookahead past
/// the end of the signal is zero-padded, and a final partial chunk body
/// is dropped, so the output holds `⌊T/KL⌋·KL` samples per ear for an
/// input of length `T`.
pub fn process_offline(
    w: &WeightBundle,
    signal: &BinauralSignal,
    query: &QueryVector,
) -> Result<BinauralSignal> {
    let cfg = *w.config();
    if signal.sample_rate_hz != cfg.sample_rate_hz {
        return Err(Error::Argument(format!(
            "signal is at {} Hz but the model expects {} Hz",
            signal.sample_rate_hz, cfg.sample_rate_hz
        )));
    }
    let label = embed_query(w, query)?;
    let chunk_len = cfg.chunk_samples();
    let input_len = cfg.input_samples();
    let n_chunks = signal.len() / chunk_len;

    let mut enc = EncoderState::zeros(&cfg);
    let mut dec = DecoderState::zeros(&cfg);
    let mut out_left = Vec::with_capacity(n_chunks * chunk_len);
    let mut out_right = Vec::with_capacity(n_chunks * chunk_len);
    let mut in_left = vec![0.0f32; input_len];
    let mut in_right = vec![0.0f32; input_len];
    for k in 0..n_chunks {
        let start = k * chunk_len;
        let avail = (signal.len() - start).min(input_len);
        in_left[..avail].copy_from_slice(&signal.left[start..start + avail]);
        in_right[..avail].copy_from_slice(&signal.right[start..start + avail]);
        in_left[avail..].fill(0.0);
        in_right[avail..].fill(0.0);

        let (ol, or) = run_chunk(w, &label, &in_left, &in_right, &mut enc, &mut dec)?;
        out_left.extend_from_slice(&ol);
        out_right.extend_from_slice(&or);
    }
    Ok(BinauralSignal::new(out_left, out_right, cfg.sample_rate_hz))
}

/// Where the end-to-end delay comes from, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyBreakdown {
    /// Time to fill one chunk: `K·L / fs`.
    pub buffer_ms: f64,
    /// One input-conv stride of lookahead: `L / fs`.
    pub lookahead_ms: f64,
    /// Measured wall-clock per chunk; zero until filled in from a bench.
    pub compute_ms: f64,
    /// `buffer_ms + lookahead_ms` — the floor no hardware can beat.
    pub total_algorithmic_ms: f64,
}

impl LatencyBreakdown {
    pub fn with_compute(self, compute_ms: f64) -> Self {
        Self { compute_ms, ..self }
    }

    /// Total algorithmic latency truncated (not rounded) to one decimal,
    /// the convention used when quoting sub-centisecond latencies:
    /// 448 samples / 44.1 kHz = 10.158… ms reads as 10.1, not 10.2.
    pub fn total_ms_one_decimal(&self) -> f64 {
        (self.total_algorithmic_ms * 10.0).floor() / 10.0
    }
}

/// The delay inherent to the chunking scheme, independent of hardware:
/// `(K·L + L) / fs`.
pub fn algorithmic_latency(cfg: &ModelConfig) -> LatencyBreakdown {
    let fs = cfg.sample_rate_hz as f64;
    let buffer_ms = cfg.chunk_samples() as f64 / fs * 1000.0;
    let lookahead_ms = cfg.stride as f64 / fs * 1000.0;
    LatencyBreakdown {
        buffer_ms,
        lookahead_ms,
        compute_ms: 0.0,
        total_algorithmic_ms: buffer_ms + lookahead_ms,
    }
}

/// Wall-clock statistics for one full chunk pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchStats {
    pub n_runs: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

/// Time the five pipeline stages on persistent random state.
///
/// Measures exactly one chunk per run — no file I/O, no buffering — after
/// three warm-up chunks, over fresh random input each run so nothing can
/// be cached away. The encoder and decoder states persist across runs as
/// they would mid-stream.
pub fn bench_chunk(w: &WeightBundle, n_runs: usize) -> Result<BenchStats> {
    use rand::{Rng, SeedableRng};
    if n_runs == 0 {
        return Err(Error::Argument("benchmark needs at least one run".into()));
    }
    let cfg = *w.config();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let label: Vec<f32> = (0..cfg.latent_dim).map(|_| rng.random_range(-0.1f32..0.1)).collect();
    let mut fill = |buf: &mut Vec<f32>| {
        buf.clear();
        buf.extend((0..cfg.input_samples()).map(|_| rng.random_range(-1.0f32..1.0)));
    };
    let mut enc = EncoderState::zeros(&cfg);
    let mut dec = DecoderState::zeros(&cfg);
    let mut left = Vec::new();
    let mut right = Vec::new();

    for _ in 0..3 {
        fill(&mut left);
        fill(&mut right);
        run_chunk(w, &label, &left, &right, &mut enc, &mut dec)?;
    }

    let mut times_ms = Vec::with_capacity(n_runs);
    for _ in 0..n_runs {
        fill(&mut left);
        fill(&mut right);
        let t0 = Instant::now();
        let out = run_chunk(w, &label, &left, &right, &mut enc, &mut dec)?;
        let dt = t0.elapsed();
        std::hint::black_box(&out);
        times_ms.push(dt.as_secs_f64() * 1000.0);
    }
    times_ms.sort_by(|a, b| a.total_cmp(b));
    let mean_ms = times_ms.iter().sum::<f64>() / n_runs as f64;
    let pct = |q: f64| times_ms[((n_runs - 1) as f64 * q).round() as usize];
    Ok(BenchStats { n_runs, mean_ms, p50_ms: pct(0.50), p95_ms: pct(0.95) })
}
