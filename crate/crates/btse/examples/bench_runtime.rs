//! Time the per-chunk pipeline and compare it with the real-time budget.
//!
//! A chunk of K·L samples represents K·L/44100 seconds of audio; the
//! pipeline keeps up with a live stream only if it processes a chunk in
//! less wall time than that. Run with `--release` for meaningful numbers.

use btse::network::{param_count, ModelConfig, WeightBundle};
use btse::ontology::ClassRegistry;
use btse::streaming::bench_chunk;

fn main() -> btse::Result<()> {
    for latent_dim in [64usize, 128] {
        let cfg = ModelConfig { latent_dim, ff_dim: 4 * latent_dim, ..ModelConfig::default() };
        let bundle = WeightBundle::init_random(cfg, ClassRegistry::default(), 0)?;
        let stats = bench_chunk(&bundle, 50)?;

        let chunk_ms =
            (cfg.chunk_frames * cfg.stride) as f64 / cfg.sample_rate_hz as f64 * 1000.0;
        println!(
            "D={latent_dim} ({} params): mean {:.3} ms, p50 {:.3} ms, p95 {:.3} ms over {} runs",
            param_count(&cfg),
            stats.mean_ms,
            stats.p50_ms,
            stats.p95_ms,
            stats.n_runs
        );
        println!(
            "  chunk budget {:.2} ms -> {:.1}x real time at the median\n",
            chunk_ms,
            chunk_ms / stats.p50_ms
        );
    }
    Ok(())
}
