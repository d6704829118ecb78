//! Push-driven extraction: feed a live two-channel stream to the network
//! in arbitrary-sized pieces and receive fixed-size output chunks.
//!
//! The session emits one chunk of K·L samples every time it has gathered a
//! chunk plus L lookahead samples; how the input was sliced up makes no
//! difference to the audio. The offline path over the same signal agrees
//! with the streamed chunks, which is what makes offline evaluation of a
//! streaming model honest.

use btse::network::{ModelConfig, WeightBundle};
use btse::ontology::ClassRegistry;
use btse::signal::BinauralSignal;
use btse::streaming::{algorithmic_latency, process_offline, StreamSession};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> btse::Result<()> {
    let cfg = ModelConfig {
        latent_dim: 32,
        chunk_frames: 4,
        enc_layers: 6,
        heads: 4,
        ff_dim: 128,
        ..ModelConfig::default()
    };
    let bundle = WeightBundle::init_random(cfg, ClassRegistry::default(), 1)?;
    let query = bundle.registry().query_from_labels(&["siren", "baby_cry"])?;

    let breakdown = algorithmic_latency(&cfg);
    println!(
        "chunk {} samples + lookahead {} -> {:.1} ms algorithmic latency",
        cfg.chunk_frames * cfg.stride,
        cfg.stride,
        breakdown.total_ms_one_decimal()
    );

    // One second of noise standing in for a live microphone pair.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 44_100;
    let mut fill = |len: usize| (0..len).map(|_| rng.random_range(-0.5f32..0.5)).collect();
    let left: Vec<f32> = fill(n);
    let right: Vec<f32> = fill(n);
    let signal = BinauralSignal::new(left.clone(), right.clone(), cfg.sample_rate_hz);

    // Deliver it in awkward pieces, the way audio callbacks actually arrive.
    let mut session = StreamSession::new(&bundle, query)?;
    let mut emitted: Vec<f32> = Vec::new();
    let mut cursor = 0;
    let mut logged = 0;
    for piece in [160usize, 7, 333, 2048, 1, 512].iter().cycle() {
        if cursor >= n {
            break;
        }
        let end = (cursor + piece).min(n);
        let chunks = session.push_samples(&left[cursor..end], &right[cursor..end])?;
        for c in &chunks {
            emitted.extend_from_slice(&c.left);
        }
        if !chunks.is_empty() && logged < 8 {
            println!(
                "pushed {:>4} samples -> {} chunk(s), {:>5} samples emitted so far",
                end - cursor,
                chunks.len(),
                session.emitted_samples()
            );
            logged += 1;
            if logged == 8 {
                println!("... (continuing silently)");
            }
        }
        cursor = end;
    }

    // The independent offline pass produces the same audio.
    let offline = process_offline(&bundle, &signal, session.query())?;
    let max_diff = emitted
        .iter()
        .zip(&offline.left[..emitted.len()])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    println!(
        "streamed {} samples ({} still pending), offline produced {}; max |difference| = {:.2e}",
        emitted.len(),
        session.pending_len(),
        offline.len(),
        max_diff
    );
    Ok(())
}
