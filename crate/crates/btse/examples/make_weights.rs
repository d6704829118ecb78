//! Create a weight bundle, save it, and prove the file round-trips
//! bit-exactly.
//!
//! The bundle is the unit of deployment: one file carrying the model
//! configuration, the class registry (so query-vector bit positions travel
//! with the weights), and every tensor in f32.

use btse::network::{param_count, ModelConfig, WeightBundle};
use btse::ontology::ClassRegistry;

fn main() -> btse::Result<()> {
    let cfg = ModelConfig::default();
    let registry = ClassRegistry::default();
    println!(
        "config: D={} L={} K={} | {} encoder layers, {} heads, ff {}",
        cfg.latent_dim, cfg.stride, cfg.chunk_frames, cfg.enc_layers, cfg.heads, cfg.ff_dim
    );
    println!("parameters: {}", param_count(&cfg));

    let bundle = WeightBundle::init_random(cfg, registry, 0)?;
    let dir = std::env::temp_dir().join("btse_examples");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("demo.btse");
    bundle.save(&path)?;
    println!("saved {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    let reloaded = WeightBundle::load(&path)?;
    let mut names: Vec<&str> = reloaded.tensor_names().collect();
    names.sort();
    println!("tensors: {} (first three: {})", names.len(), names[..3].join(", "));

    let identical = names
        .iter()
        .all(|n| bundle.tensor(n).data == reloaded.tensor(n).data);
    println!("round-trip bit-exact: {identical}");
    Ok(())
}
