//! Batch front end for the library: scene synthesis, extraction,
//! evaluation, latency/bench reports and ontology queries.
//!
//! Conventions shared by every subcommand: the machine-readable result
//! is a single JSON document on stdout, progress and summaries go to
//! stderr, and any command that writes files drops a `manifest.json`
//! (or `<name>.manifest.json`) next to them recording the command,
//! resolved configuration, seed, inputs, outputs, tool version and wall
//! time. Exit status is 0 only if every output was written.

use anyhow::{bail, Context};
use btse::network::{param_count, ModelConfig, WeightBundle};
use btse::ontology::{ClassRegistry, OntologyGraph};
use btse::signal::{read_wav, AudioData, BinauralSignal, WavEncoding};
use btse::streaming::{algorithmic_latency, bench_chunk, process_offline};
use btse::synthesis::{
    build_scene, make_random_scene_spec, IRStore, MixPolicy, RenderedScene, SceneCatalog,
    SceneSpec,
};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "btse", version, about = "Streaming binaural target-sound extraction")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Render binaural scenes (mixture + per-target ground truths).
    Synth(SynthArgs),
    /// Extract (or subtract) target classes from a stereo recording.
    Extract(ExtractArgs),
    /// Score an extraction against its ground truth and mixture.
    Eval(EvalArgs),
    /// Report the algorithmic latency of a chunk/stride choice.
    Latency(LatencyArgs),
    /// Time the per-chunk pipeline of a weight bundle.
    Bench(BenchArgs),
    /// Print the class registry.
    Classes(ClassesArgs),
    /// List classes disjoint from the targets under an ontology graph.
    OtherClasses(OtherClassesArgs),
    /// Create a weight bundle with seeded random initialization.
    InitWeights(InitWeightsArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Render exactly this scene spec instead of drawing random ones.
    #[arg(long, conflicts_with_all = ["sources", "count", "seed", "policy"])]
    spec: Option<PathBuf>,
    /// Catalog root holding backgrounds/ and events/<label>/ WAVs.
    #[arg(long)]
    sources: Option<PathBuf>,
    /// Impulse-response manifest (JSON records with subject/room/azimuth).
    #[arg(long)]
    ir_manifest: PathBuf,
    /// Output directory; each scene gets a scene_NNNN/ subdirectory.
    #[arg(long)]
    out: PathBuf,
    /// Number of random scenes to draw.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Seed for the first scene; scene i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mixing-policy JSON overriding the default ranges.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// If the mixture peaks above 1.0, scale it (and the ground truths,
    /// by the same gain) down to 0.99 full scale before writing.
    #[arg(long, default_value_t = false)]
    normalize: bool,
}

#[derive(Args)]
struct ExtractArgs {
    /// Weight bundle produced by init-weights (or a training pipeline).
    #[arg(long)]
    weights: PathBuf,
    /// Stereo WAV at the model sample rate.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated target classes, e.g. "siren,baby_cry".
    #[arg(long)]
    labels: String,
    /// Output WAV path.
    #[arg(long)]
    output: PathBuf,
    /// Write input minus extraction (target removal) instead.
    #[arg(long, default_value_t = false)]
    subtract: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// The extracted signal under test.
    #[arg(long)]
    estimate: PathBuf,
    /// Ground-truth stem it should match.
    #[arg(long)]
    reference: PathBuf,
    /// The mixture the estimate was extracted from.
    #[arg(long)]
    mixture: PathBuf,
    /// Where to write the metrics report.
    #[arg(long, default_value = "metrics.json")]
    report: PathBuf,
}

#[derive(Args)]
struct LatencyArgs {
    /// Chunk size K·L in samples.
    #[arg(long, default_value_t = 416)]
    chunk: usize,
    /// Stride (and lookahead) L in samples.
    #[arg(long, default_value_t = 32)]
    stride: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    weights: PathBuf,
    /// Timed pipeline invocations after warm-up.
    #[arg(long, default_value_t = 100)]
    runs: usize,
}

#[derive(Args)]
struct ClassesArgs {
    /// Read the registry from a bundle instead of the built-in default.
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct OtherClassesArgs {
    /// Ontology graph JSON ({nodes, edges}).
    #[arg(long)]
    graph: PathBuf,
    /// Comma-separated target classes.
    #[arg(long)]
    targets: String,
}

#[derive(Args)]
struct InitWeightsArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 128)]
    latent_dim: usize,
    #[arg(long, default_value_t = 32)]
    stride: usize,
    #[arg(long, default_value_t = 13)]
    chunk_frames: usize,
    #[arg(long, default_value_t = 10)]
    enc_layers: usize,
    #[arg(long, default_value_t = 8)]
    heads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Provenance record written next to every command's file outputs.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: String,
    seed: Option<u64>,
    config: serde_json::Value,
    inputs: Vec<String>,
    outputs: Vec<String>,
    wall_ms: f64,
}

fn manifest_sibling(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_stereo(path: &Path) -> anyhow::Result<BinauralSignal> {
    let data = read_wav(path).with_context(|| format!("reading {}", path.display()))?;
    match data {
        AudioData::Stereo(s) => Ok(s),
        AudioData::Mono(_) => bail!("{} is mono; a two-channel recording is required", path.display()),
    }
}

fn split_labels(labels: &str) -> Vec<String> {
    labels.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().cmd {
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Extract(a) => cmd_extract(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Latency(a) => cmd_latency(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Classes(a) => cmd_classes(a),
        Cmd::OtherClasses(a) => cmd_other_classes(a),
        Cmd::InitWeights(a) => cmd_init_weights(a),
    }
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    let t0 = Instant::now();
    let store = IRStore::open(&args.ir_manifest)
        .with_context(|| format!("opening {}", args.ir_manifest.display()))?;

    let specs: Vec<SceneSpec> = if let Some(spec_path) = &args.spec {
        vec![SceneSpec::from_json_file(spec_path)
            .with_context(|| format!("loading {}", spec_path.display()))?]
    } else {
        let sources = args
            .sources
            .as_ref()
            .context("--sources is required when drawing random scenes")?;
        let catalog = SceneCatalog::from_dir(sources)?;
        let policy = match &args.policy {
            Some(p) => serde_json::from_str::<MixPolicy>(&std::fs::read_to_string(p)?)
                .with_context(|| format!("parsing {}", p.display()))?,
            None => MixPolicy::default(),
        };
        (0..args.count)
            .map(|i| make_random_scene_spec(args.seed + i as u64, &policy, &catalog, &store))
            .collect::<btse::Result<_>>()?
    };

    std::fs::create_dir_all(&args.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(
            std::env::var("BTSE_THREADS").ok().and_then(|v| v.parse().ok()).unwrap_or(0),
        )
        .build()
        .context("building the render pool")?;

    let scene_dirs: Vec<PathBuf> =
        (0..specs.len()).map(|i| args.out.join(format!("scene_{i:04}"))).collect();
    pool.install(|| {
        specs.par_iter().zip(&scene_dirs).try_for_each(|(spec, dir)| {
            let result = render_scene_dir(spec, &store, dir, args.normalize, t0);
            if result.is_err() {
                // Leave no half-written scene behind.
                let _ = std::fs::remove_dir_all(dir);
            }
            result.with_context(|| format!("rendering {}", dir.display()))
        })
    })?;

    for dir in &scene_dirs {
        eprintln!("wrote {}", dir.display());
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "out_dir": args.out,
            "scenes": scene_dirs,
        }))?
    );
    Ok(())
}

fn render_scene_dir(
    spec: &SceneSpec,
    store: &IRStore,
    dir: &Path,
    normalize: bool,
    t0: Instant,
) -> anyhow::Result<()> {
    let mut scene = build_scene(spec, store)?;
    if normalize {
        apply_peak_normalization(&mut scene);
    }
    std::fs::create_dir_all(dir)?;

    let mixture_path = dir.join("mixture.wav");
    scene.mixture.write_wav(&mixture_path, WavEncoding::Float32)?;
    let mut outputs = vec![mixture_path.display().to_string()];
    for (label, gt) in &scene.ground_truths {
        let path = dir.join(format!("gt_{label}.wav"));
        gt.write_wav(&path, WavEncoding::Float32)?;
        outputs.push(path.display().to_string());
    }
    let spec_path = dir.join("spec.json");
    spec.to_json_file(&spec_path)?;
    outputs.push(spec_path.display().to_string());

    write_manifest(
        &dir.join("manifest.json"),
        &RunManifest {
            command: "synth".into(),
            version: btse::VERSION.into(),
            seed: Some(spec.seed),
            config: serde_json::to_value(spec)?,
            inputs: vec![],
            outputs,
            wall_ms: t0.elapsed().as_secs_f64() * 1000.0,
        },
    )
}

/// Scale the mixture and ground truths by one common gain so the
/// mixture peaks at 0.99 — only if it actually exceeds full scale.
fn apply_peak_normalization(scene: &mut RenderedScene) {
    let peak = scene
        .mixture
        .left
        .iter()
        .chain(&scene.mixture.right)
        .fold(0.0f32, |m, &v| m.max(v.abs()));
    if peak <= 1.0 {
        return;
    }
    let gain = 0.99 / peak;
    scene.mixture = scene.mixture.scaled(gain);
    for gt in scene.ground_truths.values_mut() {
        *gt = gt.scaled(gain);
    }
}

fn cmd_extract(args: ExtractArgs) -> anyhow::Result<()> {
    let t0 = Instant::now();
    let bundle = WeightBundle::load(&args.weights)
        .with_context(|| format!("loading {}", args.weights.display()))?;
    let input = read_stereo(&args.input)?;
    let cfg = *bundle.config();
    if input.sample_rate_hz != cfg.sample_rate_hz {
        bail!(
            "{} is sampled at {} Hz but the model runs at {} Hz; resample it first",
            args.input.display(),
            input.sample_rate_hz,
            cfg.sample_rate_hz
        );
    }
    let labels = split_labels(&args.labels);
    let query = bundle.registry().query_from_labels(&labels)?;

    let extracted = process_offline(&bundle, &input, &query)?;
    let out = if args.subtract {
        let trimmed = input.slice(0, extracted.len());
        let left = trimmed.left.iter().zip(&extracted.left).map(|(x, e)| x - e).collect();
        let right = trimmed.right.iter().zip(&extracted.right).map(|(x, e)| x - e).collect();
        BinauralSignal::new(left, right, cfg.sample_rate_hz)
    } else {
        extracted
    };
    out.write_wav(&args.output, WavEncoding::Float32)
        .with_context(|| format!("writing {}", args.output.display()))?;

    write_manifest(
        &manifest_sibling(&args.output),
        &RunManifest {
            command: "extract".into(),
            version: btse::VERSION.into(),
            seed: None,
            config: json!({
                "model": cfg,
                "labels": labels,
                "subtract": args.subtract,
            }),
            inputs: vec![
                args.weights.display().to_string(),
                args.input.display().to_string(),
            ],
            outputs: vec![args.output.display().to_string()],
            wall_ms: t0.elapsed().as_secs_f64() * 1000.0,
        },
    )?;

    eprintln!(
        "{} {} samples/channel -> {}",
        if args.subtract { "removed targets over" } else { "extracted" },
        out.len(),
        args.output.display()
    );
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "output": args.output,
            "samples_per_channel": out.len(),
            "subtract": args.subtract,
        }))?
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let t0 = Instant::now();
    let estimate = read_stereo(&args.estimate)?;
    let reference = read_stereo(&args.reference)?;
    let mixture = read_stereo(&args.mixture)?;
    if estimate.sample_rate_hz != reference.sample_rate_hz
        || estimate.sample_rate_hz != mixture.sample_rate_hz
    {
        bail!(
            "sample rates differ: estimate {} Hz, reference {} Hz, mixture {} Hz",
            estimate.sample_rate_hz,
            reference.sample_rate_hz,
            mixture.sample_rate_hz
        );
    }
    let n = estimate.len().min(reference.len()).min(mixture.len());
    if n < estimate.len().max(reference.len()).max(mixture.len()) {
        eprintln!("warning: lengths differ; scoring the first {n} samples");
    }
    let report = btse::metrics::evaluate(
        &estimate.slice(0, n),
        &mixture.slice(0, n),
        &reference.slice(0, n),
    )?;

    std::fs::write(&args.report, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("writing {}", args.report.display()))?;
    write_manifest(
        &manifest_sibling(&args.report),
        &RunManifest {
            command: "eval".into(),
            version: btse::VERSION.into(),
            seed: None,
            config: json!({ "samples_scored": n }),
            inputs: vec![
                args.estimate.display().to_string(),
                args.reference.display().to_string(),
                args.mixture.display().to_string(),
            ],
            outputs: vec![args.report.display().to_string()],
            wall_ms: t0.elapsed().as_secs_f64() * 1000.0,
        },
    )?;

    eprintln!(
        "si-snr {:+.2} dB | si-snri {:+.2} dB | snr {:+.2} dB | Δitd {:.1} µs | Δild {:.2} dB",
        report.si_snr_db, report.si_snri_db, report.snr_db, report.delta_itd_us, report.delta_ild_db
    );
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_latency(args: LatencyArgs) -> anyhow::Result<()> {
    if args.stride == 0 || args.chunk == 0 || args.chunk % args.stride != 0 {
        bail!(
            "chunk ({}) must be a positive multiple of stride ({})",
            args.chunk,
            args.stride
        );
    }
    let cfg = ModelConfig {
        stride: args.stride,
        chunk_frames: args.chunk / args.stride,
        ..ModelConfig::default()
    };
    let breakdown = algorithmic_latency(&cfg);
    eprintln!(
        "chunk {} + lookahead {} = {} samples @ {} Hz -> {:.1} ms algorithmic",
        args.chunk,
        args.stride,
        args.chunk + args.stride,
        cfg.sample_rate_hz,
        breakdown.total_ms_one_decimal()
    );
    println!("{}", serde_json::to_string_pretty(&breakdown)?);
    Ok(())
}

fn host_description() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1).map(|s| s.trim().to_string()))
        })
        .unwrap_or_else(|| "unknown cpu".into());
    format!("{cpu} ({} {})", std::env::consts::OS, std::env::consts::ARCH)
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<()> {
    let bundle = WeightBundle::load(&args.weights)
        .with_context(|| format!("loading {}", args.weights.display()))?;
    let stats = bench_chunk(&bundle, args.runs)?;
    let report = json!({
        "config": bundle.config(),
        "n_runs": stats.n_runs,
        "mean_ms": stats.mean_ms,
        "p50_ms": stats.p50_ms,
        "p95_ms": stats.p95_ms,
        "host_description": host_description(),
    });
    eprintln!(
        "chunk pipeline: mean {:.3} ms, p50 {:.3} ms, p95 {:.3} ms over {} runs",
        stats.mean_ms, stats.p50_ms, stats.p95_ms, stats.n_runs
    );
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_classes(args: ClassesArgs) -> anyhow::Result<()> {
    let registry = match &args.weights {
        Some(path) => WeightBundle::load(path)
            .with_context(|| format!("loading {}", path.display()))?
            .registry()
            .clone(),
        None => ClassRegistry::default(),
    };
    eprintln!("{} classes", registry.len());
    println!("{}", serde_json::to_string_pretty(&registry)?);
    Ok(())
}

fn cmd_other_classes(args: OtherClassesArgs) -> anyhow::Result<()> {
    let graph = OntologyGraph::from_json_file(&args.graph)
        .with_context(|| format!("loading {}", args.graph.display()))?;
    let targets = split_labels(&args.targets);
    let others = graph.other_classes(&targets)?;
    eprintln!("{} classes disjoint from {:?}", others.len(), targets);
    println!("{}", serde_json::to_string_pretty(&others)?);
    Ok(())
}

fn cmd_init_weights(args: InitWeightsArgs) -> anyhow::Result<()> {
    let t0 = Instant::now();
    let registry = ClassRegistry::default();
    let cfg = ModelConfig {
        latent_dim: args.latent_dim,
        stride: args.stride,
        chunk_frames: args.chunk_frames,
        n_classes: registry.len(),
        enc_layers: args.enc_layers,
        heads: args.heads,
        ff_dim: 4 * args.latent_dim,
        ..ModelConfig::default()
    };
    let bundle = WeightBundle::init_random(cfg, registry, args.seed)?;
    bundle.save(&args.output).with_context(|| format!("writing {}", args.output.display()))?;

    write_manifest(
        &manifest_sibling(&args.output),
        &RunManifest {
            command: "init-weights".into(),
            version: btse::VERSION.into(),
            seed: Some(args.seed),
            config: serde_json::to_value(cfg)?,
            inputs: vec![],
            outputs: vec![args.output.display().to_string()],
            wall_ms: t0.elapsed().as_secs_f64() * 1000.0,
        },
    )?;

    eprintln!(
        "{} parameters ({} classes) -> {}",
        param_count(&cfg),
        bundle.registry().len(),
        args.output.display()
    );
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "output": args.output,
            "parameters": param_count(&cfg),
            "seed": args.seed,
        }))?
    );
    Ok(())
}
