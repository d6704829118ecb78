//! End-to-end runs of the `btse` binary: every subcommand, their JSON
//! contracts, manifest emission, determinism, and failure modes.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use btse::network::{param_count, ModelConfig, WeightBundle};
use btse::ontology::{ClassRegistry, OntologyGraph};
use btse::signal::{read_wav, AudioData, BinauralSignal, WavEncoding};
use common::{build_fixture, noise, two_event_spec};

fn btse() -> Command {
    Command::new(env!("CARGO_BIN_EXE_btse"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawning btse");
    assert!(
        out.status.success(),
        "command failed\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawning btse");
    assert!(!out.status.success(), "command unexpectedly succeeded");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

/// A small, fast model for extraction tests: chunk = 4 · 32 samples.
fn small_config() -> ModelConfig {
    ModelConfig {
        latent_dim: 16,
        chunk_frames: 4,
        enc_layers: 3,
        heads: 2,
        ff_dim: 32,
        ..ModelConfig::default()
    }
}

fn write_noise_input(path: &Path, seed_l: u64, seed_r: u64, n: usize) {
    BinauralSignal::new(noise(seed_l, n), noise(seed_r, n), 44_100)
        .write_wav(path, WavEncoding::Float32)
        .unwrap();
}

#[test]
fn synth_random_mode_writes_deterministic_scene_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = build_fixture(dir.path());

    let render = |out: &Path, threads: &str| {
        run_ok(
            btse()
                .args(["synth", "--sources"])
                .arg(dir.path())
                .arg("--ir-manifest")
                .arg(&manifest)
                .arg("--out")
                .arg(out)
                .args(["--count", "2", "--seed", "7"])
                .env("BTSE_THREADS", threads),
        )
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let summary = stdout_json(&render(&out_a, "4"));
    render(&out_b, "1");

    assert_eq!(summary["scenes"].as_array().unwrap().len(), 2);
    for scene in ["scene_0000", "scene_0001"] {
        let scene_dir = out_a.join(scene);
        assert!(scene_dir.join("mixture.wav").is_file());
        assert!(scene_dir.join("spec.json").is_file());
        assert!(scene_dir.join("manifest.json").is_file());
        let gt_count = fs::read_dir(&scene_dir)
            .unwrap()
            .filter(|e| {
                e.as_ref().unwrap().file_name().to_string_lossy().starts_with("gt_")
            })
            .count();
        assert_eq!(gt_count, 2, "default policy draws two distinct targets");

        // Same seed, different run and thread count: identical audio.
        assert_eq!(
            fs::read(scene_dir.join("mixture.wav")).unwrap(),
            fs::read(out_b.join(scene).join("mixture.wav")).unwrap()
        );

        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(scene_dir.join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["command"], "synth");
        assert!(manifest["seed"].is_u64());
    }
}

#[test]
fn synth_spec_mode_renders_exactly_the_requested_scene() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = build_fixture(dir.path());
    let spec = two_event_spec(dir.path());
    let spec_path = dir.path().join("scene.json");
    spec.to_json_file(&spec_path).unwrap();

    let out = dir.path().join("render");
    run_ok(
        btse()
            .args(["synth", "--spec"])
            .arg(&spec_path)
            .arg("--ir-manifest")
            .arg(&manifest)
            .arg("--out")
            .arg(&out),
    );

    let scene_dir = out.join("scene_0000");
    let mixture = read_wav(&scene_dir.join("mixture.wav")).unwrap();
    assert_eq!(mixture.len(), 88_200, "2 s at 44.1 kHz");
    assert_eq!(mixture.n_channels(), 2);
    assert!(scene_dir.join("gt_siren.wav").is_file(), "target stem is written");
    assert!(!scene_dir.join("gt_dog.wav").exists(), "distractors get no ground truth");
}

#[test]
fn synth_cleans_up_a_scene_dir_its_render_failed_in() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = build_fixture(dir.path());
    // The siren take holds 5.2 s; asking for 5.8 s of it passes spec
    // validation (it fits the 6 s scene) but must fail the render.
    let mut spec = two_event_spec(dir.path());
    spec.duration_s = 6.0;
    spec.events[0].onset_s = 0.0;
    spec.events[0].duration_s = 5.8;
    let spec_path = dir.path().join("bad.json");
    spec.to_json_file(&spec_path).unwrap();

    let out = dir.path().join("render");
    let stderr = run_err(
        btse()
            .args(["synth", "--spec"])
            .arg(&spec_path)
            .arg("--ir-manifest")
            .arg(&manifest)
            .arg("--out")
            .arg(&out),
    );
    assert!(stderr.contains("scene_0000"), "stderr names the failed scene: {stderr}");
    assert!(!out.join("scene_0000").exists(), "failed scene dir is removed");
}

#[test]
fn extract_with_zero_weights_writes_silence_and_subtract_returns_input() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("zero.btse");
    WeightBundle::zeros(small_config(), ClassRegistry::default())
        .unwrap()
        .save(&weights)
        .unwrap();
    let input = dir.path().join("in.wav");
    write_noise_input(&input, 21, 22, 44_100);

    let out_wav = dir.path().join("out.wav");
    run_ok(
        btse()
            .args(["extract", "--weights"])
            .arg(&weights)
            .arg("--input")
            .arg(&input)
            .args(["--labels", "siren,dog"])
            .arg("--output")
            .arg(&out_wav),
    );
    let extracted = match read_wav(&out_wav).unwrap() {
        AudioData::Stereo(s) => s,
        AudioData::Mono(_) => panic!("extraction output must be stereo"),
    };
    // 44100 samples = 344 whole chunks of 128, remainder dropped.
    assert_eq!(extracted.len(), 344 * 128);
    assert!(extracted.left.iter().chain(&extracted.right).all(|&v| v == 0.0));

    let sub_wav = dir.path().join("residual.wav");
    run_ok(
        btse()
            .args(["extract", "--subtract", "--weights"])
            .arg(&weights)
            .arg("--input")
            .arg(&input)
            .args(["--labels", "siren"])
            .arg("--output")
            .arg(&sub_wav),
    );
    let residual = read_wav(&sub_wav).unwrap().into_stereo();
    let original = read_wav(&input).unwrap().into_stereo();
    for (r, x) in residual.left.iter().zip(&original.left) {
        assert_eq!(r.to_bits(), x.to_bits(), "zero extraction leaves the input untouched");
    }

    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("residual.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "extract");
    assert_eq!(manifest["config"]["subtract"], true);
}

#[test]
fn extract_plus_subtract_outputs_reassemble_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("rand.btse");
    WeightBundle::init_random(small_config(), ClassRegistry::default(), 3)
        .unwrap()
        .save(&weights)
        .unwrap();
    let input = dir.path().join("in.wav");
    write_noise_input(&input, 31, 32, 12_800);

    let run = |flag: Option<&str>, out: &Path| {
        let mut cmd = btse();
        cmd.args(["extract", "--weights"])
            .arg(&weights)
            .arg("--input")
            .arg(&input)
            .args(["--labels", "speech"])
            .arg("--output")
            .arg(out);
        if let Some(f) = flag {
            cmd.arg(f);
        }
        run_ok(&mut cmd);
    };
    let est_wav = dir.path().join("est.wav");
    let res_wav = dir.path().join("res.wav");
    run(None, &est_wav);
    run(Some("--subtract"), &res_wav);

    let est = read_wav(&est_wav).unwrap().into_stereo();
    let res = read_wav(&res_wav).unwrap().into_stereo();
    let original = read_wav(&input).unwrap().into_stereo();
    assert_eq!(est.len(), res.len());
    for ch in 0..2 {
        for i in 0..est.len() {
            let (e, r, x) =
                (est.channels()[ch][i], res.channels()[ch][i], original.channels()[ch][i]);
            // x − e is rounded once, so e + (x − e) can differ from x by
            // at most that single rounding — far below 1e−6 here.
            assert!((e + r - x).abs() < 1e-6, "sample {i}: {e} + {r} != {x}");
        }
    }
}

#[test]
fn extract_rejects_unknown_labels_listing_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("zero.btse");
    WeightBundle::zeros(small_config(), ClassRegistry::default())
        .unwrap()
        .save(&weights)
        .unwrap();
    let input = dir.path().join("in.wav");
    write_noise_input(&input, 5, 6, 256);

    let stderr = run_err(
        btse()
            .args(["extract", "--weights"])
            .arg(&weights)
            .arg("--input")
            .arg(&input)
            .args(["--labels", "kazoo"])
            .arg("--output")
            .arg(dir.path().join("out.wav")),
    );
    assert!(stderr.contains("unknown class \"kazoo\""), "stderr: {stderr}");
    assert!(stderr.contains("valid classes"), "stderr lists the registry: {stderr}");
    assert!(stderr.contains("siren"), "stderr lists the registry: {stderr}");
}

#[test]
fn extract_rejects_mono_and_wrong_rate_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("zero.btse");
    WeightBundle::zeros(small_config(), ClassRegistry::default())
        .unwrap()
        .save(&weights)
        .unwrap();

    let mono = dir.path().join("mono.wav");
    btse::signal::MonoSignal::new(noise(7, 1024), 44_100)
        .write_wav(&mono, WavEncoding::Float32)
        .unwrap();
    let stderr = run_err(
        btse()
            .args(["extract", "--weights"])
            .arg(&weights)
            .arg("--input")
            .arg(&mono)
            .args(["--labels", "siren"])
            .arg("--output")
            .arg(dir.path().join("out.wav")),
    );
    assert!(stderr.contains("mono"), "stderr: {stderr}");

    let slow = dir.path().join("slow.wav");
    BinauralSignal::new(noise(8, 1024), noise(9, 1024), 16_000)
        .write_wav(&slow, WavEncoding::Float32)
        .unwrap();
    let stderr = run_err(
        btse()
            .args(["extract", "--weights"])
            .arg(&weights)
            .arg("--input")
            .arg(&slow)
            .args(["--labels", "siren"])
            .arg("--output")
            .arg(dir.path().join("out.wav")),
    );
    assert!(stderr.contains("16000 Hz"), "stderr: {stderr}");
    assert!(stderr.contains("44100 Hz"), "stderr: {stderr}");
}

#[test]
fn eval_reports_metrics_on_stdout_file_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let n = 44_100;
    let reference = BinauralSignal::new(noise(41, n), noise(42, n), 44_100);
    let interference = BinauralSignal::new(noise(43, n), noise(44, n), 44_100).scaled(0.5);
    let mut mixture = reference.clone();
    mixture.add_assign(&interference);
    let mut estimate = reference.clone();
    estimate.add_assign(&interference.scaled(0.05));

    let (est_p, ref_p, mix_p) = (
        dir.path().join("est.wav"),
        dir.path().join("ref.wav"),
        dir.path().join("mix.wav"),
    );
    estimate.write_wav(&est_p, WavEncoding::Float32).unwrap();
    reference.write_wav(&ref_p, WavEncoding::Float32).unwrap();
    mixture.write_wav(&mix_p, WavEncoding::Float32).unwrap();

    let report_p = dir.path().join("metrics.json");
    let out = run_ok(
        btse()
            .args(["eval", "--estimate"])
            .arg(&est_p)
            .arg("--reference")
            .arg(&ref_p)
            .arg("--mixture")
            .arg(&mix_p)
            .arg("--report")
            .arg(&report_p),
    );
    let stdout = stdout_json(&out);
    let on_disk: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_p).unwrap()).unwrap();
    assert_eq!(stdout, on_disk, "stdout and the report file carry the same JSON");
    for field in
        ["si_snr_db", "si_snri_db", "snr_db", "delta_itd_us", "delta_ild_db", "loss_value"]
    {
        assert!(stdout[field].is_number(), "missing field {field}");
    }
    // The estimate keeps only 5% of the interference: clear improvement.
    assert!(stdout["si_snri_db"].as_f64().unwrap() > 10.0);
    assert!(dir.path().join("metrics.manifest.json").is_file());
}

#[test]
fn eval_trims_to_the_shortest_input_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let reference = BinauralSignal::new(noise(51, 44_100), noise(52, 44_100), 44_100);
    let estimate = reference.slice(0, 44_000);

    let (est_p, ref_p) = (dir.path().join("est.wav"), dir.path().join("ref.wav"));
    estimate.write_wav(&est_p, WavEncoding::Float32).unwrap();
    reference.write_wav(&ref_p, WavEncoding::Float32).unwrap();

    let out = run_ok(
        btse()
            .args(["eval", "--estimate"])
            .arg(&est_p)
            .arg("--reference")
            .arg(&ref_p)
            .arg("--mixture")
            .arg(&ref_p)
            .arg("--report")
            .arg(dir.path().join("m.json")),
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("first 44000 samples"), "stderr: {stderr}");
    // est == ref on the scored prefix: the SNR cap applies.
    assert!((stdout_json(&out)["snr_db"].as_f64().unwrap() - 80.0).abs() < 1e-9);
}

#[test]
fn eval_fails_cleanly_on_a_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.wav");
    let stderr = run_err(
        btse()
            .args(["eval", "--estimate"])
            .arg(&missing)
            .arg("--reference")
            .arg(&missing)
            .arg("--mixture")
            .arg(&missing)
            .arg("--report")
            .arg(dir.path().join("m.json")),
    );
    assert!(stderr.contains("nope.wav"), "stderr names the missing path: {stderr}");
}

#[test]
fn latency_reports_the_published_operating_points() {
    for (chunk, tenths) in [(32_usize, 14_i64), (128, 36), (256, 65), (416, 101)] {
        let out = run_ok(btse().args([
            "latency",
            "--chunk",
            &chunk.to_string(),
            "--stride",
            "32",
        ]));
        let total = stdout_json(&out)["total_algorithmic_ms"].as_f64().unwrap();
        assert_eq!((total * 10.0).floor() as i64, tenths, "chunk {chunk}");
    }
    let stderr = run_err(btse().args(["latency", "--chunk", "100", "--stride", "32"]));
    assert!(stderr.contains("multiple of stride"), "stderr: {stderr}");
}

#[test]
fn bench_reports_ordered_stats_and_the_host() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("w.btse");
    WeightBundle::init_random(small_config(), ClassRegistry::default(), 0)
        .unwrap()
        .save(&weights)
        .unwrap();

    let out = run_ok(
        btse().args(["bench", "--weights"]).arg(&weights).args(["--runs", "5"]),
    );
    let report = stdout_json(&out);
    assert_eq!(report["n_runs"], 5);
    let (mean, p50, p95) = (
        report["mean_ms"].as_f64().unwrap(),
        report["p50_ms"].as_f64().unwrap(),
        report["p95_ms"].as_f64().unwrap(),
    );
    assert!(mean > 0.0 && p50 > 0.0 && p50 <= p95);
    assert!(!report["host_description"].as_str().unwrap().is_empty());
    assert_eq!(report["config"]["latent_dim"], 16);
}

#[test]
fn classes_prints_the_registry() {
    let out = run_ok(btse().arg("classes"));
    let labels: Vec<String> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(labels.len(), 20);
    assert!(labels.iter().any(|l| l == "siren"));
}

#[test]
fn other_classes_agrees_with_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("graph.json");
    let graph_json = serde_json::json!({
        "nodes": ["Sounds", "Hands", "Clapping", "FingerSnapping", "Speech"],
        "edges": [
            ["Sounds", "Hands"], ["Sounds", "Speech"],
            ["Hands", "Clapping"], ["Hands", "FingerSnapping"],
        ],
    });
    fs::write(&graph_path, graph_json.to_string()).unwrap();

    let out = run_ok(
        btse()
            .args(["other-classes", "--graph"])
            .arg(&graph_path)
            .args(["--targets", "Clapping"]),
    );
    let got: Vec<String> = serde_json::from_slice(&out.stdout).unwrap();
    let graph = OntologyGraph::from_json_file(&graph_path).unwrap();
    assert_eq!(got, graph.other_classes(&["Clapping"]).unwrap());
    assert_eq!(got, ["FingerSnapping", "Speech"]);
}

#[test]
fn init_weights_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.btse"), dir.path().join("b.btse"));
    let args = ["--latent-dim", "16", "--heads", "2", "--chunk-frames", "4",
        "--enc-layers", "3", "--seed", "11"];
    let out = run_ok(btse().args(["init-weights", "--output"]).arg(&a).args(args));
    run_ok(btse().args(["init-weights", "--output"]).arg(&b).args(args));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "same seed, same bytes");

    let bundle = WeightBundle::load(&a).unwrap();
    assert_eq!(bundle.config().latent_dim, 16);
    assert_eq!(bundle.config().ff_dim, 64, "ff width defaults to 4x latent");
    assert_eq!(
        stdout_json(&out)["parameters"].as_u64().unwrap() as usize,
        param_count(bundle.config())
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 11);
}
