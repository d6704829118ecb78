//! Shared fixture for the integration suites: a miniature source catalog
//! and impulse-response set written to a temp directory in the exact
//! layout `synth` expects on disk (backgrounds/, events/<label>/,
//! irs/manifest.json).

// Each test target compiles this module separately and uses a subset.
#![allow(dead_code)]

use std::f32::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use btse::signal::{BinauralSignal, MonoSignal, WavEncoding};
use btse::synthesis::{EventRole, EventSpec, IrRecord, SceneSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn noise(seed: u64, n: usize) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-0.3f32..0.3)).collect()
}

/// Lay out the catalog + IRs under `root` and return the IR manifest path.
///
/// The four impulse responses are sparse delay/gain pairs so every spatial
/// cue the renderer should imprint (ITD from the delay, ILD from the gain)
/// is known in closed form.
pub fn build_fixture(root: &Path) -> PathBuf {
    fs::create_dir_all(root.join("backgrounds")).unwrap();
    // 0.7 s of noise at a foreign rate: exercises resampling + tiling.
    MonoSignal::new(noise(1, 22_400), 32_000)
        .write_wav(&root.join("backgrounds/rumble.wav"), WavEncoding::Float32)
        .unwrap();

    // 5.2 s takes: long enough for the default policy's 3–5 s event draws.
    let take_len = 229_320;
    let tone = |hz: f32, n: usize| -> Vec<f32> {
        (0..n).map(|i| 0.25 * (TAU * hz * i as f32 / 44_100.0).sin()).collect()
    };
    for (label, samples) in [
        ("siren", tone(880.0, take_len)),
        ("dog", noise(2, take_len)),
        ("speech", noise(3, take_len)),
    ] {
        let dir = root.join("events").join(label);
        fs::create_dir_all(&dir).unwrap();
        MonoSignal::new(samples, 44_100).write_wav(&dir.join("take1.wav"), WavEncoding::Float32).unwrap();
    }

    fs::create_dir_all(root.join("irs")).unwrap();
    let mut records = Vec::new();
    for (az, delay, gain) in [(-60i32, 6usize, 0.4f32), (-20, 2, 0.7), (20, 0, 1.0), (60, 0, 1.3)] {
        let mut h = BinauralSignal::silence(48, 44_100);
        h.left[delay] = 1.0;
        h.right[0] = gain;
        let file = format!("az{az}.wav");
        h.write_wav(&root.join("irs").join(&file), WavEncoding::Float32).unwrap();
        records.push(IrRecord {
            subject: "s01".into(),
            room: "lab".into(),
            azimuth_deg: az,
            file: PathBuf::from(file),
        });
    }
    let manifest = root.join("irs/manifest.json");
    fs::write(&manifest, serde_json::to_string_pretty(&records).unwrap()).unwrap();
    manifest
}

/// A 2 s scene over the fixture: a siren target at 10 dB / −20° and a dog
/// distractor at 0 dB / +60° over the rumble background.
pub fn two_event_spec(root: &Path) -> SceneSpec {
    SceneSpec {
        duration_s: 2.0,
        sample_rate: 44_100,
        seed: 0,
        background: btse::synthesis::BackgroundSpec {
            source_file: root.join("backgrounds/rumble.wav"),
            lufs: -50.0,
        },
        events: vec![
            EventSpec {
                label: "siren".into(),
                source_file: root.join("events/siren/take1.wav"),
                onset_s: 0.25,
                duration_s: 0.8,
                snr_db: 10.0,
                subject: "s01".into(),
                room: "lab".into(),
                azimuth_deg: -20,
                role: EventRole::Target,
            },
            EventSpec {
                label: "dog".into(),
                source_file: root.join("events/dog/take1.wav"),
                onset_s: 1.1,
                duration_s: 0.6,
                snr_db: 0.0,
                subject: "s01".into(),
                room: "lab".into(),
                azimuth_deg: 60,
                role: EventRole::Other,
            },
        ],
    }
}
