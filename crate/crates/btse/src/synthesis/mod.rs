//! Binaural scene rendering: a loudness-referenced background plus
//! impulse-response-spatialized events mixed at controlled SNRs, with
//! per-target ground-truth stems for training and evaluation.
//!
//! A scene is described declaratively by [`SceneSpec`] (JSON-seriable,
//! see the field docs) and rendered by [`build_scene`] into a
//! [`RenderedScene`]. Rendering is a pure function of (spec, IR store):
//! no RNG is consulted, so the same spec always renders bit-identically
//! and scenes can be rendered in parallel. Randomness lives entirely in
//! [`make_random_scene_spec`], which turns a seed plus a [`MixPolicy`]
//! into a concrete spec.
//!
//! Two conventions worth knowing:
//!
//! - **SNR convention.** An event's `snr_db` is defined as the event
//!   stem's loudness (LUFS, measured over the stem's own extent after
//!   spatialization) minus the background's loudness. A 0 dB event over
//!   a −50 LUFS background therefore measures −50 LUFS itself.
//! - **No limiter.** Mixtures are the plain sample-wise sum of the
//!   background and all stems — never normalized or clipped — so
//!   additivity holds exactly and ground truths subtract out cleanly.
//!   Peak normalization, when wanted, is a write-time option.

pub mod convolve;
pub mod ir;

pub use convolve::{convolve_full, spatialize};
pub use ir::{IRStore, IrRecord};

use crate::error::{Error, Result};
use crate::signal::{read_wav, resample, BinauralSignal, MonoSignal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Scene length when a policy doesn't say otherwise.
pub const DEFAULT_SCENE_DURATION_S: f64 = 6.0;
/// Background loudness reference.
pub const DEFAULT_BACKGROUND_LUFS: f64 = -50.0;
/// Loop seam length when tiling a short background.
pub const CROSSFADE_S: f64 = 0.010;

/// Whether an event is something the listener asked for or clutter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventRole {
    Target,
    Other,
}

/// The bed the events sit on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    /// Mono or stereo WAV; mono is duplicated to both ears, any sample
    /// rate is resampled.
    pub source_file: PathBuf,
    /// Loudness the tiled background is scaled to.
    #[serde(default = "default_lufs")]
    pub lufs: f64,
}

fn default_lufs() -> f64 {
    DEFAULT_BACKGROUND_LUFS
}

/// One sound event: what it is, where it sits in time, how loud it is
/// relative to the background, and which direction it comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub label: String,
    pub source_file: PathBuf,
    pub onset_s: f64,
    pub duration_s: f64,
    /// Stem loudness minus background loudness, in dB.
    pub snr_db: f64,
    pub subject: String,
    pub room: String,
    pub azimuth_deg: i32,
    pub role: EventRole,
}

/// A complete, renderable scene description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
    #[serde(default)]
    pub seed: u64,
    pub background: BackgroundSpec,
    pub events: Vec<EventSpec>,
}

fn default_duration() -> f64 {
    DEFAULT_SCENE_DURATION_S
}

fn default_rate() -> u32 {
    crate::signal::CANONICAL_RATE_HZ
}

impl SceneSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let spec: SceneSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Sample count of the full scene at its own rate.
    pub fn total_samples(&self) -> usize {
        (self.duration_s * self.sample_rate as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) || self.sample_rate == 0 {
            return Err(Error::Argument(format!(
                "scene needs a positive duration and sample rate, got {} s at {} Hz",
                self.duration_s, self.sample_rate
            )));
        }
        if !self.events.iter().any(|e| e.role == EventRole::Target) {
            return Err(Error::Argument(
                "scene has no target event; extraction needs at least one".into(),
            ));
        }
        let fs = self.sample_rate as f64;
        let total = self.total_samples();
        for (i, ev) in self.events.iter().enumerate() {
            if ev.label.is_empty() {
                return Err(Error::Argument(format!("event {i} has an empty label")));
            }
            if !(ev.duration_s > 0.0) || ev.onset_s < 0.0 {
                return Err(Error::Argument(format!(
                    "event {i} ({}) needs a positive duration and non-negative onset",
                    ev.label
                )));
            }
            // The same rounding the renderer uses, so validation and
            // placement can never disagree by one sample.
            let onset = (ev.onset_s * fs).round() as usize;
            let len = (ev.duration_s * fs).round() as usize;
            if onset + len > total {
                return Err(Error::Argument(format!(
                    "event {i} ({}) runs past the scene end: onset {:.3} s + {:.3} s > {:.3} s",
                    ev.label, ev.onset_s, ev.duration_s, self.duration_s
                )));
            }
        }
        Ok(())
    }
}

/// Ranges a random scene draws from. All ranges are inclusive
/// `[low, high]` and must not be inverted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixPolicy {
    pub n_targets: usize,
    pub target_snr_db: [f64; 2],
    pub n_others: [usize; 2],
    pub other_snr_db: [f64; 2],
    pub event_duration_s: [f64; 2],
}

impl Default for MixPolicy {
    fn default() -> Self {
        Self {
            n_targets: 2,
            target_snr_db: [5.0, 15.0],
            n_others: [1, 2],
            other_snr_db: [0.0, 5.0],
            event_duration_s: [3.0, 5.0],
        }
    }
}

impl MixPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.n_targets == 0 {
            return Err(Error::Argument("policy needs at least one target".into()));
        }
        let ok = |r: [f64; 2]| r[0] <= r[1] && r[0].is_finite() && r[1].is_finite();
        if !ok(self.target_snr_db) || !ok(self.other_snr_db) || !ok(self.event_duration_s) {
            return Err(Error::Argument("policy has an inverted or non-finite range".into()));
        }
        if self.n_others[0] > self.n_others[1] {
            return Err(Error::Argument("policy has an inverted n_others range".into()));
        }
        if self.event_duration_s[0] <= 0.0 {
            return Err(Error::Argument("event durations must be positive".into()));
        }
        if self.event_duration_s[1] > DEFAULT_SCENE_DURATION_S {
            return Err(Error::Argument(format!(
                "event durations up to {} s cannot fit a {} s scene",
                self.event_duration_s[1], DEFAULT_SCENE_DURATION_S
            )));
        }
        Ok(())
    }
}

/// Source material a random scene can draw from: background WAVs and
/// per-class event WAVs.
#[derive(Debug, Clone, Default)]
pub struct SceneCatalog {
    pub backgrounds: Vec<PathBuf>,
    pub sources: BTreeMap<String, Vec<PathBuf>>,
}

impl SceneCatalog {
    /// Scan the conventional layout: `root/backgrounds/*.wav` and
    /// `root/events/<label>/*.wav`. File lists come out sorted so a
    /// catalog built from the same tree is always identical.
    pub fn from_dir(root: &Path) -> Result<Self> {
        let wavs = |dir: &Path| -> Result<Vec<PathBuf>> {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
                .collect();
            files.sort();
            Ok(files)
        };

        let bg_dir = root.join("backgrounds");
        if !bg_dir.is_dir() {
            return Err(Error::Argument(format!(
                "no backgrounds directory at {}",
                bg_dir.display()
            )));
        }
        let backgrounds = wavs(&bg_dir)?;

        let ev_dir = root.join("events");
        if !ev_dir.is_dir() {
            return Err(Error::Argument(format!("no events directory at {}", ev_dir.display())));
        }
        let mut sources = BTreeMap::new();
        let mut class_dirs: Vec<PathBuf> = std::fs::read_dir(&ev_dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        class_dirs.sort();
        for dir in class_dirs {
            let label = dir
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| {
                    Error::Format(format!("unreadable class directory name {}", dir.display()))
                })?
                .to_string();
            let files = wavs(&dir)?;
            if !files.is_empty() {
                sources.insert(label, files);
            }
        }
        Ok(Self { backgrounds, sources })
    }
}

/// One placed, spatialized, gain-scaled event as it went into the mix.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedStem {
    pub label: String,
    pub role: EventRole,
    /// Placement offset in samples from scene start.
    pub onset: usize,
    /// The stem over its own extent (event length, not scene length).
    pub signal: BinauralSignal,
}

/// A rendered scene plus everything needed to audit it: the mixture is
/// exactly `background + Σ stems` (same f32 summation order as
/// [`RenderedScene::replay_sum`] uses), and each target label's ground
/// truth is the sum of just that label's stems at scene length.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    pub mixture: BinauralSignal,
    pub background: BinauralSignal,
    pub stems: Vec<RenderedStem>,
    pub ground_truths: BTreeMap<String, BinauralSignal>,
    pub spec: SceneSpec,
}

impl RenderedScene {
    /// Re-run the exact summation that produced the mixture. Floating-
    /// point addition is order-sensitive, so "mixture = background +
    /// stems" is checkable bit-for-bit only by replaying the same fold —
    /// which this is.
    pub fn replay_sum(&self) -> BinauralSignal {
        let mut acc = self.background.clone();
        for stem in &self.stems {
            add_at(&mut acc, &stem.signal, stem.onset);
        }
        acc
    }
}

/// In-place placement: `dst[onset..onset+len] += src`.
fn add_at(dst: &mut BinauralSignal, src: &BinauralSignal, onset: usize) {
    for (d, s) in dst.left[onset..onset + src.len()].iter_mut().zip(&src.left) {
        *d += s;
    }
    for (d, s) in dst.right[onset..onset + src.len()].iter_mut().zip(&src.right) {
        *d += s;
    }
}

/// Loop a background out to `target_len` samples with a linear crossfade
/// of `crossfade` samples at each seam (blended in f64). A source at
/// least as long as the target is simply truncated.
fn tile_with_crossfade(
    sig: &BinauralSignal,
    target_len: usize,
    crossfade: usize,
) -> Result<BinauralSignal> {
    if sig.len() == 0 {
        return Err(Error::Argument("background source is empty".into()));
    }
    if sig.len() >= target_len {
        return Ok(sig.slice(0, target_len));
    }
    if sig.len() <= crossfade {
        return Err(Error::Argument(format!(
            "background of {} samples is too short to loop with a {} sample crossfade",
            sig.len(),
            crossfade
        )));
    }
    let mut left = sig.left.clone();
    let mut right = sig.right.clone();
    while left.len() < target_len {
        let seam = left.len() - crossfade;
        for i in 0..crossfade {
            let t = (i + 1) as f64 / (crossfade + 1) as f64;
            let blend = |tail: f32, head: f32| ((tail as f64) * (1.0 - t) + (head as f64) * t) as f32;
            left[seam + i] = blend(left[seam + i], sig.left[i]);
            right[seam + i] = blend(right[seam + i], sig.right[i]);
        }
        left.extend_from_slice(&sig.left[crossfade..]);
        right.extend_from_slice(&sig.right[crossfade..]);
    }
    left.truncate(target_len);
    right.truncate(target_len);
    Ok(BinauralSignal::new(left, right, sig.sample_rate_hz))
}

/// Render a scene: tile and level the background, then spatialize, scale
/// and place every event, accumulating the mixture and the per-target
/// ground truths.
pub fn build_scene(spec: &SceneSpec, store: &IRStore) -> Result<RenderedScene> {
    spec.validate()?;
    let fs = spec.sample_rate;
    let total = spec.total_samples();

    // Background: load (mono becomes both ears), resample, tile to the
    // full duration, then scale — so the target loudness holds over the
    // scene, not over the un-tiled source.
    let bg_raw = read_wav(&spec.background.source_file)?.into_stereo().resampled(fs)?;
    let crossfade = (CROSSFADE_S * fs as f64).round() as usize;
    let background =
        tile_with_crossfade(&bg_raw, total, crossfade)?.scale_to_lufs(spec.background.lufs)?;

    let mut mixture = background.clone();
    let mut stems = Vec::with_capacity(spec.events.len());
    for ev in &spec.events {
        let mono = read_wav(&ev.source_file)?.into_mono();
        let mono = resample(&mono, fs)?;
        let len = (ev.duration_s * fs as f64).round() as usize;
        if mono.len() < len {
            return Err(Error::Argument(format!(
                "event source {} holds {:.3} s but the event wants {:.3} s",
                ev.source_file.display(),
                mono.duration_s(),
                ev.duration_s
            )));
        }
        let clipped = MonoSignal::new(mono.samples[..len].to_vec(), fs);

        let ir = store.load(&ev.subject, &ev.room, ev.azimuth_deg)?;
        let raw_stem = spatialize(&clipped, &ir)?;
        // The SNR convention: stem loudness = background loudness + snr.
        let stem = raw_stem.scale_to_lufs(spec.background.lufs + ev.snr_db)?;

        let onset = (ev.onset_s * fs as f64).round() as usize;
        add_at(&mut mixture, &stem, onset);
        stems.push(RenderedStem { label: ev.label.clone(), role: ev.role, onset, signal: stem });
    }

    let mut ground_truths: BTreeMap<String, BinauralSignal> = BTreeMap::new();
    for stem in stems.iter().filter(|s| s.role == EventRole::Target) {
        let gt = ground_truths
            .entry(stem.label.clone())
            .or_insert_with(|| BinauralSignal::silence(total, fs));
        add_at(gt, &stem.signal, stem.onset);
    }

    Ok(RenderedScene { mixture, background, stems, ground_truths, spec: spec.clone() })
}

/// Draw a concrete scene from a policy, a catalog and an IR store.
///
/// The draw order is fixed — listener (subject, room), background file,
/// target classes, other-class count and classes, then per event (in
/// that class order): file, duration, onset, SNR, azimuth — so a seed
/// pins the whole spec. Directions are drawn independently per event;
/// two events landing at the same azimuth is allowed and happens at the
/// natural collision rate.
pub fn make_random_scene_spec(
    seed: u64,
    policy: &MixPolicy,
    catalog: &SceneCatalog,
    store: &IRStore,
) -> Result<SceneSpec> {
    policy.validate()?;
    let labels: Vec<&String> = catalog.sources.keys().collect();
    if labels.len() < policy.n_targets + 1 {
        return Err(Error::Argument(format!(
            "catalog has {} event classes; need at least {} (targets plus one other)",
            labels.len(),
            policy.n_targets + 1
        )));
    }
    if catalog.backgrounds.is_empty() {
        return Err(Error::Argument("catalog has no background files".into()));
    }
    let subject_rooms = store.subject_rooms();
    if subject_rooms.is_empty() {
        return Err(Error::Argument("impulse-response store is empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (subject, room) = subject_rooms[rng.random_range(0..subject_rooms.len())].clone();
    let azimuths = store.azimuths(&subject, &room);
    let background = BackgroundSpec {
        source_file: catalog.backgrounds[rng.random_range(0..catalog.backgrounds.len())].clone(),
        lufs: DEFAULT_BACKGROUND_LUFS,
    };

    // Distinct target classes, then distinct other classes from the rest.
    let mut pool: Vec<usize> = (0..labels.len()).collect();
    let draw_distinct = |rng: &mut ChaCha8Rng, n: usize, pool: &mut Vec<usize>| {
        (0..n).map(|_| pool.swap_remove(rng.random_range(0..pool.len()))).collect::<Vec<_>>()
    };
    let target_classes = draw_distinct(&mut rng, policy.n_targets, &mut pool);
    let n_others =
        rng.random_range(policy.n_others[0]..=policy.n_others[1]).min(pool.len());
    let other_classes = draw_distinct(&mut rng, n_others, &mut pool);

    let mut events = Vec::new();
    for (class_indices, role, snr_range) in [
        (&target_classes, EventRole::Target, policy.target_snr_db),
        (&other_classes, EventRole::Other, policy.other_snr_db),
    ] {
        for &ci in class_indices {
            let label = labels[ci].clone();
            let files = &catalog.sources[&label];
            let source_file = files[rng.random_range(0..files.len())].clone();
            let duration_s =
                rng.random_range(policy.event_duration_s[0]..=policy.event_duration_s[1]);
            let onset_s = rng.random_range(0.0..=(DEFAULT_SCENE_DURATION_S - duration_s));
            let snr_db = rng.random_range(snr_range[0]..=snr_range[1]);
            let azimuth_deg = azimuths[rng.random_range(0..azimuths.len())];
            events.push(EventSpec {
                label,
                source_file,
                onset_s,
                duration_s,
                snr_db,
                subject: subject.clone(),
                room: room.clone(),
                azimuth_deg,
                role,
            });
        }
    }

    Ok(SceneSpec {
        duration_s: DEFAULT_SCENE_DURATION_S,
        sample_rate: crate::signal::CANONICAL_RATE_HZ,
        seed,
        background,
        events,
    })
}
