//! Streaming binaural target-sound extraction.
//!
//! This crate renders binaural sound scenes, runs a chunk-wise causal
//! masking network that isolates (or removes) chosen sound classes from a
//! two-channel stream, and measures how faithfully an extraction preserved
//! level, timing and interaural cues.
//!
//! The pieces fit together like this:
//!
//! * [`signal`] — WAV I/O, resampling, loudness measurement.
//! * [`ontology`] — the 20-class registry, query vectors, and the ontology
//!   DAG used to pick distractor ("other") classes.
//! * [`network`] — model configuration, the weight bundle file format, and
//!   the per-chunk forward operations.
//! * [`streaming`] — the incremental session, offline reference path,
//!   latency accounting and the chunk-time benchmark.
//! * [`synthesis`] — impulse-response store, binaural spatialization and
//!   scene rendering.
//! * [`metrics`] — SNR / SI-SNR families and interaural time/level
//!   difference errors.
//!
//! Each capability has a runnable demonstration under `examples/`:
//!
//! ```text
//! cargo run --release --example make_weights      # create a weight bundle
//! cargo run --release --example stream_extract    # push-driven extraction
//! cargo run --release --example synthesize_scene  # render a scene to WAV
//! cargo run --release --example evaluate          # metrics on known signals
//! cargo run --release --example latency_table     # chunk-size latency table
//! cargo run --release --example bench_runtime     # per-chunk wall time
//! cargo run --release --example ontology_tour     # registry + other-classes
//! cargo run --release --example loudness_meter    # LUFS measurement demo
//! ```
//!
//! The same operations are scriptable through the thin `btse` binary
//! (`synth`, `extract`, `eval`, `latency`, `bench`, `classes`,
//! `other-classes`, `init-weights`).

pub mod error;
pub mod metrics;
pub mod network;
pub mod ontology;
pub mod signal;
pub mod streaming;
pub mod synthesis;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
