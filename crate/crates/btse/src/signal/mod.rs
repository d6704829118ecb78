//! Audio signal types and signal-level I/O: WAV files, sample-rate
//! conversion and loudness measurement.
//!
//! Everything downstream (synthesis, the network, metrics) moves audio
//! around as [`MonoSignal`] / [`BinauralSignal`]. Samples are `f32`;
//! nominal full scale is ±1.0 but values outside that range are legal —
//! mixtures are written unclipped.

pub mod loudness;
pub mod resample;
pub mod wav;

pub use loudness::{loudness_lufs, LoudnessValue};
pub use resample::resample;
pub use wav::{read_wav, write_wav, WavEncoding};

use crate::error::{Error, Result};

/// The sample rate the extraction pipeline and scene renderer operate at.
pub const CANONICAL_RATE_HZ: u32 = 44_100;

/// A single-channel signal.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoSignal {
    pub samples: Vec<f32>,
    pub sample_rate_hz: u32,
}

impl MonoSignal {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Self {
        assert!(sample_rate_hz > 0, "sample rate must be positive");
        Self { samples, sample_rate_hz }
    }

    /// All-zero signal of `len` samples.
    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f32) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// A two-channel signal with equal-length left/right sample vectors at a
/// shared rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BinauralSignal {
    pub left: Vec<f32>,
    pub right: Vec<f32>,
    pub sample_rate_hz: u32,
}

impl BinauralSignal {
    pub fn new(left: Vec<f32>, right: Vec<f32>, sample_rate_hz: u32) -> Self {
        assert_eq!(left.len(), right.len(), "channel lengths must match");
        assert!(sample_rate_hz > 0, "sample rate must be positive");
        Self { left, right, sample_rate_hz }
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Self::new(vec![0.0; len], vec![0.0; len], sample_rate_hz)
    }

    /// Diotic signal: the mono input duplicated onto both ears.
    pub fn from_mono(mono: &MonoSignal) -> Self {
        Self::new(mono.samples.clone(), mono.samples.clone(), mono.sample_rate_hz)
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.left.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn channels(&self) -> [&[f32]; 2] {
        [&self.left, &self.right]
    }

    pub fn scaled(&self, gain: f32) -> Self {
        Self {
            left: self.left.iter().map(|s| s * gain).collect(),
            right: self.right.iter().map(|s| s * gain).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Elementwise `self += other` (equal length and rate required).
    pub fn add_assign(&mut self, other: &BinauralSignal) {
        assert_eq!(self.len(), other.len(), "channel lengths must match");
        assert_eq!(self.sample_rate_hz, other.sample_rate_hz, "rates must match");
        for (a, b) in self.left.iter_mut().zip(&other.left) {
            *a += b;
        }
        for (a, b) in self.right.iter_mut().zip(&other.right) {
            *a += b;
        }
    }

    /// Copy of samples `[start, start + len)` from both channels.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self::new(
            self.left[start..start + len].to_vec(),
            self.right[start..start + len].to_vec(),
            self.sample_rate_hz,
        )
    }

    /// Resample both channels to `target_hz`.
    pub fn resampled(&self, target_hz: u32) -> Result<Self> {
        let l = resample::resample(&MonoSignal::new(self.left.clone(), self.sample_rate_hz), target_hz)?;
        let r = resample::resample(&MonoSignal::new(self.right.clone(), self.sample_rate_hz), target_hz)?;
        Ok(Self::new(l.samples, r.samples, target_hz))
    }
}

/// Audio as it comes off disk: one or two channels.
#[derive(Debug, Clone, PartialEq)]
pub enum AudioData {
    Mono(MonoSignal),
    Stereo(BinauralSignal),
}

impl AudioData {
    pub fn sample_rate_hz(&self) -> u32 {
        match self {
            AudioData::Mono(m) => m.sample_rate_hz,
            AudioData::Stereo(s) => s.sample_rate_hz,
        }
    }

    pub fn n_channels(&self) -> usize {
        match self {
            AudioData::Mono(_) => 1,
            AudioData::Stereo(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AudioData::Mono(m) => m.len(),
            AudioData::Stereo(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stereo view: mono inputs are duplicated onto both channels.
    pub fn into_stereo(self) -> BinauralSignal {
        match self {
            AudioData::Mono(m) => BinauralSignal::from_mono(&m),
            AudioData::Stereo(s) => s,
        }
    }

    /// Mono view: stereo inputs are downmixed as the channel mean.
    pub fn into_mono(self) -> MonoSignal {
        match self {
            AudioData::Mono(m) => m,
            AudioData::Stereo(s) => {
                let samples = s
                    .left
                    .iter()
                    .zip(&s.right)
                    .map(|(l, r)| 0.5 * (l + r))
                    .collect();
                MonoSignal::new(samples, s.sample_rate_hz)
            }
        }
    }

    pub fn as_stereo(&self) -> Result<&BinauralSignal> {
        match self {
            AudioData::Stereo(s) => Ok(s),
            AudioData::Mono(_) => Err(Error::Argument("expected a stereo signal, got mono".into())),
        }
    }
}
