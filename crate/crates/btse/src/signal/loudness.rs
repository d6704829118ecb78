//! Loudness measurement and gain staging.
//!
//! Implements ITU-R BS.1770-style loudness: each channel runs through the
//! two-stage K-weighting pre-filter (a high-frequency shelf followed by a
//! high-pass), channel mean-square powers are summed with unit weights and
//! converted to LUFS with the standard −0.691 dB offset. There is **no**
//! gating stage — measurements here calibrate synthetic scene stems, where
//! gating would make gain staging non-linear. The filter coefficients are
//! derived from the continuous-time prototype at whatever sample rate the
//! signal carries, so 44.1 kHz material does not need resampling to 48 kHz.
//!
//! A full-scale 997 Hz sine measures −3.01 LUFS, the BS.1770 calibration
//! point: the K-filter gain near 1 kHz cancels the −0.691 offset and the
//! sine's mean-square power of ½ contributes the remaining −3.01 dB.

use super::{BinauralSignal, MonoSignal};
use crate::error::{Error, Result};

/// Offset applied to the log of K-weighted power (BS.1770).
pub const LUFS_OFFSET_DB: f64 = -0.691;

/// Shortest signal a loudness measurement is defined on.
pub const MIN_MEASUREMENT_S: f64 = 0.4;

/// Result of a loudness measurement: a LUFS value, or an explicit marker
/// for all-zero signals whose loudness is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoudnessValue {
    Lufs(f64),
    Silent,
}

impl LoudnessValue {
    pub fn lufs(self) -> Option<f64> {
        match self {
            LoudnessValue::Lufs(v) => Some(v),
            LoudnessValue::Silent => None,
        }
    }

    pub fn is_silent(self) -> bool {
        matches!(self, LoudnessValue::Silent)
    }
}

/// One biquad section, direct form II transposed, f64 state.
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    z1: f64,
    z2: f64,
}

impl Biquad {
    fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.z1;
        self.z1 = self.b1 * x - self.a1 * y + self.z2;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }
}

/// Stage 1: +4 dB high-frequency shelf modelling the acoustic effect of
/// the head. Prototype parameters as standardized for 48 kHz, rebuilt for
/// the given rate via the bilinear transform.
fn head_shelf(fs: f64) -> Biquad {
    let db = 3.999_843_853_973_347;
    let f0 = 1_681.974_450_955_533;
    let q = 0.707_175_236_955_419_6;

    let k = (std::f64::consts::PI * f0 / fs).tan();
    let vh = 10f64.powf(db / 20.0);
    let vb = vh.powf(0.499_666_774_154_541_6);
    let a0 = 1.0 + k / q + k * k;
    Biquad {
        b0: (vh + vb * k / q + k * k) / a0,
        b1: 2.0 * (k * k - vh) / a0,
        b2: (vh - vb * k / q + k * k) / a0,
        a1: 2.0 * (k * k - 1.0) / a0,
        a2: (1.0 - k / q + k * k) / a0,
        z1: 0.0,
        z2: 0.0,
    }
}

/// Stage 2: high-pass that rolls off rumble below ~38 Hz.
fn rumble_highpass(fs: f64) -> Biquad {
    let f0 = 38.135_470_876_024_44;
    let q = 0.500_327_037_323_877_3;

    let k = (std::f64::consts::PI * f0 / fs).tan();
    let a0 = 1.0 + k / q + k * k;
    Biquad {
        b0: 1.0,
        b1: -2.0,
        b2: 1.0,
        a1: 2.0 * (k * k - 1.0) / a0,
        a2: (1.0 - k / q + k * k) / a0,
        z1: 0.0,
        z2: 0.0,
    }
}

/// Mean square of one channel after K-weighting.
fn k_weighted_power(samples: &[f32], fs: f64) -> f64 {
    let mut shelf = head_shelf(fs);
    let mut hp = rumble_highpass(fs);
    let mut acc = 0.0f64;
    for &s in samples {
        let z = hp.process(shelf.process(s as f64));
        acc += z * z;
    }
    acc / samples.len() as f64
}

/// Measure loudness over an arbitrary channel set (mono passes one
/// channel, binaural passes two).
pub fn loudness_lufs(channels: &[&[f32]], sample_rate_hz: u32) -> Result<LoudnessValue> {
    let len = channels.first().map_or(0, |c| c.len());
    if (len as f64) < MIN_MEASUREMENT_S * sample_rate_hz as f64 {
        return Err(Error::Argument(format!(
            "loudness needs at least {} ms of audio, got {} samples at {} Hz",
            (MIN_MEASUREMENT_S * 1000.0) as u32,
            len,
            sample_rate_hz
        )));
    }
    if channels.iter().all(|c| c.iter().all(|&s| s == 0.0)) {
        return Ok(LoudnessValue::Silent);
    }
    let total: f64 = channels
        .iter()
        .map(|c| k_weighted_power(c, sample_rate_hz as f64))
        .sum();
    if total <= 0.0 {
        return Ok(LoudnessValue::Silent);
    }
    Ok(LoudnessValue::Lufs(LUFS_OFFSET_DB + 10.0 * total.log10()))
}

impl MonoSignal {
    pub fn loudness_lufs(&self) -> Result<LoudnessValue> {
        loudness_lufs(&[&self.samples], self.sample_rate_hz)
    }

    /// Copy gain-adjusted so its measured loudness equals `target_lufs`.
    /// Silent signals cannot be scaled and yield [`Error::Silent`].
    pub fn scale_to_lufs(&self, target_lufs: f64) -> Result<MonoSignal> {
        let gain = gain_for(self.loudness_lufs()?, target_lufs)?;
        Ok(self.scaled(gain))
    }
}

impl BinauralSignal {
    pub fn loudness_lufs(&self) -> Result<LoudnessValue> {
        loudness_lufs(&[&self.left, &self.right], self.sample_rate_hz)
    }

    /// See [`MonoSignal::scale_to_lufs`]; the same gain is applied to both
    /// channels.
    pub fn scale_to_lufs(&self, target_lufs: f64) -> Result<BinauralSignal> {
        let gain = gain_for(self.loudness_lufs()?, target_lufs)?;
        Ok(self.scaled(gain))
    }
}

fn gain_for(measured: LoudnessValue, target_lufs: f64) -> Result<f32> {
    match measured.lufs() {
        Some(current) => Ok(10f64.powf((target_lufs - current) / 20.0) as f32),
        None => Err(Error::Silent("cannot scale a silent signal to a loudness target".into())),
    }
}
