//! Windowed-sinc sample-rate conversion.
//!
//! Band-limited interpolation with a Kaiser-windowed sinc kernel: 64 taps
//! per phase, β = 8.6 (≈ 90 dB stopband). When downsampling, the kernel is
//! stretched so the cutoff sits at the target Nyquist frequency and acts as
//! the anti-aliasing filter.

use super::MonoSignal;
use crate::error::{Error, Result};

/// Taps per interpolation phase.
const TAPS: usize = 64;
/// Kaiser window shape parameter.
const BETA: f64 = 8.6;

/// Resample `signal` to `target_hz`.
///
/// Output length is `round(len · target_hz / source_hz)`. Identical input
/// and target rates return an exact copy.
pub fn resample(signal: &MonoSignal, target_hz: u32) -> Result<MonoSignal> {
    if target_hz == 0 {
        return Err(Error::Argument("target sample rate must be positive".into()));
    }
    let source_hz = signal.sample_rate_hz;
    if target_hz == source_hz {
        return Ok(signal.clone());
    }

    let n_in = signal.samples.len();
    let ratio = target_hz as f64 / source_hz as f64;
    let n_out = (n_in as f64 * ratio).round() as usize;

    // Cutoff relative to the source Nyquist; < 1 only when downsampling.
    let cutoff = ratio.min(1.0);
    let half_width = (TAPS / 2) as f64 / cutoff;
    let i0_beta = bessel_i0(BETA);

    let x = &signal.samples;
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out {
        let pos = n as f64 / ratio;
        let first = (pos - half_width).ceil() as i64;
        let last = (pos + half_width).floor() as i64;
        let mut acc = 0.0f64;
        let mut wsum = 0.0f64;
        for i in first..=last {
            let u = cutoff * (i as f64 - pos);
            let w = cutoff * sinc(u) * kaiser(u / (TAPS / 2) as f64, i0_beta);
            wsum += w;
            if i >= 0 && (i as usize) < n_in {
                acc += w * x[i as usize] as f64;
            }
        }
        out.push((acc / wsum) as f32);
    }
    Ok(MonoSignal::new(out, target_hz))
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-12 {
        1.0
    } else {
        let pu = std::f64::consts::PI * u;
        pu.sin() / pu
    }
}

fn kaiser(u: f64, i0_beta: f64) -> f64 {
    let t = 1.0 - u * u;
    if t <= 0.0 {
        0.0
    } else {
        bessel_i0(BETA * t.sqrt()) / i0_beta
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..40 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}
