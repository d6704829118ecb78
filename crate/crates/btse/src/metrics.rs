//! Signal-quality and spatial-cue metrics, plus the training loss.
//!
//! Quality is scored two ways. [`snr`] is deliberately scale-sensitive —
//! it is the negative of the training loss, so an extractor that returns
//! the right waveform at the wrong gain is penalized. [`si_snr`] projects
//! the estimate onto the reference first, making it blind to gain, and
//! [`si_snri`] reports the improvement over just listening to the
//! mixture.
//!
//! Spatial fidelity is scored by how well the binaural cues survive:
//! [`itd`] (interaural time difference, via windowed cross-correlation)
//! and [`ild`] (interaural level difference, energy ratio in dB).
//! [`delta_spatial_chunked`] follows the evaluation convention of scoring
//! 250 ms chunks and discarding chunks where the reference is silent on
//! both ears.
//!
//! Energies and correlations accumulate in `f64`; ratios that would blow
//! up on perfect reconstruction are capped at ≈80 dB instead of
//! returning infinity, so reports stay finite and comparable.

use crate::error::{Error, Result};
use crate::signal::BinauralSignal;
use serde::{Deserialize, Serialize};

/// Residual-energy floor relative to signal energy: 1e−8 ≙ an 80 dB cap.
const ENERGY_FLOOR_REL: f64 = 1e-8;

/// Cross-correlation window for ITD estimation.
pub const ITD_MAX_LAG_MS: f64 = 1.0;
/// Chunk length for the chunked spatial deltas.
pub const SPATIAL_CHUNK_MS: f64 = 250.0;
/// A chunk whose reference mean-square level is below this on both
/// channels is discarded.
pub const SILENCE_THRESHOLD_DB: f64 = -60.0;

fn energy(x: &[f32]) -> f64 {
    x.iter().map(|&v| v as f64 * v as f64).sum()
}

fn dot64(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

fn check_equal_len(est: &[f32], reference: &[f32], what: &str) -> Result<()> {
    if est.len() != reference.len() {
        return Err(Error::Shape(format!(
            "{what}: estimate has {} samples, reference {}",
            est.len(),
            reference.len()
        )));
    }
    Ok(())
}

/// Scale-sensitive signal-to-noise ratio
/// `10·log10(‖ref‖² / ‖ref − est‖²)`, capped at ≈80 dB when the residual
/// underflows the floor.
pub fn snr(est: &[f32], reference: &[f32]) -> Result<f64> {
    check_equal_len(est, reference, "snr")?;
    let e_ref = energy(reference);
    if e_ref == 0.0 {
        return Err(Error::Metric("snr: reference is all zeros".into()));
    }
    let e_diff: f64 =
        est.iter().zip(reference).map(|(&a, &b)| ((b - a) as f64).powi(2)).sum();
    Ok(10.0 * (e_ref / e_diff.max(ENERGY_FLOOR_REL * e_ref)).log10())
}

/// The training loss: negative mean of the per-channel SNR. Sensitive to
/// both sample alignment and scale, which is exactly why it is used — a
/// causal streaming model must not drift in either.
pub fn snr_loss(est: &BinauralSignal, reference: &BinauralSignal) -> Result<f64> {
    let l = snr(&est.left, &reference.left)?;
    let r = snr(&est.right, &reference.right)?;
    Ok(-(l + r) / 2.0)
}

/// Scale-invariant SNR: project the estimate onto the reference, then
/// score the residual against the projection.
pub fn si_snr(est: &[f32], reference: &[f32]) -> Result<f64> {
    check_equal_len(est, reference, "si_snr")?;
    let e_ref = energy(reference);
    let e_est = energy(est);
    if e_ref == 0.0 || e_est == 0.0 {
        return Err(Error::Metric("si_snr: zero-energy input".into()));
    }
    let coef = dot64(est, reference) / e_ref;
    let mut e_target = 0.0f64;
    let mut e_resid = 0.0f64;
    for (&e, &r) in est.iter().zip(reference) {
        let t = coef * r as f64;
        e_target += t * t;
        let d = e as f64 - t;
        e_resid += d * d;
    }
    if e_target == 0.0 {
        return Err(Error::Metric("si_snr: estimate is orthogonal to the reference".into()));
    }
    Ok(10.0 * (e_target / e_resid.max(ENERGY_FLOOR_REL * e_target)).log10())
}

/// Channel-averaged SI-SNR improvement of the estimate over the raw
/// mixture. Zero means the extractor did no better than a wire.
pub fn si_snri(
    est: &BinauralSignal,
    mixture: &BinauralSignal,
    reference: &BinauralSignal,
) -> Result<f64> {
    let est_score =
        (si_snr(&est.left, &reference.left)? + si_snr(&est.right, &reference.right)?) / 2.0;
    let mix_score = (si_snr(&mixture.left, &reference.left)?
        + si_snr(&mixture.right, &reference.right)?)
        / 2.0;
    Ok(est_score - mix_score)
}

/// Interaural time difference in microseconds: the lag maximizing the
/// cross-correlation `Σ L[t]·R[t+τ]` over `τ ∈ [−max_lag, +max_lag]`.
/// Positive values mean the left ear leads. Ties break toward the
/// smallest |lag|, then toward the positive lag.
pub fn itd(signal: &BinauralSignal, max_lag_ms: f64) -> Result<f64> {
    let (left, right) = (&signal.left, &signal.right);
    if energy(left) == 0.0 || energy(right) == 0.0 {
        return Err(Error::Metric("itd: a channel is silent".into()));
    }
    let fs = signal.sample_rate_hz as f64;
    let max_lag = (fs * max_lag_ms / 1000.0).floor() as i64;
    let n = left.len() as i64;

    let mut best_lag = 0i64;
    let mut best_corr = f64::NEG_INFINITY;
    for lag in -max_lag..=max_lag {
        // Σ over t where both t and t+lag are in range.
        let t0 = 0.max(-lag);
        let t1 = n.min(n - lag);
        let mut corr = 0.0f64;
        for t in t0..t1 {
            corr += left[t as usize] as f64 * right[(t + lag) as usize] as f64;
        }
        let better = corr > best_corr
            || (corr == best_corr
                && (lag.abs() < best_lag.abs()
                    || (lag.abs() == best_lag.abs() && lag > best_lag)));
        if better {
            best_corr = corr;
            best_lag = lag;
        }
    }
    Ok(best_lag as f64 / fs * 1e6)
}

/// Interaural level difference `10·log10(‖L‖²/‖R‖²)` in dB, positive when
/// the left ear is louder. Computed as a difference of logs so swapping
/// the ears negates the value exactly.
pub fn ild(signal: &BinauralSignal) -> Result<f64> {
    let el = energy(&signal.left);
    let er = energy(&signal.right);
    if el == 0.0 || er == 0.0 {
        return Err(Error::Metric("ild: a channel is silent".into()));
    }
    Ok(10.0 * (el.log10() - er.log10()))
}

/// Absolute spatial-cue errors of an estimate against a reference:
/// `(|Δitd| µs, |Δild| dB)` over the full signals.
pub fn delta_spatial(est: &BinauralSignal, reference: &BinauralSignal) -> Result<(f64, f64)> {
    let d_itd = (itd(est, ITD_MAX_LAG_MS)? - itd(reference, ITD_MAX_LAG_MS)?).abs();
    let d_ild = (ild(est)? - ild(reference)?).abs();
    Ok((d_itd, d_ild))
}

/// Mean-square level of a slice in dBFS (0 dBFS ≙ mean square 1.0).
fn level_dbfs(x: &[f32]) -> f64 {
    10.0 * (energy(x) / x.len() as f64).log10()
}

/// Chunked spatial deltas: split into `chunk_ms` chunks, discard chunks
/// where the *reference* is below `silence_db` dBFS on both channels,
/// and average [`delta_spatial`] over the rest. A trailing partial chunk
/// is dropped.
pub fn delta_spatial_chunked(
    est: &BinauralSignal,
    reference: &BinauralSignal,
    chunk_ms: f64,
    silence_db: f64,
) -> Result<(f64, f64)> {
    if est.len() != reference.len() || est.sample_rate_hz != reference.sample_rate_hz {
        return Err(Error::Shape(format!(
            "chunked deltas need matching signals, got {} vs {} samples",
            est.len(),
            reference.len()
        )));
    }
    let chunk = (reference.sample_rate_hz as f64 * chunk_ms / 1000.0).floor() as usize;
    if chunk == 0 || reference.len() < chunk {
        return Err(Error::Argument(format!(
            "signal shorter than one {chunk_ms} ms chunk"
        )));
    }
    let mut sum_itd = 0.0f64;
    let mut sum_ild = 0.0f64;
    let mut kept = 0usize;
    for start in (0..=reference.len() - chunk).step_by(chunk) {
        let ref_chunk = reference.slice(start, chunk);
        if level_dbfs(&ref_chunk.left) < silence_db && level_dbfs(&ref_chunk.right) < silence_db
        {
            continue;
        }
        let est_chunk = est.slice(start, chunk);
        let (di, dl) = delta_spatial(&est_chunk, &ref_chunk)?;
        sum_itd += di;
        sum_ild += dl;
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::Metric(
            "delta_spatial_chunked: every chunk of the reference is silent".into(),
        ));
    }
    Ok((sum_itd / kept as f64, sum_ild / kept as f64))
}

/// Everything the evaluator reports for one (estimate, mixture,
/// reference) triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Channel-averaged SI-SNR of the estimate, dB.
    pub si_snr_db: f64,
    /// SI-SNR improvement over the mixture, dB.
    pub si_snri_db: f64,
    /// Channel-averaged scale-sensitive SNR, dB.
    pub snr_db: f64,
    /// Mean chunked ITD error, microseconds.
    pub delta_itd_us: f64,
    /// Mean chunked ILD error, dB.
    pub delta_ild_db: f64,
    /// The training loss (negative mean SNR) on this pair.
    pub loss_value: f64,
}

/// Score an extraction against its ground truth and the mixture it came
/// from, using the default chunking and silence conventions.
pub fn evaluate(
    est: &BinauralSignal,
    mixture: &BinauralSignal,
    reference: &BinauralSignal,
) -> Result<MetricsReport> {
    let si_l = si_snr(&est.left, &reference.left)?;
    let si_r = si_snr(&est.right, &reference.right)?;
    let snr_l = snr(&est.left, &reference.left)?;
    let snr_r = snr(&est.right, &reference.right)?;
    let (delta_itd_us, delta_ild_db) =
        delta_spatial_chunked(est, reference, SPATIAL_CHUNK_MS, SILENCE_THRESHOLD_DB)?;
    Ok(MetricsReport {
        si_snr_db: (si_l + si_r) / 2.0,
        si_snri_db: si_snri(est, mixture, reference)?,
        snr_db: (snr_l + snr_r) / 2.0,
        delta_itd_us,
        delta_ild_db,
        loss_value: -(snr_l + snr_r) / 2.0,
    })
}
