//! Loudness measurement and normalization.
//!
//! The meter follows the ITU-R BS.1770 K-weighting chain — a high-shelf
//! modelling the head, a rumble high-pass, mean-square power, the −0.691 dB
//! offset — but deliberately skips block gating: scene mixing needs the
//! relative level of an event stem over its own extent, not a
//! broadcast-compliance number. A full-scale 997 Hz sine reads −3.01 LUFS;
//! silence reads as silent rather than as a number.

use std::f32::consts::TAU;

use btse::signal::{loudness_lufs, MonoSignal};

fn sine(hz: f32, amp: f32, n: usize, rate: f32) -> MonoSignal {
    MonoSignal::new(
        (0..n).map(|i| amp * (TAU * hz * i as f32 / rate).sin()).collect(),
        rate as u32,
    )
}

fn main() -> btse::Result<()> {
    let rate = 48_000;
    let n = 3 * rate as usize;

    for (name, amp) in [("full-scale", 1.0f32), ("-20 dB", 0.1), ("-40 dB", 0.01)] {
        let tone = sine(997.0, amp, n, rate as f32);
        println!("997 Hz {name:<10} -> {:+7.2} LUFS", tone.loudness_lufs()?.lufs().unwrap());
    }

    let silent = MonoSignal::silence(n, rate);
    println!("silence          -> {:?}", silent.loudness_lufs()?);

    // Normalize a quiet tone to the broadcast target and re-measure.
    let quiet = sine(997.0, 0.003, n, rate as f32);
    let before = quiet.loudness_lufs()?.lufs().unwrap();
    let normalized = quiet.scale_to_lufs(-23.0)?;
    let after = normalized.loudness_lufs()?.lufs().unwrap();
    println!("\nnormalize: {before:+.2} LUFS -> target -23 -> measured {after:+.2} LUFS");

    // No gating: padding with silence dilutes the mean square, so doubling
    // the length with silence drops the reading by exactly 3.01 LU. That is
    // the behavior scene mixing wants — an event's level is defined over
    // its own extent, and the synthesizer measures stems before placement.
    let mut padded = sine(997.0, 0.1, n, rate as f32);
    padded.samples.extend(std::iter::repeat(0.0).take(3 * rate as usize));
    println!(
        "ungated: 3 s tone reads {:+.2} LUFS; tone + 3 s of silence reads {:+.2} LUFS",
        sine(997.0, 0.1, n, rate as f32).loudness_lufs()?.lufs().unwrap(),
        padded.loudness_lufs()?.lufs().unwrap()
    );

    // The multichannel meter sums channel powers before the log.
    let stereo = btse::signal::BinauralSignal::from_mono(&sine(997.0, 0.1, n, rate as f32));
    println!(
        "stereo: the same tone on both channels reads {:+.2} LUFS (+3.01 vs mono)",
        loudness_lufs(&[&stereo.left, &stereo.right], rate)?.lufs().unwrap()
    );
    Ok(())
}
