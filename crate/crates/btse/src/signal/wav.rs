//! Minimal RIFF/WAVE reader and writer.
//!
//! Supported on read: PCM16 and PCM24 (format tag 1) and IEEE float32
//! (format tag 3), mono or interleaved stereo, any sample rate. Integer
//! samples are normalized as `value / 32768` (16-bit) or `value / 8388608`
//! (24-bit). Unknown chunks (`LIST`, `fact`, …) are skipped. Supported on
//! write: [`WavEncoding::Pcm16`] (round-to-nearest with clamping) and
//! [`WavEncoding::Float32`] (bit-exact).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{AudioData, BinauralSignal, MonoSignal};
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

/// Sample encodings the writer can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// Read a WAV file into one or two channels of `f32` samples.
pub fn read_wav(path: &Path) -> Result<AudioData> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);

    let mut riff = [0u8; 4];
    r.read_exact(&mut riff)?;
    if &riff != b"RIFF" {
        return Err(Error::Format(format!("{}: missing RIFF header", path.display())));
    }
    let _riff_size = r.read_u32::<LittleEndian>()?;
    let mut wave = [0u8; 4];
    r.read_exact(&mut wave)?;
    if &wave != b"WAVE" {
        return Err(Error::Format(format!("{}: not a WAVE file", path.display())));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    loop {
        let mut id = [0u8; 4];
        match r.read_exact(&mut id) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                return Err(Error::Format(format!("{}: no data chunk", path.display())));
            }
            Err(e) => return Err(e.into()),
        }
        let size = r.read_u32::<LittleEndian>()?;
        match &id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Format(format!("{}: fmt chunk too small", path.display())));
                }
                let format = r.read_u16::<LittleEndian>()?;
                let channels = r.read_u16::<LittleEndian>()?;
                let rate = r.read_u32::<LittleEndian>()?;
                let _byte_rate = r.read_u32::<LittleEndian>()?;
                let _block_align = r.read_u16::<LittleEndian>()?;
                let bits = r.read_u16::<LittleEndian>()?;
                skip(&mut r, size as i64 - 16 + (size % 2) as i64)?;
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => {
                let (format, channels, rate, bits) = fmt.ok_or_else(|| {
                    Error::Format(format!("{}: data chunk before fmt chunk", path.display()))
                })?;
                return read_data(&mut r, path, size, format, channels, rate, bits);
            }
            _ => skip(&mut r, size as i64 + (size % 2) as i64)?,
        }
    }
}

fn skip<R: Read + Seek>(r: &mut R, bytes: i64) -> Result<()> {
    r.seek(SeekFrom::Current(bytes))?;
    Ok(())
}

fn read_data<R: Read>(
    r: &mut R,
    path: &Path,
    size: u32,
    format: u16,
    channels: u16,
    rate: u32,
    bits: u16,
) -> Result<AudioData> {
    if channels != 1 && channels != 2 {
        return Err(Error::Format(format!(
            "{}: {channels} channels (only mono and stereo are supported)",
            path.display()
        )));
    }
    if rate == 0 {
        return Err(Error::Format(format!("{}: zero sample rate", path.display())));
    }

    let bytes_per_sample = match (format, bits) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_PCM, 24) => 3,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        _ => {
            return Err(Error::Format(format!(
                "{}: unsupported encoding (format tag {format}, {bits} bits)",
                path.display()
            )))
        }
    };
    if size as usize % (bytes_per_sample * channels as usize) != 0 {
        return Err(Error::Format(format!(
            "{}: data size {size} is not a whole number of frames",
            path.display()
        )));
    }

    let n_samples = size as usize / bytes_per_sample;
    let mut raw = vec![0u8; size as usize];
    r.read_exact(&mut raw)?;

    let mut interleaved = Vec::with_capacity(n_samples);
    match (format, bits) {
        (FORMAT_PCM, 16) => {
            for chunk in raw.chunks_exact(2) {
                let v = i16::from_le_bytes([chunk[0], chunk[1]]);
                interleaved.push(v as f32 / 32768.0);
            }
        }
        (FORMAT_PCM, 24) => {
            for chunk in raw.chunks_exact(3) {
                // Sign-extend the 24-bit little-endian value.
                let v = (i32::from_le_bytes([0, chunk[0], chunk[1], chunk[2]])) >> 8;
                interleaved.push(v as f32 / 8_388_608.0);
            }
        }
        (FORMAT_IEEE_FLOAT, 32) => {
            for chunk in raw.chunks_exact(4) {
                let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
                if !v.is_finite() {
                    return Err(Error::Format(format!(
                        "{}: non-finite float sample",
                        path.display()
                    )));
                }
                interleaved.push(v);
            }
        }
        _ => unreachable!(),
    }

    Ok(match channels {
        1 => AudioData::Mono(MonoSignal::new(interleaved, rate)),
        _ => {
            let frames = interleaved.len() / 2;
            let mut left = Vec::with_capacity(frames);
            let mut right = Vec::with_capacity(frames);
            for frame in interleaved.chunks_exact(2) {
                left.push(frame[0]);
                right.push(frame[1]);
            }
            AudioData::Stereo(BinauralSignal::new(left, right, rate))
        }
    })
}

/// Write one or two channels to `path` with the requested encoding.
pub fn write_wav(path: &Path, data: &AudioData, encoding: WavEncoding) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Argument(format!(
            "refusing to write zero-length WAV {}",
            path.display()
        )));
    }
    let rate = data.sample_rate_hz();
    let channels = data.n_channels() as u16;
    let frames = data.len();

    let bytes_per_sample: usize = match encoding {
        WavEncoding::Pcm16 => 2,
        WavEncoding::Float32 => 4,
    };
    let data_size = frames * channels as usize * bytes_per_sample;

    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(b"RIFF")?;
    w.write_u32::<LittleEndian>((36 + data_size) as u32)?;
    w.write_all(b"WAVE")?;
    w.write_all(b"fmt ")?;
    w.write_u32::<LittleEndian>(16)?;
    w.write_u16::<LittleEndian>(match encoding {
        WavEncoding::Pcm16 => FORMAT_PCM,
        WavEncoding::Float32 => FORMAT_IEEE_FLOAT,
    })?;
    w.write_u16::<LittleEndian>(channels)?;
    w.write_u32::<LittleEndian>(rate)?;
    w.write_u32::<LittleEndian>(rate * channels as u32 * bytes_per_sample as u32)?;
    w.write_u16::<LittleEndian>(channels * bytes_per_sample as u16)?;
    w.write_u16::<LittleEndian>(8 * bytes_per_sample as u16)?;
    w.write_all(b"data")?;
    w.write_u32::<LittleEndian>(data_size as u32)?;

    let write_sample = |w: &mut BufWriter<File>, s: f32| -> Result<()> {
        match encoding {
            WavEncoding::Pcm16 => {
                let q = (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                w.write_i16::<LittleEndian>(q)?;
            }
            WavEncoding::Float32 => w.write_f32::<LittleEndian>(s)?,
        }
        Ok(())
    };

    match data {
        AudioData::Mono(m) => {
            for &s in &m.samples {
                write_sample(&mut w, s)?;
            }
        }
        AudioData::Stereo(s) => {
            for (l, r) in s.left.iter().zip(&s.right) {
                write_sample(&mut w, *l)?;
                write_sample(&mut w, *r)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

impl MonoSignal {
    pub fn write_wav(&self, path: &Path, encoding: WavEncoding) -> Result<()> {
        write_wav(path, &AudioData::Mono(self.clone()), encoding)
    }
}

impl BinauralSignal {
    pub fn write_wav(&self, path: &Path, encoding: WavEncoding) -> Result<()> {
        write_wav(path, &AudioData::Stereo(self.clone()), encoding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("btse-wav-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn float32_roundtrip_is_bit_exact() {
        let sig = BinauralSignal::new(
            vec![0.0, 0.25, -1.0, 1.5, 1e-7],
            vec![0.5, -0.5, 0.125, -1.5, -1e-7],
            44_100,
        );
        let path = tmp("roundtrip_f32.wav");
        sig.write_wav(&path, WavEncoding::Float32).unwrap();
        let back = read_wav(&path).unwrap().into_stereo();
        assert_eq!(back, sig);
    }

    #[test]
    fn pcm16_roundtrip_error_is_bounded_by_one_lsb() {
        let samples: Vec<f32> = (0..2000).map(|i| ((i as f32) * 0.13).sin() * 0.999).collect();
        let sig = MonoSignal::new(samples.clone(), 16_000);
        let path = tmp("roundtrip_pcm16.wav");
        sig.write_wav(&path, WavEncoding::Pcm16).unwrap();
        let back = read_wav(&path).unwrap().into_mono();
        assert_eq!(back.sample_rate_hz, 16_000);
        let max_err = samples
            .iter()
            .zip(&back.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(max_err <= 1.0 / 32768.0, "max_err = {max_err}");
    }

    #[test]
    fn pcm16_full_scale_clamps() {
        let sig = MonoSignal::new(vec![1.0, -1.0, 2.0, -2.0], 8000);
        let path = tmp("clamp_pcm16.wav");
        sig.write_wav(&path, WavEncoding::Pcm16).unwrap();
        let back = read_wav(&path).unwrap().into_mono();
        assert_eq!(back.samples[0], 32767.0 / 32768.0);
        assert_eq!(back.samples[1], -1.0);
        assert_eq!(back.samples[2], 32767.0 / 32768.0);
        assert_eq!(back.samples[3], -1.0);
    }

    #[test]
    fn pcm24_reads_with_sign_extension() {
        // Hand-assemble a 3-sample mono PCM24 file: +1/2 full scale, -full
        // scale, +1 LSB.
        let mut bytes: Vec<u8> = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&(36u32 + 9).to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes()); // PCM
        bytes.extend_from_slice(&1u16.to_le_bytes()); // mono
        bytes.extend_from_slice(&44_100u32.to_le_bytes());
        bytes.extend_from_slice(&(44_100u32 * 3).to_le_bytes());
        bytes.extend_from_slice(&3u16.to_le_bytes());
        bytes.extend_from_slice(&24u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&9u32.to_le_bytes());
        bytes.extend_from_slice(&[0x00, 0x00, 0x40]); // 0x400000 = 2^22
        bytes.extend_from_slice(&[0x00, 0x00, 0x80]); // -2^23
        bytes.extend_from_slice(&[0x01, 0x00, 0x00]); // 1
        let path = tmp("pcm24.wav");
        std::fs::write(&path, bytes).unwrap();
        let m = read_wav(&path).unwrap().into_mono();
        assert_eq!(m.samples, vec![0.5, -1.0, 1.0 / 8_388_608.0]);
    }

    #[test]
    fn unknown_chunks_are_skipped() {
        let sig = MonoSignal::new(vec![0.1, -0.1], 22_050);
        let path = tmp("chunky.wav");
        sig.write_wav(&path, WavEncoding::Float32).unwrap();
        // Splice a LIST chunk between fmt and data.
        let bytes = std::fs::read(&path).unwrap();
        let mut spliced = bytes[..36].to_vec();
        spliced.extend_from_slice(b"LIST");
        spliced.extend_from_slice(&4u32.to_le_bytes());
        spliced.extend_from_slice(b"INFO");
        spliced.extend_from_slice(&bytes[36..]);
        // Fix up the RIFF size.
        let riff_size = (spliced.len() - 8) as u32;
        spliced[4..8].copy_from_slice(&riff_size.to_le_bytes());
        std::fs::write(&path, spliced).unwrap();
        let m = read_wav(&path).unwrap().into_mono();
        assert_eq!(m.samples, vec![0.1, -0.1]);
    }

    #[test]
    fn zero_length_write_is_an_argument_error() {
        let sig = MonoSignal::new(vec![], 44_100);
        let err = sig.write_wav(&tmp("empty.wav"), WavEncoding::Float32).unwrap_err();
        assert!(matches!(err, Error::Argument(_)), "{err:?}");
    }

    #[test]
    fn unsupported_encoding_is_a_format_error() {
        let sig = MonoSignal::new(vec![0.1], 44_100);
        let path = tmp("alaw.wav");
        sig.write_wav(&path, WavEncoding::Pcm16).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[20] = 6; // format tag 6 = A-law
        std::fs::write(&path, bytes).unwrap();
        let err = read_wav(&path).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err:?}");
    }

    #[test]
    fn truncated_data_is_an_io_error() {
        let sig = MonoSignal::new(vec![0.1; 100], 44_100);
        let path = tmp("truncated.wav");
        sig.write_wav(&path, WavEncoding::Float32).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 37]).unwrap();
        let err = read_wav(&path).unwrap_err();
        assert!(matches!(err, Error::Io(_)), "{err:?}");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_wav(Path::new("/nonexistent/nope.wav")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn stereo_interleaving_preserves_channel_identity() {
        let sig = BinauralSignal::new(vec![1.0, 2.0, 3.0], vec![-1.0, -2.0, -3.0], 44_100);
        let path = tmp("stereo.wav");
        sig.write_wav(&path, WavEncoding::Float32).unwrap();
        let back = read_wav(&path).unwrap().into_stereo();
        assert_eq!(back.left, vec![1.0, 2.0, 3.0]);
        assert_eq!(back.right, vec![-1.0, -2.0, -3.0]);
    }
}
