//! On-disk store of binaural room impulse responses.
//!
//! The store is a JSON manifest listing one record per measured
//! direction plus the WAV files it points at:
//!
//! ```json
//! [
//!   {"subject": "s01", "room": "lab", "azimuth_deg": -30, "file": "s01/lab/az-030.wav"},
//!   {"subject": "s01", "room": "lab", "azimuth_deg": 0,   "file": "s01/lab/az+000.wav"}
//! ]
//! ```
//!
//! File paths are resolved relative to the manifest's directory, so a
//! measurement set stays relocatable. Real HRTF/BRIR collections ship in
//! many formats; converting one into this layout is a small external
//! script (write each direction as a stereo WAV at any sample rate —
//! loading resamples to the engine rate).

use crate::error::{Error, Result};
use crate::signal::{read_wav, AudioData, BinauralSignal, CANONICAL_RATE_HZ};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// One manifest row: a (subject, room, azimuth) direction and its file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrRecord {
    pub subject: String,
    pub room: String,
    pub azimuth_deg: i32,
    pub file: PathBuf,
}

/// An opened manifest with every referenced file checked to exist.
#[derive(Debug, Clone)]
pub struct IRStore {
    base_dir: PathBuf,
    entries: BTreeMap<(String, String, i32), PathBuf>,
}

impl IRStore {
    /// Open a manifest, resolving and existence-checking every file.
    pub fn open(manifest_path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(manifest_path)?;
        let records: Vec<IrRecord> = serde_json::from_str(&text)?;
        if records.is_empty() {
            return Err(Error::Format(format!(
                "impulse-response manifest {} lists no directions",
                manifest_path.display()
            )));
        }
        let base_dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut entries = BTreeMap::new();
        for r in records {
            let path = base_dir.join(&r.file);
            if !path.is_file() {
                return Err(Error::Format(format!(
                    "impulse response {} (subject {}, room {}, azimuth {}) does not exist",
                    path.display(),
                    r.subject,
                    r.room,
                    r.azimuth_deg
                )));
            }
            let key = (r.subject.clone(), r.room.clone(), r.azimuth_deg);
            if entries.insert(key, path).is_some() {
                return Err(Error::Format(format!(
                    "duplicate direction in manifest: subject {}, room {}, azimuth {}",
                    r.subject, r.room, r.azimuth_deg
                )));
            }
        }
        Ok(Self { base_dir, entries })
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct (subject, room) pairs, in manifest-sorted order.
    pub fn subject_rooms(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for (subject, room, _) in self.entries.keys() {
            if out.last().map(|(s, r)| (s.as_str(), r.as_str())) != Some((subject, room)) {
                out.push((subject.clone(), room.clone()));
            }
        }
        out
    }

    /// Measured azimuths for one (subject, room), ascending.
    pub fn azimuths(&self, subject: &str, room: &str) -> Vec<i32> {
        self.entries
            .keys()
            .filter(|(s, r, _)| s == subject && r == room)
            .map(|&(_, _, az)| az)
            .collect()
    }

    /// Load one direction's stereo impulse response at the engine rate.
    pub fn load(&self, subject: &str, room: &str, azimuth_deg: i32) -> Result<BinauralSignal> {
        let key = (subject.to_string(), room.to_string(), azimuth_deg);
        let path = self.entries.get(&key).ok_or_else(|| {
            Error::Lookup(format!(
                "no impulse response for subject {subject:?}, room {room:?}, azimuth {azimuth_deg}"
            ))
        })?;
        let ir = match read_wav(path)? {
            AudioData::Stereo(s) => s,
            AudioData::Mono(_) => {
                return Err(Error::Format(format!(
                    "impulse response {} is mono; binaural rendering needs stereo",
                    path.display()
                )))
            }
        };
        ir.resampled(CANONICAL_RATE_HZ)
    }
}
