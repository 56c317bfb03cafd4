//! Head-related impulse response packs: storage, lookup, on-disk format and
//! a deterministic synthetic generator.
//!
//! A pack on disk is a directory holding `index.json`
//! (`{name, sample_rate, entries: [{azimuth_deg, elevation_deg, left, right}]}`)
//! and one mono WAV file per ear and direction, referenced relative to the
//! directory.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spherical::Direction;
use crate::wav::{self, SampleFormat};

pub const SPEED_OF_SOUND: f64 = 343.0;

/// Two directions closer than this are treated as the same pack position.
const DUPLICATE_TOLERANCE_RAD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct HrirEntry {
    pub dir: Direction,
    pub left_fir: Vec<f64>,
    pub right_fir: Vec<f64>,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HrirPack {
    name: String,
    sample_rate: u32,
    entries: Vec<HrirEntry>,
}

impl HrirPack {
    pub fn new(name: impl Into<String>, sample_rate: u32, entries: Vec<HrirEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidPack("pack has no entries".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.sample_rate != sample_rate {
                return Err(Error::SampleRateMismatch {
                    expected: sample_rate,
                    found: e.sample_rate,
                });
            }
            if e.left_fir.is_empty() || e.right_fir.is_empty() {
                return Err(Error::InvalidPack(format!("entry {i} has an empty filter")));
            }
            if e.left_fir.iter().chain(&e.right_fir).any(|v| !v.is_finite()) {
                return Err(Error::InvalidPack(format!("entry {i} has non-finite taps")));
            }
            if entries[..i]
                .iter()
                .any(|o| o.dir.angular_distance(&e.dir) < DUPLICATE_TOLERANCE_RAD)
            {
                return Err(Error::DuplicateDirection {
                    azimuth_deg: e.dir.azimuth_deg(),
                    elevation_deg: e.dir.elevation_deg(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            sample_rate,
            entries,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn entries(&self) -> &[HrirEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry closest to `dir` by great-circle angle. Ties go to the smaller
    /// azimuth, then the smaller elevation.
    pub fn nearest(&self, dir: Direction) -> &HrirEntry {
        let key = |e: &HrirEntry| (dir.angular_distance(&e.dir), e.dir.azimuth(), e.dir.elevation());
        self.entries
            .iter()
            .min_by(|a, b| key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal))
            .expect("pack is non-empty")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PackIndex {
    name: String,
    sample_rate: u32,
    entries: Vec<IndexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    azimuth_deg: f64,
    elevation_deg: f64,
    left: String,
    right: String,
}

/// Loads and validates a pack directory.
pub fn load_pack(path: impl AsRef<Path>) -> Result<HrirPack> {
    let root = path.as_ref();
    let index_path = root.join("index.json");
    let text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let index: PackIndex = serde_json::from_str(&text).map_err(|e| Error::json(&index_path, e))?;

    let read_ear = |file: &str| -> Result<Vec<f64>> {
        let p = root.join(file);
        let sig = wav::read_mono(&p)?;
        if sig.sample_rate() != index.sample_rate {
            return Err(Error::SampleRateMismatch {
                expected: index.sample_rate,
                found: sig.sample_rate(),
            });
        }
        Ok(sig.into_samples())
    };

    let entries = index
        .entries
        .iter()
        .map(|e| {
            Ok(HrirEntry {
                dir: Direction::from_degrees(e.azimuth_deg, e.elevation_deg)?,
                left_fir: read_ear(&e.left)?,
                right_fir: read_ear(&e.right)?,
                sample_rate: index.sample_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    HrirPack::new(index.name, index.sample_rate, entries)
}

/// Writes `pack` as an `index.json` plus per-ear WAV files under `dir`.
pub fn save_pack(pack: &HrirPack, dir: impl AsRef<Path>, format: SampleFormat) -> Result<()> {
    let root = dir.as_ref();
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut entries = Vec::with_capacity(pack.len());
    for (i, e) in pack.entries.iter().enumerate() {
        let left = format!("hrir_{i:04}_L.wav");
        let right = format!("hrir_{i:04}_R.wav");
        wav::write_wav(root.join(&left), &[&e.left_fir], pack.sample_rate, format)?;
        wav::write_wav(root.join(&right), &[&e.right_fir], pack.sample_rate, format)?;
        entries.push(IndexEntry {
            azimuth_deg: e.dir.azimuth_deg(),
            elevation_deg: e.dir.elevation_deg(),
            left,
            right,
        });
    }
    let index = PackIndex {
        name: pack.name.clone(),
        sample_rate: pack.sample_rate,
        entries,
    };
    let index_path = root.join("index.json");
    let text = serde_json::to_string_pretty(&index).map_err(|e| Error::json(&index_path, e))?;
    fs::write(&index_path, text).map_err(|e| Error::io(&index_path, e))
}

/// Parameters of the synthetic horizontal-ring pack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_azimuths: usize,
    /// Meters.
    pub head_radius: f64,
    /// Interaural level difference at +/-90 degrees, in dB.
    pub ild_db: f64,
    pub sample_rate: u32,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_azimuths: 72,
            head_radius: 0.0875,
            ild_db: 6.0,
            sample_rate: crate::signal::DEFAULT_SAMPLE_RATE,
        }
    }
}

/// Cutoff of the contralateral head-shadow low-pass at full lateralization.
const SHADOW_CUTOFF_HZ: f64 = 2000.0;

/// Generates a horizontal ring of `n_azimuths` entries, starting straight
/// ahead and stepping counterclockwise.
///
/// Each ear gets a delayed, scaled impulse. The far ear is delayed by the
/// Woodworth ITD `r / c * (a + sin a)` (a = lateral angle, rounded to whole
/// samples) and smoothed by a one-pole low-pass whose pole grows with
/// `|sin a|`. Ear gains are `10^(+-ild_db * sin(azimuth) / 40)` so their dB
/// ratio is `ild_db * sin(azimuth)`; the gain of each filter equals its tap
/// sum.
pub fn synth_pack(params: SynthParams) -> Result<HrirPack> {
    let SynthParams {
        n_azimuths,
        head_radius,
        ild_db,
        sample_rate,
    } = params;
    if n_azimuths < 2 {
        return Err(Error::Domain(format!("n_azimuths must be >= 2, got {n_azimuths}")));
    }
    if !(head_radius > 0.0 && head_radius.is_finite()) {
        return Err(Error::Domain(format!("head radius must be positive, got {head_radius}")));
    }
    if !ild_db.is_finite() {
        return Err(Error::Domain("ild_db must be finite".into()));
    }
    if sample_rate == 0 {
        return Err(Error::Domain("sample rate must be positive".into()));
    }
    let fs = f64::from(sample_rate);

    let woodworth = |lateral: f64| head_radius / SPEED_OF_SOUND * (lateral + lateral.sin());
    let max_delay = (woodworth(PI / 2.0) * fs).round() as usize;
    let max_pole = (-2.0 * PI * SHADOW_CUTOFF_HZ / fs).exp();
    let tail = if max_pole > 0.0 {
        (1e-12f64.ln() / max_pole.ln()).ceil() as usize
    } else {
        1
    };
    let taps = max_delay + tail + 1;

    let entries = (0..n_azimuths)
        .map(|k| {
            let dir = Direction::new(2.0 * PI * k as f64 / n_azimuths as f64, 0.0)?;
            // computed from the folded index so mirrored entries match bit for bit
            let folded = k.min(n_azimuths - k);
            let sin_az = match (2 * k).cmp(&n_azimuths) {
                std::cmp::Ordering::Less => (2.0 * PI * folded as f64 / n_azimuths as f64).sin(),
                std::cmp::Ordering::Greater => -(2.0 * PI * folded as f64 / n_azimuths as f64).sin(),
                std::cmp::Ordering::Equal => 0.0,
            };
            let lateral = sin_az.abs().asin();
            let delay = (woodworth(lateral) * fs).round() as usize;
            let level_db = ild_db * sin_az;
            let near_gain = 10f64.powf(level_db.abs() / 40.0);
            let far_gain = 10f64.powf(-level_db.abs() / 40.0);
            let pole = max_pole * sin_az.abs();

            let near = impulse(taps, 0, near_gain, 0.0);
            let far = impulse(taps, delay, far_gain, pole);
            let (left_fir, right_fir) = if sin_az >= 0.0 { (near, far) } else { (far, near) };
            Ok(HrirEntry {
                dir,
                left_fir,
                right_fir,
                sample_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    HrirPack::new(
        format!("synthetic-{n_azimuths}az-r{head_radius}-ild{ild_db}dB"),
        sample_rate,
        entries,
    )
}

/// `taps`-long filter: impulse at `delay` scaled by `gain`, optionally run
/// through a one-pole low-pass. The low-pass response is renormalized after
/// truncation so the taps always sum to `gain`.
fn impulse(taps: usize, delay: usize, gain: f64, pole: f64) -> Vec<f64> {
    let mut h = vec![0.0; taps];
    if pole == 0.0 {
        h[delay] = gain;
        return h;
    }
    let mut v = 1.0 - pole;
    for tap in &mut h[delay..] {
        *tap = v;
        v *= pole;
    }
    let total: f64 = h.iter().sum();
    for tap in &mut h {
        *tap *= gain / total;
    }
    h
}
