//! Pseudo visual-stereo pair synthesis.
//!
//! A scene places one to three peak-normalized mono clips on a frontal image,
//! maps each placement to a direction, renders every source through the
//! virtual-speaker binaural renderer and sums the results. Only scene
//! metadata (placements, directions, gains, patch boxes) is emitted for the
//! visual side.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambisonic::encode;
use crate::binaural::{render_ambisonic_hrir, SpeakerArray};
use crate::error::{Error, Result};
use crate::hrir::HrirPack;
use crate::signal::{check_rate, BinauralSignal, MonoSignal, DEFAULT_SAMPLE_RATE};
use crate::spherical::Direction;
use crate::visualmap::{direction_to_pixel, pixel_to_direction, FovConfig};
use crate::wav::{self, SampleFormat};

pub const MAX_SOURCES: usize = 3;

/// Side of the square visual patch at `patch_scale = 1`, in normalized image
/// units (the image spans 2 units in each axis).
pub const BASE_PATCH_SIZE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Pixel { u: f64, v: f64 },
    Direction { azimuth_rad: f64, elevation_rad: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSource {
    pub audio_ref: String,
    pub placement: Placement,
    /// Amplitude scale; doubles as the inverse-depth proxy.
    pub gain: f64,
    /// Visual patch resize factor (metadata only).
    pub patch_scale: f64,
}

impl SceneSource {
    /// Source at a pixel with `patch_scale` tied to `gain`.
    pub fn at_pixel(audio_ref: impl Into<String>, u: f64, v: f64, gain: f64) -> Self {
        Self {
            audio_ref: audio_ref.into(),
            placement: Placement::Pixel { u, v },
            gain,
            patch_scale: gain,
        }
    }

    /// Resolved `(direction, (u, v))` of this source.
    pub fn resolve(&self, fov: &FovConfig) -> Result<(Direction, (f64, f64))> {
        match self.placement {
            Placement::Pixel { u, v } => Ok((pixel_to_direction(u, v, fov)?, (u, v))),
            Placement::Direction {
                azimuth_rad,
                elevation_rad,
            } => {
                let dir = Direction::new(azimuth_rad, elevation_rad)?;
                Ok((dir, direction_to_pixel(dir, fov)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub sources: Vec<SceneSource>,
    pub fov: FovConfig,
    pub seed: u64,
    pub sample_rate: u32,
    pub duration_s: f64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() || self.sources.len() > MAX_SOURCES {
            return Err(Error::InvalidScene(format!(
                "scene needs 1..={MAX_SOURCES} sources, has {}",
                self.sources.len()
            )));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::InvalidScene(format!("duration {} s must be positive", self.duration_s)));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidScene("sample rate must be positive".into()));
        }
        self.fov.validate()?;
        for s in &self.sources {
            // zero gain is allowed so a source can be muted without changing the scene layout
            if !(s.gain >= 0.0 && s.gain.is_finite()) {
                return Err(Error::InvalidScene(format!("gain {} of {} must be >= 0", s.gain, s.audio_ref)));
            }
            if !(s.patch_scale > 0.0 && s.patch_scale.is_finite()) {
                return Err(Error::InvalidScene(format!(
                    "patch_scale {} of {} must be positive",
                    s.patch_scale, s.audio_ref
                )));
            }
            s.resolve(&self.fov)?;
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * f64::from(self.sample_rate)).round() as usize
    }
}

/// Resolves clip references to audio.
pub trait ClipStore: Sync {
    fn load(&self, audio_ref: &str) -> Result<MonoSignal>;
}

impl ClipStore for HashMap<String, MonoSignal> {
    fn load(&self, audio_ref: &str) -> Result<MonoSignal> {
        self.get(audio_ref)
            .cloned()
            .ok_or_else(|| Error::MissingClip(audio_ref.to_string()))
    }
}

/// Clip references are WAV paths, relative ones resolved against `root`.
#[derive(Debug, Clone)]
pub struct WavClipStore {
    root: PathBuf,
}

impl WavClipStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl ClipStore for WavClipStore {
    fn load(&self, audio_ref: &str) -> Result<MonoSignal> {
        let path = self.root.join(audio_ref);
        if !path.is_file() {
            return Err(Error::MissingClip(path.display().to_string()));
        }
        wav::read_mono(path)
    }
}

/// Divides by the peak absolute sample so the result peaks at exactly 1.
pub fn normalize_amplitude(s: &MonoSignal) -> Result<MonoSignal> {
    let peak = s.peak();
    if peak == 0.0 {
        return Err(Error::SilentSignal);
    }
    MonoSignal::new(s.samples().iter().map(|v| v / peak).collect(), s.sample_rate())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceMetadata {
    pub audio_ref: String,
    pub u: f64,
    pub v: f64,
    pub azimuth_rad: f64,
    pub elevation_rad: f64,
    pub gain: f64,
    pub patch_scale: f64,
    /// `[u_min, v_min, u_max, v_max]` of the visual patch.
    pub patch_box: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetadata {
    pub seed: u64,
    pub sample_rate: u32,
    pub duration_s: f64,
    pub fov: FovConfig,
    pub sources: Vec<SourceMetadata>,
}

/// A synthesized pair: binaural audio plus everything needed to build the
/// matching visual frame.
#[derive(Debug, Clone)]
pub struct PseudoPair {
    pub binaural: BinauralSignal,
    /// Sum of the gain-scaled normalized sources.
    pub mono_mix: MonoSignal,
    /// Each gain-scaled normalized source, in scene order.
    pub per_source_mono: Vec<MonoSignal>,
    pub metadata: SceneMetadata,
}

fn patch_box(u: f64, v: f64, patch_scale: f64) -> [f64; 4] {
    let half = 0.5 * BASE_PATCH_SIZE * patch_scale;
    [u - half, v - half, u + half, v + half]
}

pub fn synth_pseudo_pair(
    spec: &SceneSpec,
    store: &dyn ClipStore,
    pack: &HrirPack,
    arr: &SpeakerArray,
) -> Result<PseudoPair> {
    spec.validate()?;
    check_rate(pack.sample_rate(), spec.sample_rate)?;
    let n = spec.n_samples();

    let mut binaural = BinauralSignal::new(vec![0.0; n], vec![0.0; n], spec.sample_rate)?;
    let mut mix = vec![0.0; n];
    let mut per_source = Vec::with_capacity(spec.sources.len());
    let mut sources_meta = Vec::with_capacity(spec.sources.len());

    for src in &spec.sources {
        let (dir, (u, v)) = src.resolve(&spec.fov)?;
        let clip = store.load(&src.audio_ref)?;
        check_rate(spec.sample_rate, clip.sample_rate())?;
        let scaled = normalize_amplitude(&clip.fit_to_len(n))
            .map_err(|e| match e {
                Error::SilentSignal => Error::InvalidScene(format!("clip {} is silent", src.audio_ref)),
                other => other,
            })?
            .scaled(src.gain);

        let rendered = render_ambisonic_hrir(&encode(&scaled, dir)?, arr, pack)?;
        binaural = binaural.add(&rendered)?;
        for (m, s) in mix.iter_mut().zip(scaled.samples()) {
            *m += s;
        }
        sources_meta.push(SourceMetadata {
            audio_ref: src.audio_ref.clone(),
            u,
            v,
            azimuth_rad: dir.azimuth(),
            elevation_rad: dir.elevation(),
            gain: src.gain,
            patch_scale: src.patch_scale,
            patch_box: patch_box(u, v, src.patch_scale),
        });
        per_source.push(scaled);
    }

    Ok(PseudoPair {
        binaural,
        mono_mix: MonoSignal::new(mix, spec.sample_rate)?,
        per_source_mono: per_source,
        metadata: SceneMetadata {
            seed: spec.seed,
            sample_rate: spec.sample_rate,
            duration_s: spec.duration_s,
            fov: spec.fov,
            sources: sources_meta,
        },
    })
}

/// Probabilities of mixing 1, 2 or 3 sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct KRatios([f64; 3]);

impl KRatios {
    pub fn new(p: [f64; 3]) -> Result<Self> {
        if p.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("ratios {p:?} must be non-negative")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("ratios {p:?} sum to {total}, not 1")));
        }
        Ok(Self(p))
    }

    pub fn probabilities(&self) -> [f64; 3] {
        self.0
    }

    /// Maps a uniform draw in `[0, 1)` to K.
    fn pick(&self, x: f64) -> usize {
        if x < self.0[0] {
            1
        } else if x < self.0[0] + self.0[1] {
            2
        } else {
            3
        }
    }
}

impl Default for KRatios {
    fn default() -> Self {
        Self([0.4, 0.5, 0.1])
    }
}

impl TryFrom<[f64; 3]> for KRatios {
    type Error = Error;

    fn try_from(p: [f64; 3]) -> Result<Self> {
        Self::new(p)
    }
}

impl From<KRatios> for [f64; 3] {
    fn from(r: KRatios) -> Self {
        r.0
    }
}

/// Everything about a sampled scene except the clip choice and K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerOptions {
    pub fov: FovConfig,
    pub sample_rate: u32,
    pub duration_s: f64,
    /// Uniform gain range `[lo, hi]`.
    pub gain_range: [f64; 2],
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            fov: FovConfig::default(),
            sample_rate: DEFAULT_SAMPLE_RATE,
            duration_s: 0.63,
            gain_range: [0.5, 1.0],
        }
    }
}

/// Draws a random scene. Fully determined by `seed` and the inputs.
pub fn sample_scene(seed: u64, pool: &[String], ratios: KRatios, opts: &SamplerOptions) -> Result<SceneSpec> {
    if pool.len() < MAX_SOURCES {
        return Err(Error::InvalidScene(format!(
            "clip pool has {} entries, need at least {MAX_SOURCES}",
            pool.len()
        )));
    }
    let [lo, hi] = opts.gain_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::Domain(format!("invalid gain range [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = ratios.pick(rng.gen::<f64>());
    let picks = sample_indices(&mut rng, pool.len(), k);
    let sources = picks
        .iter()
        .map(|i| {
            let u = rng.gen_range(-1.0..=1.0);
            let v = rng.gen_range(-1.0..=1.0);
            let gain = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
            SceneSource::at_pixel(pool[i].clone(), u, v, gain)
        })
        .collect();
    Ok(SceneSpec {
        sources,
        fov: opts.fov,
        seed,
        sample_rate: opts.sample_rate,
        duration_s: opts.duration_s,
    })
}

/// Two sources at the left and right image edges, vertically centered.
pub fn make_separation_pair(
    clip_a: &str,
    clip_b: &str,
    fov: FovConfig,
    sample_rate: u32,
    duration_s: f64,
) -> Result<SceneSpec> {
    if clip_a == clip_b {
        return Err(Error::InvalidScene(format!("separation pair needs two distinct clips, got {clip_a} twice")));
    }
    Ok(SceneSpec {
        sources: vec![
            SceneSource::at_pixel(clip_a, -1.0, 0.0, 1.0),
            SceneSource::at_pixel(clip_b, 1.0, 0.0, 1.0),
        ],
        fov,
        seed: 0,
        sample_rate,
        duration_s,
    })
}

/// Per-scene seed derived from the master seed and the scene index.
pub fn scene_seed(master_seed: u64, index: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(index as u64))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub master_seed: u64,
    pub count: usize,
    pub pool: Vec<String>,
    #[serde(default)]
    pub ratios: KRatios,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub sampler: SamplerOptions,
    #[serde(default)]
    pub format: SampleFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub k: usize,
    pub scene_json: String,
    pub binaural_wav: String,
    pub mono_wav: String,
    pub source_wavs: Vec<String>,
}

/// Ordered list of generated items; paths are relative to the output dir.
pub type Manifest = Vec<ManifestEntry>;

pub const MANIFEST_FILE: &str = "manifest.json";

impl ManifestEntry {
    fn for_index(index: usize, k: usize) -> Self {
        let stem = format!("scene_{index:06}");
        Self {
            index,
            k,
            scene_json: format!("{stem}.json"),
            binaural_wav: format!("{stem}_binaural.wav"),
            mono_wav: format!("{stem}_mono.wav"),
            source_wavs: (0..k).map(|j| format!("{stem}_src{j}.wav")).collect(),
        }
    }
}

/// Histogram of K over a manifest, indexed `[K=1, K=2, K=3]`.
pub fn k_histogram(manifest: &Manifest) -> [usize; 3] {
    let mut h = [0; 3];
    for e in manifest {
        h[e.k - 1] += 1;
    }
    h
}

fn write_item(root: &Path, entry: &ManifestEntry, pair: &PseudoPair, format: SampleFormat) -> Result<()> {
    let scene_path = root.join(&entry.scene_json);
    let json = serde_json::to_string_pretty(&pair.metadata).map_err(|e| Error::json(&scene_path, e))?;
    fs::write(&scene_path, json).map_err(|e| Error::io(&scene_path, e))?;
    wav::write_binaural(root.join(&entry.binaural_wav), &pair.binaural, format)?;
    wav::write_mono(root.join(&entry.mono_wav), &pair.mono_mix, format)?;
    for (name, src) in entry.source_wavs.iter().zip(&pair.per_source_mono) {
        wav::write_mono(root.join(name), src, format)?;
    }
    Ok(())
}

/// Samples, renders and writes `config.count` pairs plus `manifest.json`.
///
/// Scenes are produced in parallel; each depends only on the master seed and
/// its index, so output bytes do not depend on scheduling. The first failing
/// scene (lowest index) aborts the run.
pub fn gen_dataset(
    config: &DatasetConfig,
    store: &dyn ClipStore,
    pack: &HrirPack,
    arr: &SpeakerArray,
) -> Result<Manifest> {
    let root = &config.output_dir;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;

    let results: Vec<Result<ManifestEntry>> = (0..config.count)
        .into_par_iter()
        .map(|index| {
            let run = || {
                let spec = sample_scene(scene_seed(config.master_seed, index), &config.pool, config.ratios, &config.sampler)?;
                let pair = synth_pseudo_pair(&spec, store, pack, arr)?;
                let entry = ManifestEntry::for_index(index, spec.sources.len());
                write_item(root, &entry, &pair, config.format)?;
                Ok(entry)
            };
            run().map_err(|e| Error::Scene {
                index,
                source: Box::new(e),
            })
        })
        .collect();
    let manifest = results.into_iter().collect::<Result<Manifest>>()?;

    let manifest_path = root.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&manifest_path, e))?;
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}
