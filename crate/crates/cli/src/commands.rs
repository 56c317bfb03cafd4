use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use spatialize_core::scenegen::{k_histogram, WavClipStore};
use spatialize_core::wav::{read_binaural, read_mono, write_binaural};
use spatialize_core::{
    decode_wy, default_speaker_array, encode, evaluate, gen_dataset, load_pack, make_speaker_array, pixel_to_direction,
    render_ambisonic_hrir, render_direct_hrir, save_pack, synth_pack, BinauralSignal, DatasetConfig, Direction,
    EvalConfig, FovConfig, HrirPack, KRatios, MetricsReport, MonoSignal, SpeakerArray, SynthParams,
};

use crate::args::{CompareArgs, DatasetArgs, Decoder, DirectionArgs, EvalArgs, HrirSynthArgs, RenderArgs};

/// Bad flag combination or config value, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        let msg = format!("no such file: {}", path.display());
        Err(std::io::Error::new(std::io::ErrorKind::NotFound, msg).into())
    }
}

fn resolve_direction(args: &DirectionArgs) -> Result<Direction> {
    let dir = match (&args.pixel, args.azimuth_deg) {
        (Some(p), _) => pixel_to_direction(p[0], p[1], &FovConfig::default())?,
        (None, Some(az)) => Direction::from_degrees(az, args.elevation_deg)?,
        (None, None) => return Err(usage("one of --azimuth-deg or --pixel is required")),
    };
    println!(
        "direction: azimuth_deg={:.6} elevation_deg={:.6}",
        dir.azimuth_deg(),
        dir.elevation_deg()
    );
    Ok(dir)
}

fn pack_for(path: Option<&Path>, sample_rate: u32) -> Result<HrirPack> {
    match path {
        Some(p) => Ok(load_pack(p)?),
        None => Ok(synth_pack(SynthParams {
            sample_rate,
            ..SynthParams::default()
        })?),
    }
}

fn render_with(decoder: Decoder, s: &MonoSignal, dir: Direction, pack: &HrirPack, arr: &SpeakerArray) -> Result<BinauralSignal> {
    Ok(match decoder {
        Decoder::Wy => decode_wy(&encode(s, dir)?),
        Decoder::Hrir => render_direct_hrir(s, dir, pack)?,
        Decoder::AmbisonicHrir => render_ambisonic_hrir(&encode(s, dir)?, arr, pack)?,
    })
}

pub fn render(args: &RenderArgs) -> Result<()> {
    require_file(&args.input)?;
    let dir = resolve_direction(&args.direction)?;
    let source = read_mono(&args.input)?;
    let pack = pack_for(args.hrir_pack.as_deref(), source.sample_rate())?;
    let out = render_with(args.decoder, &source, dir, &pack, &default_speaker_array())?;
    write_binaural(&args.output, &out, args.format.into())?;
    println!("wrote {}", args.output.display());
    Ok(())
}

#[derive(Debug, Deserialize)]
struct DatasetFile {
    #[serde(flatten)]
    dataset: DatasetConfig,
    /// HRIR pack directory; a synthetic pack when absent.
    #[serde(default)]
    hrir_pack: Option<PathBuf>,
    /// Virtual speakers as `[azimuth_deg, elevation_deg]`.
    #[serde(default)]
    speakers: Option<Vec<[f64; 2]>>,
}

pub fn dataset(args: &DatasetArgs) -> Result<()> {
    require_file(&args.config)?;
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let file: DatasetFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();

    let mut cfg = file.dataset;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(count) = args.count {
        cfg.count = count;
    }
    if let Some(r) = &args.ratios {
        cfg.ratios = KRatios::new([r[0], r[1], r[2]]).map_err(|e| usage(e.to_string()))?;
    }
    if let Some(out) = &args.output_dir {
        cfg.output_dir = out.clone();
    } else if cfg.output_dir.is_relative() {
        cfg.output_dir = base.join(&cfg.output_dir);
    }
    for clip in &cfg.pool {
        require_file(&base.join(clip))?;
    }

    let pack = pack_for(file.hrir_pack.map(|p| base.join(p)).as_deref(), cfg.sampler.sample_rate)?;
    let arr = match &file.speakers {
        Some(list) => {
            let dirs = list
                .iter()
                .map(|&[az, el]| Direction::from_degrees(az, el))
                .collect::<spatialize_core::Result<Vec<_>>>()?;
            make_speaker_array(&dirs)?
        }
        None => default_speaker_array(),
    };

    let marker = cfg.output_dir.join("INCOMPLETE");
    let store = WavClipStore::new(&base);
    match gen_dataset(&cfg, &store, &pack, &arr) {
        Ok(manifest) => {
            if marker.exists() {
                fs::remove_file(&marker).with_context(|| format!("removing {}", marker.display()))?;
            }
            let [k1, k2, k3] = k_histogram(&manifest);
            println!("scenes={} k1={k1} k2={k2} k3={k3}", manifest.len());
            println!("wrote {}", cfg.output_dir.display());
            Ok(())
        }
        Err(e) => {
            if cfg.output_dir.is_dir() {
                let _ = fs::write(&marker, format!("{e}\n"));
            }
            Err(e.into())
        }
    }
}

fn print_report(r: &MetricsReport) {
    println!(
        "stft={:.6} env={:.6} mag={:.6} snr_db={:.3} d_phase={:.6} windows={}",
        r.stft_dist, r.env, r.mag, r.snr_db, r.d_phase, r.windows
    );
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    require_file(&args.gt)?;
    require_file(&args.pred)?;
    if !(args.window_s > 0.0 && args.hop_s > 0.0) {
        return Err(usage("--window-s and --hop-s must be positive"));
    }
    let gt = read_binaural(&args.gt)?;
    let pred = read_binaural(&args.pred)?;
    let cfg = EvalConfig {
        window_s: args.window_s,
        hop_s: args.hop_s,
        whole_signal: args.whole_signal,
        ..EvalConfig::default()
    };
    let report = evaluate(&gt, &pred, &cfg)?;
    write_json(&args.report, &report)?;
    print_report(&report);
    Ok(())
}

pub fn compare_decoders(args: &CompareArgs) -> Result<()> {
    require_file(&args.input)?;
    let dir = resolve_direction(&args.direction)?;
    let source = read_mono(&args.input)?;
    let pack = pack_for(args.hrir_pack.as_deref(), source.sample_rate())?;
    let arr = default_speaker_array();
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;

    let names = [("wy", Decoder::Wy), ("hrir", Decoder::Hrir), ("ambisonic_hrir", Decoder::AmbisonicHrir)];
    let mut outputs = Vec::new();
    for (name, decoder) in names {
        let out = render_with(decoder, &source, dir, &pack, &arr)?;
        write_binaural(args.out_dir.join(format!("{name}.wav")), &out, args.format.into())?;
        outputs.push((name, out));
    }

    let mut cfg = EvalConfig::default();
    let (win, _) = cfg.window_samples(source.sample_rate())?;
    cfg.whole_signal = source.len() < win;
    let mut distances = BTreeMap::new();
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            let report = evaluate(&outputs[i].1, &outputs[j].1, &cfg)?;
            distances.insert(format!("{}_vs_{}", outputs[i].0, outputs[j].0), report);
        }
    }
    write_json(&args.out_dir.join("distances.json"), &distances)?;
    for (name, out) in &outputs {
        println!(
            "{name}: left_rms={:.6} right_rms={:.6}",
            out.left_signal().rms(),
            out.right_signal().rms()
        );
    }
    println!("wrote {}", args.out_dir.display());
    Ok(())
}

pub fn hrir_synth(args: &HrirSynthArgs) -> Result<()> {
    let pack = synth_pack(SynthParams {
        n_azimuths: args.n_azimuths as usize,
        head_radius: args.head_radius,
        ild_db: args.ild_db,
        sample_rate: args.sample_rate,
    })?;
    save_pack(&pack, &args.out_dir, args.format.into())?;
    println!("wrote {} entries to {}", pack.len(), args.out_dir.display());
    Ok(())
}
