//! Binaural evaluation metrics: STFT distance, envelope distance, magnitude
//! distance, SNR and the difference-phase distance.
//!
//! The distance metrics sum over the two ears. [`evaluate`] slides a window
//! over the signals, scores each window independently and averages.

use std::f64::consts::PI;

use ndarray::Zip;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::envelope;
use crate::error::{Error, Result};
use crate::signal::{check_rate, pairwise_sum, BinauralSignal, MonoSignal};
use crate::spectral::{stft, Spectrogram, StftConfig};

pub const DEFAULT_SNR_CAP_DB: f64 = 120.0;
pub const DEFAULT_WINDOW_S: f64 = 0.63;
pub const DEFAULT_HOP_S: f64 = 0.1;

fn check_pair(gt: &BinauralSignal, pred: &BinauralSignal) -> Result<()> {
    check_rate(gt.sample_rate(), pred.sample_rate())?;
    if gt.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gt.len(),
            right: pred.len(),
        });
    }
    Ok(())
}

fn channel_specs(b: &BinauralSignal, cfg: &StftConfig) -> Result<[Spectrogram; 2]> {
    let cfg = cfg.with_sample_rate(b.sample_rate());
    Ok([stft(&b.left_signal(), &cfg)?, stft(&b.right_signal(), &cfg)?])
}

fn l2(values: impl Iterator<Item = f64>) -> f64 {
    let sq: Vec<f64> = values.map(|v| v * v).collect();
    pairwise_sum(&sq).sqrt()
}

fn spec_distance(a: &Spectrogram, b: &Spectrogram, magnitude_only: bool) -> f64 {
    let mut terms = Vec::with_capacity(a.bins().len());
    Zip::from(a.bins()).and(b.bins()).for_each(|x, y| {
        terms.push(if magnitude_only {
            (x.norm() - y.norm()).powi(2)
        } else {
            (x - y).norm_sqr()
        })
    });
    pairwise_sum(&terms).sqrt()
}

/// Complex STFT L2 distance, left plus right.
pub fn stft_distance(gt: &BinauralSignal, pred: &BinauralSignal, cfg: &StftConfig) -> Result<f64> {
    check_pair(gt, pred)?;
    let g = channel_specs(gt, cfg)?;
    let p = channel_specs(pred, cfg)?;
    Ok(spec_distance(&g[0], &p[0], false) + spec_distance(&g[1], &p[1], false))
}

/// L2 distance between Hilbert envelopes, left plus right.
pub fn env_distance(gt: &BinauralSignal, pred: &BinauralSignal) -> Result<f64> {
    check_pair(gt, pred)?;
    let d = |a: &[f64], b: &[f64]| {
        let (ea, eb) = (envelope(a), envelope(b));
        l2(ea.iter().zip(&eb).map(|(x, y)| x - y))
    };
    Ok(d(gt.left(), pred.left()) + d(gt.right(), pred.right()))
}

/// L2 distance between STFT magnitudes, left plus right.
pub fn mag_distance(gt: &BinauralSignal, pred: &BinauralSignal, cfg: &StftConfig) -> Result<f64> {
    check_pair(gt, pred)?;
    let g = channel_specs(gt, cfg)?;
    let p = channel_specs(pred, cfg)?;
    Ok(spec_distance(&g[0], &p[0], true) + spec_distance(&g[1], &p[1], true))
}

/// Waveform SNR in dB over both ears, capped at [`DEFAULT_SNR_CAP_DB`].
pub fn snr(gt: &BinauralSignal, pred: &BinauralSignal) -> Result<f64> {
    snr_with_cap(gt, pred, DEFAULT_SNR_CAP_DB)
}

pub fn snr_with_cap(gt: &BinauralSignal, pred: &BinauralSignal, cap_db: f64) -> Result<f64> {
    check_pair(gt, pred)?;
    let sq = |v: f64| v * v;
    let signal: Vec<f64> = gt.left().iter().chain(gt.right()).map(|&v| sq(v)).collect();
    let noise: Vec<f64> = gt
        .left()
        .iter()
        .chain(gt.right())
        .zip(pred.left().iter().chain(pred.right()))
        .map(|(g, p)| sq(g - p))
        .collect();
    let (signal, noise) = (pairwise_sum(&signal), pairwise_sum(&noise));
    if noise == 0.0 {
        return Ok(cap_db);
    }
    if signal == 0.0 {
        return Err(Error::Domain("ground truth is silent; SNR undefined".into()));
    }
    Ok((10.0 * (signal / noise).log10()).min(cap_db))
}

/// Principal value of `a` in `(-pi, pi]`.
fn wrap_phase(a: f64) -> f64 {
    crate::spherical::wrap_angle(a)
}

/// Mean absolute wrapped phase difference between two spectrograms.
/// A zero bin has phase 0.
pub fn phase_distance(reference: &Spectrogram, predicted: &Spectrogram) -> Result<f64> {
    if reference.shape() != predicted.shape() {
        return Err(Error::ShapeMismatch {
            left: reference.shape(),
            right: predicted.shape(),
        });
    }
    let mut terms = Vec::with_capacity(reference.bins().len());
    Zip::from(reference.bins())
        .and(predicted.bins())
        .for_each(|a, b| terms.push(wrap_phase(a.arg() - b.arg()).abs()));
    if terms.is_empty() {
        return Ok(0.0);
    }
    Ok(pairwise_sum(&terms) / terms.len() as f64)
}

/// Difference-phase distance of a predicted `l - r` spectrogram against the
/// ground truth's.
pub fn d_phase(gt: &BinauralSignal, pred_diff_spec: &Spectrogram, cfg: &StftConfig) -> Result<f64> {
    phase_distance(&diff_spectrogram(gt, cfg)?, pred_diff_spec)
}

/// STFT of `left - right`.
pub fn diff_spectrogram(b: &BinauralSignal, cfg: &StftConfig) -> Result<Spectrogram> {
    let diff = b.left().iter().zip(b.right()).map(|(l, r)| l - r).collect();
    stft(
        &MonoSignal::new(diff, b.sample_rate())?,
        &cfg.with_sample_rate(b.sample_rate()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub stft: StftConfig,
    #[serde(skip, default = "default_cap")]
    pub snr_cap_db: f64,
    /// Score the whole signal as a single window.
    #[serde(skip)]
    pub whole_signal: bool,
}

fn default_cap() -> f64 {
    DEFAULT_SNR_CAP_DB
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            window_s: DEFAULT_WINDOW_S,
            hop_s: DEFAULT_HOP_S,
            stft: StftConfig::default(),
            snr_cap_db: DEFAULT_SNR_CAP_DB,
            whole_signal: false,
        }
    }
}

impl EvalConfig {
    /// `(window, hop)` in samples.
    pub fn window_samples(&self, sample_rate: u32) -> Result<(usize, usize)> {
        let fs = f64::from(sample_rate);
        let win = (self.window_s * fs).round();
        let hop = (self.hop_s * fs).round();
        if !(win >= 1.0 && hop >= 1.0) {
            return Err(Error::Domain(format!(
                "window {} s / hop {} s too small at {sample_rate} Hz",
                self.window_s, self.hop_s
            )));
        }
        Ok((win as usize, hop as usize))
    }

    /// Start offsets of the evaluation windows: `floor((n - win) / hop) + 1`
    /// of them.
    pub fn window_starts(&self, len: usize, sample_rate: u32) -> Result<Vec<(usize, usize)>> {
        if self.whole_signal {
            return Ok(vec![(0, len)]);
        }
        let (win, hop) = self.window_samples(sample_rate)?;
        if len < win {
            return Err(Error::SignalTooShort { len, min: win });
        }
        Ok((0..=(len - win) / hop).map(|i| (i * hop, win)).collect())
    }
}

/// Averaged metrics over all evaluation windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "stft")]
    pub stft_dist: f64,
    pub env: f64,
    pub mag: f64,
    pub snr_db: f64,
    pub d_phase: f64,
    pub windows: usize,
    pub config: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub stft: StftConfig,
}

#[derive(Debug, Clone, Copy)]
struct WindowScores {
    stft: f64,
    env: f64,
    mag: f64,
    snr: f64,
    d_phase: f64,
}

fn score_window(gt: &BinauralSignal, pred: &BinauralSignal, cfg: &EvalConfig) -> Result<WindowScores> {
    let g = channel_specs(gt, &cfg.stft)?;
    let p = channel_specs(pred, &cfg.stft)?;
    Ok(WindowScores {
        stft: spec_distance(&g[0], &p[0], false) + spec_distance(&g[1], &p[1], false),
        env: env_distance(gt, pred)?,
        mag: spec_distance(&g[0], &p[0], true) + spec_distance(&g[1], &p[1], true),
        snr: snr_with_cap(gt, pred, cfg.snr_cap_db)?,
        d_phase: phase_distance(&diff_spectrogram(gt, &cfg.stft)?, &diff_spectrogram(pred, &cfg.stft)?)?,
    })
}

/// Sliding-window evaluation of `pred` against `gt`. The phase metric uses
/// the prediction's own `l - r` spectrogram.
pub fn evaluate(gt: &BinauralSignal, pred: &BinauralSignal, cfg: &EvalConfig) -> Result<MetricsReport> {
    check_pair(gt, pred)?;
    cfg.stft.validate()?;
    let starts = cfg.window_starts(gt.len(), gt.sample_rate())?;
    let scores = starts
        .par_iter()
        .map(|&(start, len)| score_window(&gt.slice(start, len), &pred.slice(start, len), cfg))
        .collect::<Result<Vec<_>>>()?;

    let n = scores.len() as f64;
    let mean = |f: fn(&WindowScores) -> f64| {
        let v: Vec<f64> = scores.iter().map(f).collect();
        pairwise_sum(&v) / n
    };
    let report = MetricsReport {
        stft_dist: mean(|s| s.stft),
        env: mean(|s| s.env),
        mag: mean(|s| s.mag),
        snr_db: mean(|s| s.snr),
        d_phase: mean(|s| s.d_phase).clamp(0.0, PI),
        windows: scores.len(),
        config: ReportConfig {
            window_s: cfg.window_s,
            hop_s: cfg.hop_s,
            stft: cfg.stft,
        },
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> BinauralSignal {
        let mut ch = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        BinauralSignal::new(ch(), ch(), 16_000).unwrap()
    }

    #[test]
    fn identical_inputs_score_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gt = random_pair(&mut rng, 4000);
        let cfg = StftConfig::default();
        assert_eq!(stft_distance(&gt, &gt, &cfg).unwrap(), 0.0);
        assert_eq!(env_distance(&gt, &gt).unwrap(), 0.0);
        assert_eq!(mag_distance(&gt, &gt, &cfg).unwrap(), 0.0);
        assert_eq!(snr(&gt, &gt).unwrap(), DEFAULT_SNR_CAP_DB);
        let diff = diff_spectrogram(&gt, &cfg).unwrap();
        assert_eq!(d_phase(&gt, &diff, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn stft_distance_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gt = random_pair(&mut rng, 3000);
        let pred = random_pair(&mut rng, 3000);
        let cfg = StftConfig::default();
        let g = channel_specs(&gt, &cfg).unwrap();
        let p = channel_specs(&pred, &cfg).unwrap();
        let mut total = 0.0;
        let mut total_mag = 0.0;
        for ch in 0..2 {
            let (mut acc, mut acc_mag) = (0.0, 0.0);
            let (f, t) = g[ch].shape();
            for i in 0..f {
                for j in 0..t {
                    let a = g[ch].bins()[(i, j)];
                    let b = p[ch].bins()[(i, j)];
                    acc += (a.re - b.re).powi(2) + (a.im - b.im).powi(2);
                    acc_mag += (a.norm() - b.norm()).powi(2);
                }
            }
            total += acc.sqrt();
            total_mag += acc_mag.sqrt();
        }
        assert!((stft_distance(&gt, &pred, &cfg).unwrap() - total).abs() < 1e-9);
        assert!((mag_distance(&gt, &pred, &cfg).unwrap() - total_mag).abs() < 1e-9);
    }

    #[test]
    fn channel_swap_is_detected() {
        let s: Vec<f64> = (0..4000).map(|n| (n as f64 * 0.05).sin()).collect();
        let gt = BinauralSignal::new(s.clone(), vec![0.0; 4000], 16_000).unwrap();
        assert!(stft_distance(&gt, &gt.swapped(), &StftConfig::default()).unwrap() > 0.0);
    }

    #[test]
    fn envelope_metric_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gt = random_pair(&mut rng, 2048);
        let (l, r) = gt.clone().into_channels();
        let neg = BinauralSignal::new(
            l.iter().map(|v| -v).collect(),
            r.iter().map(|v| -v).collect(),
            16_000,
        )
        .unwrap();
        assert!(env_distance(&gt, &neg).unwrap() < 1e-9);
        assert!(env_distance(&gt, &gt.swapped()).unwrap() > 0.0);
    }

    #[test]
    fn mag_ignores_phase_and_scales() {
        let cfg = StftConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gt = random_pair(&mut rng, 3200);
        let [gl, gr] = channel_specs(&gt, &cfg).unwrap();
        let phase = Array2::from_shape_fn(gl.shape(), |_| Complex64::from_polar(1.0, rng.gen_range(-PI..PI)));
        let rot_l = Spectrogram::new(gl.bins() * &phase, *gl.config(), None).unwrap();
        let rot_r = Spectrogram::new(gr.bins() * &phase, *gr.config(), None).unwrap();
        assert!(spec_distance(&gl, &rot_l, true) + spec_distance(&gr, &rot_r, true) < 1e-9);

        let (l, r) = gt.clone().into_channels();
        let doubled = BinauralSignal::new(
            l.iter().map(|v| 2.0 * v).collect(),
            r.iter().map(|v| 2.0 * v).collect(),
            16_000,
        )
        .unwrap();
        // ||2|S| - |S||| = ||S||
        let expect: f64 = [&gl, &gr]
            .iter()
            .map(|s| s.bins().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .sum();
        assert!((mag_distance(&gt, &doubled, &cfg).unwrap() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn snr_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gt = random_pair(&mut rng, 5000);
        let zero = BinauralSignal::new(vec![0.0; 5000], vec![0.0; 5000], 16_000).unwrap();
        assert!(snr(&gt, &zero).unwrap().abs() < 1e-12);
        assert!(snr(&zero, &gt).is_err());

        // noise scaled to exactly a tenth of the signal energy
        let noise = random_pair(&mut rng, 5000);
        let e_gt: f64 = gt.left().iter().chain(gt.right()).map(|v| v * v).sum();
        let e_n: f64 = noise.left().iter().chain(noise.right()).map(|v| v * v).sum();
        let k = (e_gt / 10.0 / e_n).sqrt();
        let pred = BinauralSignal::new(
            gt.left().iter().zip(noise.left()).map(|(g, n)| g + k * n).collect(),
            gt.right().iter().zip(noise.right()).map(|(g, n)| g + k * n).collect(),
            16_000,
        )
        .unwrap();
        let value = snr(&gt, &pred).unwrap();
        assert!((value - 10.0).abs() < 1e-9);

        let residual: f64 = gt
            .left()
            .iter()
            .chain(gt.right())
            .zip(pred.left().iter().chain(pred.right()))
            .map(|(g, p)| (g - p).powi(2))
            .sum();
        assert!((value + 10.0 * (residual / e_gt).log10()).abs() < 1e-9);
    }

    #[test]
    fn phase_distance_cases() {
        let cfg = StftConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let gt = random_pair(&mut rng, 16_000);
        let diff = diff_spectrogram(&gt, &cfg).unwrap();
        let zero = Spectrogram::zeros(*diff.config(), diff.shape().1, None);
        let mono_mono = d_phase(&gt, &zero, &cfg).unwrap();
        assert!((mono_mono - PI / 2.0).abs() < 0.05, "{mono_mono}");

        let flipped = diff.scaled(-1.0);
        assert!((d_phase(&gt, &flipped, &cfg).unwrap() - PI).abs() < 1e-9);
        assert!(matches!(
            d_phase(&gt, &Spectrogram::zeros(*diff.config(), 3, None), &cfg),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn window_count() {
        let cfg = EvalConfig::default();
        assert_eq!(cfg.window_starts(160_000, 16_000).unwrap().len(), 94);
        assert_eq!(cfg.window_starts(10_080, 16_000).unwrap().len(), 1);
        assert!(cfg.window_starts(10_079, 16_000).is_err());
    }

    #[test]
    fn evaluate_identity_and_mono_mono() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gt = random_pair(&mut rng, 32_000);
        let cfg = EvalConfig::default();
        let same = evaluate(&gt, &gt, &cfg).unwrap();
        assert_eq!(same.windows, 14);
        assert_eq!((same.stft_dist, same.env, same.mag, same.d_phase), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(same.snr_db, DEFAULT_SNR_CAP_DB);

        let mm = evaluate(&gt, &gt.mono_collapse(), &cfg).unwrap();
        assert!((mm.d_phase - PI / 2.0).abs() < 0.05);
        assert!(mm.stft_dist > 0.0 && mm.env > 0.0 && mm.mag > 0.0);

        let whole = evaluate(&gt, &gt.mono_collapse(), &EvalConfig { whole_signal: true, ..cfg }).unwrap();
        assert_eq!(whole.windows, 1);
    }

    #[test]
    fn report_json_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let gt = random_pair(&mut rng, 12_000);
        let report = evaluate(&gt, &gt, &EvalConfig::default()).unwrap();
        let v = serde_json::to_value(&report).unwrap();
        for key in ["stft", "env", "mag", "snr_db", "d_phase", "windows"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["config"]["stft"]["n_fft"], 512);
        assert_eq!(v["config"]["stft"]["win"], 400);
        assert_eq!(v["config"]["stft"]["hop"], 160);
        assert_eq!(v["config"]["window_s"], 0.63);
    }
}
