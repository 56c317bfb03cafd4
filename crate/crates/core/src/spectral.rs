//! STFT / ISTFT, complex masks and the mask-training objectives.
//!
//! Frames are centered with reflection padding of `n_fft / 2` on both sides.
//! A periodic Hann window of `win_length` samples is zero-padded to `n_fft`
//! and centered in the frame. The inverse divides the overlap-added frames by
//! the overlap-added squared window.

use std::f64::consts::PI;
use std::io::{Read, Write};

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{BinauralSignal, MonoSignal, DEFAULT_SAMPLE_RATE};

/// Default Tikhonov term of [`oracle_mask`].
pub const DEFAULT_MASK_EPS: f64 = 1e-8;

/// Minimum ratio between the smallest and largest overlap-added squared
/// window value for the inverse to be well defined.
const OVERLAP_ADD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub n_fft: usize,
    #[serde(rename = "win")]
    pub win_length: usize,
    pub hop: usize,
    #[serde(skip, default = "default_rate")]
    pub sample_rate: u32,
}

fn default_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}

impl Default for StftConfig {
    /// 512-point FFT, 400-sample window, 160-sample hop at 16 kHz: a 0.63 s
    /// clip gives a 257 x 64 spectrogram.
    fn default() -> Self {
        Self {
            n_fft: 512,
            win_length: 400,
            hop: 160,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

impl StftConfig {
    pub fn new(n_fft: usize, win_length: usize, hop: usize, sample_rate: u32) -> Result<Self> {
        let cfg = Self {
            n_fft,
            win_length,
            hop,
            sample_rate,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_sample_rate(self, sample_rate: u32) -> Self {
        Self { sample_rate, ..self }
    }

    /// Checks sizes and that the squared window overlap-adds to a strictly
    /// positive sum everywhere, which the inverse needs.
    pub fn validate(&self) -> Result<()> {
        if self.n_fft < 2 || self.n_fft % 2 != 0 {
            return Err(Error::InvalidStft(format!("n_fft {} must be even and >= 2", self.n_fft)));
        }
        if self.win_length == 0 || self.win_length > self.n_fft {
            return Err(Error::InvalidStft(format!(
                "win_length {} must be in 1..={}",
                self.win_length, self.n_fft
            )));
        }
        if self.hop == 0 || self.hop > self.win_length {
            return Err(Error::InvalidStft(format!(
                "hop {} must be in 1..={}",
                self.hop, self.win_length
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidStft("sample rate must be positive".into()));
        }
        let w = self.window();
        let mut acc = vec![0.0; self.hop];
        for (i, v) in w.iter().enumerate() {
            acc[i % self.hop] += v * v;
        }
        let max = acc.iter().cloned().fold(0.0, f64::max);
        let min = acc.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > OVERLAP_ADD_FLOOR * max) {
            return Err(Error::InvalidStft(format!(
                "window of {} samples with hop {} does not overlap-add",
                self.win_length, self.hop
            )));
        }
        Ok(())
    }

    pub fn n_freq(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Frames produced for a signal of `len` samples.
    pub fn n_frames(&self, len: usize) -> usize {
        1 + len / self.hop
    }

    /// Periodic Hann window of `win_length`, centered in `n_fft` samples.
    pub fn window(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n_fft];
        let offset = (self.n_fft - self.win_length) / 2;
        for i in 0..self.win_length {
            w[offset + i] = 0.5 - 0.5 * (2.0 * PI * i as f64 / self.win_length as f64).cos();
        }
        w
    }

    fn min_len(&self) -> usize {
        self.win_length.max(self.n_fft / 2 + 1)
    }
}

/// Complex spectrogram, `n_freq` rows by `n_frames` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    bins: Array2<Complex64>,
    config: StftConfig,
    source_len: Option<usize>,
}

impl Spectrogram {
    pub fn new(bins: Array2<Complex64>, config: StftConfig, source_len: Option<usize>) -> Result<Self> {
        if bins.nrows() != config.n_freq() {
            return Err(Error::InvalidStft(format!(
                "{} rows, expected {}",
                bins.nrows(),
                config.n_freq()
            )));
        }
        if bins.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidStft("non-finite bin".into()));
        }
        Ok(Self {
            bins,
            config,
            source_len,
        })
    }

    pub fn zeros(config: StftConfig, n_frames: usize, source_len: Option<usize>) -> Self {
        Self {
            bins: Array2::zeros((config.n_freq(), n_frames)),
            config,
            source_len,
        }
    }

    pub fn bins(&self) -> &Array2<Complex64> {
        &self.bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn source_len(&self) -> Option<usize> {
        self.source_len
    }

    /// `(n_freq, n_frames)`.
    pub fn shape(&self) -> (usize, usize) {
        self.bins.dim()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            bins: self.bins.mapv(|c| c * a),
            ..self.clone()
        }
    }

    pub fn sub(&self, other: &Spectrogram) -> Result<Self> {
        check_shape(self.shape(), other.shape())?;
        Ok(Self {
            bins: &self.bins - &other.bins,
            ..self.clone()
        })
    }

    /// Flat little-endian export: `"SPEC"`, u32 F, u32 T, u32 sample rate,
    /// then `(re, im)` float32 pairs in row-major (F, then T) order.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        let (f, t) = self.shape();
        w.write_all(b"SPEC")?;
        w.write_all(&(f as u32).to_le_bytes())?;
        w.write_all(&(t as u32).to_le_bytes())?;
        w.write_all(&self.config.sample_rate.to_le_bytes())?;
        let mut buf = Vec::with_capacity(f * t * 8);
        for c in self.bins.iter() {
            buf.extend_from_slice(&(c.re as f32).to_le_bytes());
            buf.extend_from_slice(&(c.im as f32).to_le_bytes());
        }
        w.write_all(&buf)
    }

    /// Reads the flat export. `config` supplies the framing the header does
    /// not carry; its bin count and sample rate must agree with the header.
    pub fn read_from(mut r: impl Read, config: StftConfig) -> Result<Self> {
        let bad = |m: &str| Error::MalformedSpectrogram(m.to_string());
        let mut header = [0u8; 16];
        r.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
        if &header[..4] != b"SPEC" {
            return Err(bad("bad magic"));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
        let (f, t, rate) = (word(4) as usize, word(8) as usize, word(12));
        if f != config.n_freq() || rate != config.sample_rate {
            return Err(bad("header does not match the STFT configuration"));
        }
        let mut payload = vec![0u8; f * t * 8];
        r.read_exact(&mut payload).map_err(|_| bad("truncated payload"))?;
        let values: Vec<Complex64> = payload
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
                let im = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
                Complex64::new(f64::from(re), f64::from(im))
            })
            .collect();
        let bins = Array2::from_shape_vec((f, t), values).map_err(|_| bad("shape"))?;
        Spectrogram::new(bins, config, None)
    }
}

/// Complex time-frequency multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMask {
    bins: Array2<Complex64>,
}

impl ComplexMask {
    pub fn new(bins: Array2<Complex64>) -> Self {
        Self { bins }
    }

    pub fn identity(shape: (usize, usize)) -> Self {
        Self {
            bins: Array2::from_elem(shape, Complex64::new(1.0, 0.0)),
        }
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        Self {
            bins: Array2::zeros(shape),
        }
    }

    pub fn bins(&self) -> &Array2<Complex64> {
        &self.bins
    }

    pub fn shape(&self) -> (usize, usize) {
        self.bins.dim()
    }
}

fn check_shape(left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left != right {
        return Err(Error::ShapeMismatch { left, right });
    }
    Ok(())
}

fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((0..pad).map(|i| x[n - 2 - i]));
    out
}

pub fn stft(s: &MonoSignal, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let x = s.samples();
    if x.len() < cfg.min_len() {
        return Err(Error::SignalTooShort {
            len: x.len(),
            min: cfg.min_len(),
        });
    }
    let pad = cfg.n_fft / 2;
    let padded = reflect_pad(x, pad);
    let window = cfg.window();
    let n_frames = cfg.n_frames(x.len());
    let n_freq = cfg.n_freq();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.n_fft);
    let mut bins = Array2::<Complex64>::zeros((n_freq, n_frames));
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.n_fft];
    for t in 0..n_frames {
        let start = t * cfg.hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(padded[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, v) in buf[..n_freq].iter().enumerate() {
            bins[(k, t)] = *v;
        }
    }
    Ok(Spectrogram {
        bins,
        config: StftConfig {
            sample_rate: s.sample_rate(),
            ..*cfg
        },
        source_len: Some(x.len()),
    })
}

pub fn istft(spec: &Spectrogram) -> Result<MonoSignal> {
    let cfg = spec.config;
    cfg.validate()?;
    let (n_freq, n_frames) = spec.shape();
    let n_fft = cfg.n_fft;
    let pad = n_fft / 2;
    let window = cfg.window();
    let padded_len = n_fft + (n_frames.saturating_sub(1)) * cfg.hop;
    let out_len = spec
        .source_len
        .unwrap_or_else(|| padded_len.saturating_sub(2 * pad));

    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n_fft);
    let mut acc = vec![0.0; padded_len.max(out_len + pad)];
    let mut norm = vec![0.0; acc.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    let scale = 1.0 / n_fft as f64;
    for t in 0..n_frames {
        for k in 0..n_freq {
            buf[k] = spec.bins[(k, t)];
        }
        // Hermitian completion; DC and Nyquist bins are taken as real
        buf[0].im = 0.0;
        buf[n_fft / 2].im = 0.0;
        for k in 1..n_fft / 2 {
            buf[n_fft - k] = buf[k].conj();
        }
        ifft.process(&mut buf);
        let start = t * cfg.hop;
        for i in 0..n_fft {
            acc[start + i] += buf[i].re * scale * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    let samples = (pad..pad + out_len)
        .map(|i| if norm[i] > 1e-11 { acc[i] / norm[i] } else { 0.0 })
        .collect();
    MonoSignal::new(samples, cfg.sample_rate)
}

/// Element-wise complex product `m * spec`.
pub fn apply_mask(m: &ComplexMask, spec: &Spectrogram) -> Result<Spectrogram> {
    check_shape(m.shape(), spec.shape())?;
    Ok(Spectrogram {
        bins: &m.bins * &spec.bins,
        ..spec.clone()
    })
}

/// Mono mixture and the spectrograms the mask objective works with.
#[derive(Debug, Clone)]
pub struct MonoDiff {
    /// `l + r`
    pub mono: MonoSignal,
    /// STFT of `l + r`
    pub mono_spec: Spectrogram,
    /// STFT of `l - r`
    pub diff_spec: Spectrogram,
}

pub fn mono_and_diff(l: &MonoSignal, r: &MonoSignal, cfg: &StftConfig) -> Result<MonoDiff> {
    crate::signal::check_rate(l.sample_rate(), r.sample_rate())?;
    if l.len() != r.len() {
        return Err(Error::LengthMismatch {
            left: l.len(),
            right: r.len(),
        });
    }
    let combine = |sign: f64| {
        let v = l.samples().iter().zip(r.samples()).map(|(a, b)| a + sign * b).collect();
        MonoSignal::new(v, l.sample_rate())
    };
    let mono = combine(1.0)?;
    let diff = combine(-1.0)?;
    Ok(MonoDiff {
        mono_spec: stft(&mono, cfg)?,
        diff_spec: stft(&diff, cfg)?,
        mono,
    })
}

/// `left = (mono + diff) / 2`, `right = (mono - diff) / 2`.
pub fn reconstruct_lr(mono: &MonoSignal, diff: &MonoSignal) -> Result<BinauralSignal> {
    crate::signal::check_rate(mono.sample_rate(), diff.sample_rate())?;
    if mono.len() != diff.len() {
        return Err(Error::LengthMismatch {
            left: mono.len(),
            right: diff.len(),
        });
    }
    let (m, d) = (mono.samples(), diff.samples());
    BinauralSignal::new(
        m.iter().zip(d).map(|(a, b)| (a + b) / 2.0).collect(),
        m.iter().zip(d).map(|(a, b)| (a - b) / 2.0).collect(),
        mono.sample_rate(),
    )
}

/// Per-bin regularized least-squares mask `S_D conj(S_m) / (|S_m|^2 + eps)`.
pub fn oracle_mask(diff: &Spectrogram, mono: &Spectrogram, eps: f64) -> Result<ComplexMask> {
    check_shape(diff.shape(), mono.shape())?;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let mut bins = Array2::zeros(diff.shape());
    Zip::from(&mut bins)
        .and(&diff.bins)
        .and(&mono.bins)
        .for_each(|m, d, s| *m = d * s.conj() / (s.norm_sqr() + eps));
    Ok(ComplexMask { bins })
}

fn residual_sq(target: &Spectrogram, m: &ComplexMask, source: &Spectrogram) -> Result<f64> {
    check_shape(target.shape(), m.shape())?;
    check_shape(target.shape(), source.shape())?;
    let mut terms = Vec::with_capacity(target.bins.len());
    Zip::from(&target.bins)
        .and(&m.bins)
        .and(&source.bins)
        .for_each(|t, mm, s| terms.push((t - mm * s).norm_sqr()));
    Ok(crate::signal::pairwise_sum(&terms))
}

/// `||S_D - M * S_m||_2`, summed over all bins.
pub fn loss_stereo(diff: &Spectrogram, m: &ComplexMask, mono: &Spectrogram) -> Result<f64> {
    Ok(residual_sq(diff, m, mono)?.sqrt())
}

/// `||S_a - M_a * S_mix||^2 + ||S_b - M_b * S_mix||^2`.
pub fn loss_separation(
    spec_a: &Spectrogram,
    spec_b: &Spectrogram,
    mask_a: &ComplexMask,
    mask_b: &ComplexMask,
    mix: &Spectrogram,
) -> Result<f64> {
    Ok(residual_sq(spec_a, mask_a, mix)? + residual_sq(spec_b, mask_b, mix)?)
}

pub const DEFAULT_LAMBDA_SEP: f64 = 1.0;

pub fn loss_total(stereo: f64, sep: f64, lambda_sep: f64) -> f64 {
    stereo + lambda_sep * sep
}
