//! Sample containers shared by the encoders, renderers and metrics.

use crate::error::{Error, Result};

/// Default processing rate.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// A single-channel signal.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl MonoSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Domain("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Returns a copy truncated or zero-padded to exactly `len` samples.
    pub fn fit_to_len(&self, len: usize) -> Self {
        let mut samples = self.samples.clone();
        samples.resize(len, 0.0);
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// A two-channel headphone signal.
#[derive(Debug, Clone, PartialEq)]
pub struct BinauralSignal {
    left: Vec<f64>,
    right: Vec<f64>,
    sample_rate: u32,
}

impl BinauralSignal {
    pub fn new(left: Vec<f64>, right: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::LengthMismatch {
                left: left.len(),
                right: right.len(),
            });
        }
        if sample_rate == 0 {
            return Err(Error::Domain("sample rate must be positive".into()));
        }
        if left.iter().chain(&right).any(|s| !s.is_finite()) {
            return Err(Error::Domain("non-finite binaural sample".into()));
        }
        Ok(Self {
            left,
            right,
            sample_rate,
        })
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// Left and right exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            left: self.right.clone(),
            right: self.left.clone(),
            sample_rate: self.sample_rate,
        }
    }

    /// Both channels replaced by their average, the "mono-mono" baseline.
    pub fn mono_collapse(&self) -> Self {
        let mid: Vec<f64> = self
            .left
            .iter()
            .zip(&self.right)
            .map(|(l, r)| 0.5 * (l + r))
            .collect();
        Self {
            left: mid.clone(),
            right: mid,
            sample_rate: self.sample_rate,
        }
    }

    /// Samples `[start, start + len)` of both channels.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            left: self.left[start..start + len].to_vec(),
            right: self.right[start..start + len].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn left_signal(&self) -> MonoSignal {
        MonoSignal {
            samples: self.left.clone(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn right_signal(&self) -> MonoSignal {
        MonoSignal {
            samples: self.right.clone(),
            sample_rate: self.sample_rate,
        }
    }

    /// Sample-wise sum; the rates and lengths must agree.
    pub fn add(&self, other: &BinauralSignal) -> Result<Self> {
        check_rate(self.sample_rate, other.sample_rate)?;
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Ok(Self {
            left: sum(&self.left, &other.left),
            right: sum(&self.right, &other.right),
            sample_rate: self.sample_rate,
        })
    }

    pub fn into_channels(self) -> (Vec<f64>, Vec<f64>) {
        (self.left, self.right)
    }
}

pub(crate) fn check_rate(expected: u32, found: u32) -> Result<()> {
    if expected != found {
        return Err(Error::SampleRateMismatch { expected, found });
    }
    Ok(())
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (pairwise_sum_by(x, |v| v * v) / x.len() as f64).sqrt()
}

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise summation; the result does not depend on how callers chunk work.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    pairwise_sum_by(x, |v| v)
}

pub(crate) fn pairwise_sum_by(x: &[f64], f: impl Fn(f64) -> f64 + Copy) -> f64 {
    if x.len() <= PAIRWISE_BLOCK {
        return x.iter().map(|&v| f(v)).sum();
    }
    let mid = x.len() / 2;
    pairwise_sum_by(&x[..mid], f) + pairwise_sum_by(&x[mid..], f)
}
