//! First-order ambisonic (B-format) encoding and mixing.
//!
//! Channels are W, X, Y, Z in ACN order with SN3D normalization, so every
//! first-order gain is a plain direction cosine.

use crate::error::{Error, Result};
use crate::signal::{check_rate, MonoSignal};
use crate::spherical::{first_order, Direction};

/// A first-order ambisonic signal.
#[derive(Debug, Clone, PartialEq)]
pub struct BFormat {
    w: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    sample_rate: u32,
}

impl BFormat {
    pub fn new(w: Vec<f64>, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, sample_rate: u32) -> Result<Self> {
        for ch in [&x, &y, &z] {
            if ch.len() != w.len() {
                return Err(Error::LengthMismatch {
                    left: w.len(),
                    right: ch.len(),
                });
            }
        }
        if sample_rate == 0 {
            return Err(Error::Domain("sample rate must be positive".into()));
        }
        Ok(Self {
            w,
            x,
            y,
            z,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], sample_rate)
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Channels in W, X, Y, Z order.
    pub fn channels(&self) -> [&[f64]; 4] {
        [&self.w, &self.x, &self.y, &self.z]
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// The four coefficients at sample `t`.
    pub fn frame(&self, t: usize) -> [f64; 4] {
        [self.w[t], self.x[t], self.y[t], self.z[t]]
    }
}

/// Encodes a mono source arriving from `dir`.
pub fn encode(source: &MonoSignal, dir: Direction) -> Result<BFormat> {
    if source.is_empty() {
        return Err(Error::EmptySignal);
    }
    let gains = first_order(dir);
    let ch = |g: f64| source.samples().iter().map(|s| s * g).collect::<Vec<_>>();
    BFormat::new(ch(gains[0]), ch(gains[1]), ch(gains[2]), ch(gains[3]), source.sample_rate())
}

/// Channel-wise sum, zero-padding shorter parts to the longest.
pub fn mix(parts: &[BFormat]) -> Result<BFormat> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Domain("cannot mix an empty list".into()))?;
    let rate = first.sample_rate;
    for p in parts {
        check_rate(rate, p.sample_rate)?;
    }
    let len = parts.iter().map(BFormat::len).max().unwrap_or(0);
    let mut out = BFormat::silence(len, rate)?;
    for p in parts {
        for (dst, src) in [
            (&mut out.w, &p.w),
            (&mut out.x, &p.x),
            (&mut out.y, &p.y),
            (&mut out.z, &p.z),
        ] {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
    Ok(out)
}
