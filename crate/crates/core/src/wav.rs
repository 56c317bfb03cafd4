//! WAV reading and writing on top of `hound`.
//!
//! Reading accepts 16-bit PCM and 32-bit float. Writing defaults to float32.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ambisonic::BFormat;
use crate::error::{Error, Result};
use crate::signal::{BinauralSignal, MonoSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    #[default]
    Float32,
    Pcm16,
}

/// Deinterleaved channels of a WAV file.
#[derive(Debug, Clone)]
pub struct WavData {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
}

fn wav_err(path: &Path) -> impl FnOnce(hound::Error) -> Error + '_ {
    move |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<WavData> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(wav_err(path))?;
    let spec = reader.spec();
    let n_ch = usize::from(spec.channels);
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err(path))?,
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err(path))?,
        _ => {
            return Err(Error::Wav {
                path: path.to_path_buf(),
                source: hound::Error::Unsupported,
            })
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / n_ch.max(1)); n_ch];
    for frame in interleaved.chunks_exact(n_ch) {
        for (ch, &v) in channels.iter_mut().zip(frame) {
            ch.push(v);
        }
    }
    Ok(WavData {
        channels,
        sample_rate: spec.sample_rate,
    })
}

pub fn write_wav(
    path: impl AsRef<Path>,
    channels: &[&[f64]],
    sample_rate: u32,
    format: SampleFormat,
) -> Result<()> {
    let path = path.as_ref();
    let len = channels.first().map_or(0, |c| c.len());
    if let Some(bad) = channels.iter().find(|c| c.len() != len) {
        return Err(Error::LengthMismatch {
            left: len,
            right: bad.len(),
        });
    }
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate,
        bits_per_sample: match format {
            SampleFormat::Float32 => 32,
            SampleFormat::Pcm16 => 16,
        },
        sample_format: match format {
            SampleFormat::Float32 => hound::SampleFormat::Float,
            SampleFormat::Pcm16 => hound::SampleFormat::Int,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err(path))?;
    for t in 0..len {
        for ch in channels {
            let v = ch[t];
            match format {
                SampleFormat::Float32 => writer.write_sample(v as f32),
                SampleFormat::Pcm16 => {
                    writer.write_sample((v * 32768.0).round().clamp(-32768.0, 32767.0) as i16)
                }
            }
            .map_err(wav_err(path))?;
        }
    }
    writer.finalize().map_err(wav_err(path))
}

/// Reads a mono file; multi-channel input is rejected.
pub fn read_mono(path: impl AsRef<Path>) -> Result<MonoSignal> {
    let path = path.as_ref();
    let mut data = read_wav(path)?;
    if data.channels.len() != 1 {
        return Err(Error::Domain(format!(
            "{}: expected 1 channel, found {}",
            path.display(),
            data.channels.len()
        )));
    }
    MonoSignal::new(data.channels.remove(0), data.sample_rate)
}

pub fn write_mono(path: impl AsRef<Path>, signal: &MonoSignal, format: SampleFormat) -> Result<()> {
    write_wav(path, &[signal.samples()], signal.sample_rate(), format)
}

/// Reads a stereo file with the left ear on channel 0.
pub fn read_binaural(path: impl AsRef<Path>) -> Result<BinauralSignal> {
    let path = path.as_ref();
    let mut data = read_wav(path)?;
    if data.channels.len() != 2 {
        return Err(Error::Domain(format!(
            "{}: expected 2 channels, found {}",
            path.display(),
            data.channels.len()
        )));
    }
    let right = data.channels.pop().unwrap_or_default();
    let left = data.channels.pop().unwrap_or_default();
    BinauralSignal::new(left, right, data.sample_rate)
}

pub fn write_binaural(path: impl AsRef<Path>, signal: &BinauralSignal, format: SampleFormat) -> Result<()> {
    write_wav(path, &[signal.left(), signal.right()], signal.sample_rate(), format)
}

/// Writes a 4-channel float32 file in W, X, Y, Z order.
pub fn write_bformat(path: impl AsRef<Path>, b: &BFormat) -> Result<()> {
    write_wav(path, &b.channels(), b.sample_rate(), SampleFormat::Float32)
}

pub fn read_bformat(path: impl AsRef<Path>) -> Result<BFormat> {
    let path = path.as_ref();
    let data = read_wav(path)?;
    let [w, x, y, z]: [Vec<f64>; 4] = data.channels.try_into().map_err(|c: Vec<Vec<f64>>| {
        Error::Domain(format!("{}: expected 4 channels, found {}", path.display(), c.len()))
    })?;
    BFormat::new(w, x, y, z, data.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambisonic::encode;
    use crate::spherical::Direction;

    #[test]
    fn float32_round_trip_is_exact_for_f32_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.wav");
        let b = BinauralSignal::new(vec![0.5, -0.25, 0.125], vec![1.0, 0.0, -1.0], 16_000).unwrap();
        write_binaural(&p, &b, SampleFormat::Float32).unwrap();
        assert_eq!(read_binaural(&p).unwrap(), b);
    }

    #[test]
    fn pcm16_round_trip_quantizes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.wav");
        let m = MonoSignal::new(vec![0.1, -0.3, 0.9], 44_100).unwrap();
        write_mono(&p, &m, SampleFormat::Pcm16).unwrap();
        let back = read_mono(&p).unwrap();
        assert_eq!(back.sample_rate(), 44_100);
        for (a, b) in back.samples().iter().zip(m.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn bformat_channel_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bf.wav");
        let s = MonoSignal::new(vec![1.0, 0.5], 16_000).unwrap();
        let b = encode(&s, Direction::from_degrees(90.0, 0.0).unwrap()).unwrap();
        write_bformat(&p, &b).unwrap();
        let back = read_bformat(&p).unwrap();
        for c in 0..4 {
            for (x, y) in back.channels()[c].iter().zip(b.channels()[c]) {
                assert!((x - y).abs() < 1e-7);
            }
        }
        assert!(read_mono(&p).is_err());
    }
}
