//! Mono-to-binaural spatial audio toolkit.
//!
//! Mono sources are encoded to first-order ambisonics, projected onto a
//! virtual loudspeaker array and rendered through head-related impulse
//! responses. On top of that sit a frontal-image to sphere mapping, a
//! pseudo visual-stereo scene synthesizer, an STFT complex-mask pipeline and
//! five binaural evaluation metrics.

pub mod ambisonic;
pub mod binaural;
pub mod dsp;
pub mod error;
pub mod hrir;
pub mod metrics;
pub mod scenegen;
pub mod signal;
pub mod spectral;
pub mod spherical;
pub mod visualmap;
pub mod wav;

pub use ambisonic::{encode, mix, BFormat};
pub use binaural::{
    decode_wy, default_speaker_array, make_speaker_array, project_to_speakers, render_ambisonic_hrir,
    render_direct_hrir, SpeakerArray,
};
pub use error::{Error, Result};
pub use metrics::{evaluate, EvalConfig, MetricsReport};
pub use scenegen::{
    gen_dataset, make_separation_pair, normalize_amplitude, sample_scene, synth_pseudo_pair, ClipStore, DatasetConfig,
    KRatios, Manifest, PseudoPair, SamplerOptions, SceneSpec,
};
pub use spectral::{istft, stft, ComplexMask, Spectrogram, StftConfig};
pub use visualmap::{direction_to_pixel, pixel_to_direction, FovConfig};
pub use hrir::{load_pack, save_pack, synth_pack, HrirEntry, HrirPack, SynthParams};
pub use signal::{BinauralSignal, MonoSignal, DEFAULT_SAMPLE_RATE};
pub use spherical::Direction;
