//! Binaural decoders: the W +/- Y transform, direct HRIR convolution, and the
//! virtual-speaker renderer that projects B-format onto a speaker array and
//! convolves each feed with that speaker's HRIR pair.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

use nalgebra::{DMatrix, SVD};
use rayon::prelude::*;

use crate::ambisonic::BFormat;
use crate::dsp::convolve_same;
use crate::error::{Error, Result};
use crate::hrir::HrirPack;
use crate::signal::{check_rate, pairwise_sum, BinauralSignal, MonoSignal};
use crate::spherical::{first_order, Direction};

/// Relative singular-value threshold below which D counts as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Virtual loudspeaker layout with its decoding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerArray {
    directions: Vec<Direction>,
    /// 4 x M, column m holds the first-order harmonics of speaker m.
    d_matrix: DMatrix<f64>,
    /// M x 4 Moore-Penrose pseudoinverse of `d_matrix`.
    d_pinv: DMatrix<f64>,
}

impl SpeakerArray {
    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn d_matrix(&self) -> &DMatrix<f64> {
        &self.d_matrix
    }

    pub fn d_pinv(&self) -> &DMatrix<f64> {
        &self.d_pinv
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Minimum-norm speaker feeds reproducing one B-format frame.
    pub fn speaker_gains(&self, frame: [f64; 4]) -> Vec<f64> {
        (0..self.len())
            .map(|m| (0..4).map(|c| self.d_pinv[(m, c)] * frame[c]).sum())
            .collect()
    }
}

/// Builds D column by column and its pseudoinverse via SVD.
pub fn make_speaker_array(dirs: &[Direction]) -> Result<SpeakerArray> {
    if dirs.len() < 4 {
        return Err(Error::Domain(format!(
            "need at least 4 speakers, got {}",
            dirs.len()
        )));
    }
    let m = dirs.len();
    let mut d = DMatrix::<f64>::zeros(4, m);
    for (col, dir) in dirs.iter().enumerate() {
        for (row, v) in first_order(*dir).into_iter().enumerate() {
            d[(row, col)] = v;
        }
    }

    let svd = SVD::new(d.clone(), true, true);
    let max_sv = svd.singular_values.max();
    let tol = RANK_TOLERANCE * max_sv.max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < 4 {
        return Err(Error::RankDeficient { rank });
    }
    let d_pinv = svd
        .pseudo_inverse(tol)
        .map_err(|e| Error::Domain(format!("pseudoinverse failed: {e}")))?;

    Ok(SpeakerArray {
        directions: dirs.to_vec(),
        d_matrix: d,
        d_pinv,
    })
}

/// Eight speakers over the frontal half-plane.
///
/// Azimuths sit at `-pi/2 + (m - 1/2) pi/8`, m = 1..8. Elevations follow the
/// mirror-symmetric pattern `+,-,+,-,-,+,-,+` times 30 degrees: a flat ring
/// leaves the Z row of D at zero, which makes D rank 3.
pub fn default_speaker_directions() -> Vec<Direction> {
    const SIGNS: [f64; 8] = [1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0];
    SIGNS
        .iter()
        .enumerate()
        .map(|(i, sign)| {
            let az = -FRAC_PI_2 + (i as f64 + 0.5) * PI / 8.0;
            Direction::new(az, sign * FRAC_PI_6).expect("in range")
        })
        .collect()
}

pub fn default_speaker_array() -> SpeakerArray {
    make_speaker_array(&default_speaker_directions()).expect("default layout has rank 4")
}

/// `left = w + y`, `right = w - y`.
pub fn decode_wy(b: &BFormat) -> BinauralSignal {
    let left = b.w().iter().zip(b.y()).map(|(w, y)| w + y).collect();
    let right = b.w().iter().zip(b.y()).map(|(w, y)| w - y).collect();
    BinauralSignal::new(left, right, b.sample_rate()).expect("B-format channels share a length")
}

/// Convolves `source` with the HRIR pair nearest `dir`.
pub fn render_direct_hrir(source: &MonoSignal, dir: Direction, pack: &HrirPack) -> Result<BinauralSignal> {
    check_rate(pack.sample_rate(), source.sample_rate())?;
    let e = pack.nearest(dir);
    BinauralSignal::new(
        convolve_same(source.samples(), &e.left_fir),
        convolve_same(source.samples(), &e.right_fir),
        source.sample_rate(),
    )
}

/// Per-sample minimum-norm speaker feeds `D+ . psi(t)`.
pub fn project_to_speakers(b: &BFormat, arr: &SpeakerArray) -> Vec<MonoSignal> {
    let mut feeds = vec![Vec::with_capacity(b.len()); arr.len()];
    for t in 0..b.len() {
        for (feed, g) in feeds.iter_mut().zip(arr.speaker_gains(b.frame(t))) {
            feed.push(g);
        }
    }
    feeds
        .into_iter()
        .map(|f| MonoSignal::new(f, b.sample_rate()).expect("finite feeds"))
        .collect()
}

/// Virtual-speaker binaural rendering: project, convolve each feed with the
/// HRIR pair nearest its speaker, and sum per ear.
pub fn render_ambisonic_hrir(b: &BFormat, arr: &SpeakerArray, pack: &HrirPack) -> Result<BinauralSignal> {
    check_rate(pack.sample_rate(), b.sample_rate())?;
    let feeds = project_to_speakers(b, arr);
    let per_speaker: Vec<(Vec<f64>, Vec<f64>)> = feeds
        .par_iter()
        .zip(arr.directions().par_iter())
        .map(|(feed, dir)| {
            let e = pack.nearest(*dir);
            (
                convolve_same(feed.samples(), &e.left_fir),
                convolve_same(feed.samples(), &e.right_fir),
            )
        })
        .collect();

    let n = b.len();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut column = vec![0.0; per_speaker.len()];
    for t in 0..n {
        for (c, (l, _)) in column.iter_mut().zip(&per_speaker) {
            *c = l[t];
        }
        left.push(pairwise_sum(&column));
        for (c, (_, r)) in column.iter_mut().zip(&per_speaker) {
            *c = r[t];
        }
        right.push(pairwise_sum(&column));
    }
    BinauralSignal::new(left, right, b.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambisonic::{encode, mix};
    use crate::hrir::{synth_pack, HrirEntry, SynthParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(samples: Vec<f64>) -> MonoSignal {
        MonoSignal::new(samples, 16_000).unwrap()
    }

    fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> MonoSignal {
        sig((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn identity_pack() -> HrirPack {
        HrirPack::new(
            "id",
            16_000,
            vec![HrirEntry {
                dir: Direction::front(),
                left_fir: vec![1.0],
                right_fir: vec![1.0],
                sample_rate: 16_000,
            }],
        )
        .unwrap()
    }

    #[test]
    fn wy_examples() {
        let s = sig(vec![0.2, -0.7, 1.0]);
        let front = decode_wy(&encode(&s, Direction::front()).unwrap());
        assert_eq!(front.left(), s.samples());
        assert_eq!(front.right(), s.samples());

        let hard_left = decode_wy(&encode(&s, Direction::new(FRAC_PI_2, 0.0).unwrap()).unwrap());
        for (l, x) in hard_left.left().iter().zip(s.samples()) {
            assert!((l - 2.0 * x).abs() < 1e-15);
        }
        assert!(hard_left.right().iter().all(|r| r.abs() < 1e-15));

        let silent = decode_wy(&BFormat::silence(5, 16_000).unwrap());
        assert!(silent.left().iter().chain(silent.right()).all(|&v| v == 0.0));
    }

    #[test]
    fn wy_sum_is_twice_w() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = encode(&random_signal(&mut rng, 64), Direction::new(0.7, -0.2).unwrap()).unwrap();
        let out = decode_wy(&b);
        for t in 0..b.len() {
            assert_eq!(out.left()[t] + out.right()[t], 2.0 * b.w()[t]);
        }
    }

    #[test]
    fn direct_hrir_identity_and_ild() {
        let mut impulse = vec![0.0; 8];
        impulse[0] = 1.0;
        let out = render_direct_hrir(&sig(impulse.clone()), Direction::front(), &identity_pack()).unwrap();
        assert_eq!(out.left(), &impulse[..]);
        assert_eq!(out.right(), &impulse[..]);

        let pack = synth_pack(SynthParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_signal(&mut rng, 2048);
        let out = render_direct_hrir(&s, Direction::new(FRAC_PI_2, 0.0).unwrap(), &pack).unwrap();
        assert!(out.left_signal().rms() > out.right_signal().rms());

        let wrong = MonoSignal::new(vec![1.0], 44_100).unwrap();
        assert!(matches!(
            render_direct_hrir(&wrong, Direction::front(), &pack),
            Err(Error::SampleRateMismatch { .. })
        ));
    }

    #[test]
    fn default_array_is_full_rank() {
        let arr = default_speaker_array();
        assert_eq!(arr.len(), 8);
        let prod = arr.d_matrix() * arr.d_pinv();
        let id = DMatrix::<f64>::identity(4, 4);
        assert!((prod - id).abs().max() < 1e-9);
    }

    #[test]
    fn flat_frontal_ring_is_rank_deficient() {
        let dirs: Vec<Direction> = (1..=8)
            .map(|m| Direction::new(-FRAC_PI_2 + (f64::from(m) - 0.5) * PI / 8.0, 0.0).unwrap())
            .collect();
        assert!(matches!(make_speaker_array(&dirs), Err(Error::RankDeficient { rank: 3 })));
    }

    #[test]
    fn identical_speakers_are_rejected() {
        let dirs = vec![Direction::new(0.3, 0.1).unwrap(); 8];
        assert!(matches!(make_speaker_array(&dirs), Err(Error::RankDeficient { rank: 1 })));
        assert!(make_speaker_array(&dirs[..3]).is_err());
    }

    #[test]
    fn tetrahedral_pinv_is_inverse() {
        let el = (1.0f64 / 3.0).sqrt().asin();
        let dirs = [
            Direction::from_degrees(45.0, el.to_degrees()).unwrap(),
            Direction::from_degrees(-135.0, el.to_degrees()).unwrap(),
            Direction::from_degrees(135.0, -el.to_degrees()).unwrap(),
            Direction::from_degrees(-45.0, -el.to_degrees()).unwrap(),
        ];
        let arr = make_speaker_array(&dirs).unwrap();
        let inv = arr.d_matrix().clone().try_inverse().unwrap();
        assert!((inv - arr.d_pinv()).abs().max() < 1e-12);

        // a source at speaker 0 solves to D^-1 psi
        let s = sig(vec![1.0, -0.5]);
        let feeds = project_to_speakers(&encode(&s, dirs[0]).unwrap(), &arr);
        let psi = nalgebra::DVector::from_row_slice(&first_order(dirs[0]));
        let expect = arr.d_matrix().clone().lu().solve(&psi).unwrap();
        for (m, f) in feeds.iter().enumerate() {
            assert!((f.samples()[0] - expect[m]).abs() < 1e-12);
            assert!((f.samples()[1] + 0.5 * expect[m]).abs() < 1e-12);
        }
        assert!((expect[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_reencodes() {
        let arr = default_speaker_array();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 32;
        let mut ch = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let b = BFormat::new(ch(), ch(), ch(), ch(), 16_000).unwrap();
        let feeds = project_to_speakers(&b, &arr);
        for t in 0..n {
            let psi = b.frame(t);
            for (row, &target) in psi.iter().enumerate() {
                let got: f64 = (0..arr.len())
                    .map(|m| arr.d_matrix()[(row, m)] * feeds[m].samples()[t])
                    .sum();
                assert!((got - target).abs() <= 1e-9 * (1.0 + target.abs()));
            }
        }
        let silent = project_to_speakers(&BFormat::silence(4, 16_000).unwrap(), &arr);
        assert_eq!(silent.len(), 8);
        assert!(silent.iter().all(|f| f.samples().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn ambisonic_render_silence_and_linearity() {
        let pack = synth_pack(SynthParams::default()).unwrap();
        let arr = default_speaker_array();
        let out = render_ambisonic_hrir(&BFormat::silence(100, 16_000).unwrap(), &arr, &pack).unwrap();
        assert!(out.left().iter().chain(out.right()).all(|&v| v == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b1 = encode(&random_signal(&mut rng, 1000), Direction::new(0.9, 0.1).unwrap()).unwrap();
        let b2 = encode(&random_signal(&mut rng, 1000), Direction::new(-0.4, -0.3).unwrap()).unwrap();
        let both = render_ambisonic_hrir(&mix(&[b1.clone(), b2.clone()]).unwrap(), &arr, &pack).unwrap();
        let sum = render_ambisonic_hrir(&b1, &arr, &pack)
            .unwrap()
            .add(&render_ambisonic_hrir(&b2, &arr, &pack).unwrap())
            .unwrap();
        let scale = both.left_signal().peak().max(both.right_signal().peak());
        for (a, b) in both.left().iter().chain(both.right()).zip(sum.left().iter().chain(sum.right())) {
            assert!((a - b).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn ambisonic_render_matches_manual_per_speaker_sum() {
        let pack = synth_pack(SynthParams::default()).unwrap();
        let arr = default_speaker_array();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_signal(&mut rng, 300);
        let dir = Direction::new(FRAC_PI_2, 0.0).unwrap();
        let out = render_ambisonic_hrir(&encode(&s, dir).unwrap(), &arr, &pack).unwrap();

        // time-domain: sum_m sum_k h_m[k] g_m s[t - k]
        let gains = arr.speaker_gains(first_order(dir));
        for t in (0..300).step_by(17) {
            let mut l = 0.0;
            let mut r = 0.0;
            for (m, d) in arr.directions().iter().enumerate() {
                let e = pack.nearest(*d);
                for k in 0..=t.min(e.left_fir.len() - 1) {
                    l += e.left_fir[k] * gains[m] * s.samples()[t - k];
                    r += e.right_fir[k] * gains[m] * s.samples()[t - k];
                }
            }
            assert!((out.left()[t] - l).abs() < 1e-9);
            assert!((out.right()[t] - r).abs() < 1e-9);
        }
        assert!(out.left_signal().rms() > out.right_signal().rms());
    }

    #[test]
    fn mirror_symmetry() {
        let pack = synth_pack(SynthParams::default()).unwrap();
        let arr = default_speaker_array();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = random_signal(&mut rng, 512);
        for az in [0.3, 1.0, 1.4] {
            let pos = Direction::new(az, 0.2).unwrap();
            let a = render_ambisonic_hrir(&encode(&s, pos).unwrap(), &arr, &pack).unwrap();
            let b = render_ambisonic_hrir(&encode(&s, pos.mirrored()).unwrap(), &arr, &pack).unwrap();
            let swapped = a.swapped();
            for (x, y) in swapped.left().iter().chain(swapped.right()).zip(b.left().iter().chain(b.right())) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }
}
