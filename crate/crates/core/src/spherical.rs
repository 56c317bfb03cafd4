//! Real spherical harmonics with SN3D normalization.
//!
//! Directions use azimuth (positive toward the listener's left, 0 straight
//! ahead) and elevation (positive up, 0 on the horizon). Harmonics are
//! evaluated with `sin(elevation)` as the Legendre argument and carry no
//! Condon-Shortley phase, matching the ambisonic convention: compare against
//! libraries that include the phase by multiplying with `(-1)^m`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A position on the listening sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    azimuth: f64,
    elevation: f64,
}

impl Direction {
    /// Builds a direction, wrapping the azimuth into `(-pi, pi]`.
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        if !azimuth.is_finite() || !elevation.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite direction ({azimuth}, {elevation})"
            )));
        }
        if elevation.abs() > FRAC_PI_2 + 1e-12 {
            return Err(Error::Domain(format!(
                "elevation {elevation} rad outside [-pi/2, pi/2]"
            )));
        }
        Ok(Self {
            azimuth: wrap_angle(azimuth),
            elevation: elevation.clamp(-FRAC_PI_2, FRAC_PI_2),
        })
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        Self::new(azimuth_deg.to_radians(), elevation_deg.to_radians())
    }

    /// Builds a direction from a zenith angle measured down from straight up.
    pub fn from_zenith(azimuth: f64, zenith: f64) -> Result<Self> {
        Self::new(azimuth, FRAC_PI_2 - zenith)
    }

    /// Straight ahead on the horizon.
    pub const fn front() -> Self {
        Self {
            azimuth: 0.0,
            elevation: 0.0,
        }
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    pub fn zenith(&self) -> f64 {
        FRAC_PI_2 - self.elevation
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth.to_degrees()
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation.to_degrees()
    }

    /// Unit vector with x toward the front, y toward the left and z up.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (se, ce) = self.elevation.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [ce * ca, ce * sa, se]
    }

    /// Mirror image across the median plane.
    pub fn mirrored(&self) -> Self {
        Self {
            azimuth: wrap_angle(-self.azimuth),
            elevation: self.elevation,
        }
    }

    /// Great-circle angle to `other`, in radians.
    pub fn angular_distance(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        cross_norm.atan2(dot)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

fn check_degree(l: u32, m: i32) -> Result<()> {
    if m.unsigned_abs() > l {
        return Err(Error::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    Ok(())
}

/// Associated Legendre function `P_l^|m|(x)` without the Condon-Shortley phase.
pub fn assoc_legendre(l: u32, m: i32, x: f64) -> Result<f64> {
    check_degree(l, m)?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [-1, 1]")));
    }
    let m = m.unsigned_abs();

    // P_m^m = (2m - 1)!! (1 - x^2)^(m/2)
    let somx2 = ((1.0 - x) * (1.0 + x)).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= fact * somx2;
        fact += 2.0;
    }
    if l == m {
        return Ok(pmm);
    }

    let mut pmmp1 = x * f64::from(2 * m + 1) * pmm;
    if l == m + 1 {
        return Ok(pmmp1);
    }

    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = (x * f64::from(2 * ll - 1) * pmmp1 - f64::from(ll + m - 1) * pmm)
            / f64::from(ll - m);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    Ok(pll)
}

/// SN3D normalization factor `sqrt((2 - delta_m) (l - |m|)! / (l + |m|)!)`.
pub fn sn3d_norm(l: u32, m: i32) -> Result<f64> {
    check_degree(l, m)?;
    let m = m.unsigned_abs();
    // (l - m)! / (l + m)! = 1 / prod_{k = l-m+1}^{l+m} k
    let ratio = ((l - m + 1)..=(l + m)).fold(1.0, |acc, k| acc / f64::from(k));
    let delta = if m == 0 { 1.0 } else { 2.0 };
    Ok((delta * ratio).sqrt())
}

/// Real SN3D spherical harmonic `Y_l^m` evaluated at `dir`.
///
/// `m >= 0` selects the cosine term, `m < 0` the sine term.
pub fn real_sph_harmonic(l: u32, m: i32, dir: Direction) -> Result<f64> {
    let norm = sn3d_norm(l, m)?;
    let legendre = assoc_legendre(l, m, dir.elevation.sin())?;
    let am = f64::from(m.unsigned_abs());
    let azimuthal = if m >= 0 {
        (am * dir.azimuth).cos()
    } else {
        (am * dir.azimuth).sin()
    };
    Ok(norm * legendre * azimuthal)
}

/// First-order harmonics in channel order W, X, Y, Z.
pub fn first_order(dir: Direction) -> [f64; 4] {
    let (se, ce) = dir.elevation.sin_cos();
    let (sa, ca) = dir.azimuth.sin_cos();
    [1.0, ce * ca, ce * sa, se]
}

/// `(l, m)` index pairs of the first-order set in W, X, Y, Z order.
pub const FIRST_ORDER_INDICES: [(u32, i32); 4] = [(0, 0), (1, 1), (1, -1), (1, 0)];
