//! Mapping between frontal-image positions and listening directions.
//!
//! The image is treated as part of a cylinder around the listener. Pixel
//! coordinates are normalized to `[-1, 1]`: `u = -1` is the image's left edge
//! and `v = +1` its top edge. Azimuth is linear in `u`; elevation follows the
//! cylindrical projection `atan(v * vert_extent)`.

use std::f64::consts::{FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spherical::Direction;

/// Tolerance on the frame and field-of-view edges, to absorb round-off.
const EDGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovConfig {
    /// Azimuth of the left image edge, radians.
    pub theta_v0: f64,
    /// Image height / width.
    pub aspect_hw: f64,
    /// Tangent of the top-edge elevation.
    pub vert_extent: f64,
}

impl Default for FovConfig {
    fn default() -> Self {
        Self {
            theta_v0: FRAC_PI_3,
            aspect_hw: 0.5,
            vert_extent: FRAC_PI_3,
        }
    }
}

impl FovConfig {
    pub fn new(theta_v0: f64, aspect_hw: f64, vert_extent: f64) -> Result<Self> {
        let cfg = Self {
            theta_v0,
            aspect_hw,
            vert_extent,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_v0 > 0.0 && self.theta_v0 < PI) {
            return Err(Error::Domain(format!("theta_v0 {} outside (0, pi)", self.theta_v0)));
        }
        if !(self.aspect_hw > 0.0 && self.aspect_hw.is_finite()) {
            return Err(Error::Domain(format!("aspect_hw {} must be positive", self.aspect_hw)));
        }
        if !(self.vert_extent > 0.0 && self.vert_extent.is_finite()) {
            return Err(Error::Domain(format!("vert_extent {} must be positive", self.vert_extent)));
        }
        Ok(())
    }

    /// Elevation of the top image edge.
    pub fn top_elevation(&self) -> f64 {
        self.vert_extent.atan()
    }

    pub fn contains(&self, dir: Direction) -> bool {
        dir.azimuth().abs() <= self.theta_v0 + EDGE_SLACK
            && dir.elevation().tan().abs() <= self.vert_extent * (1.0 + EDGE_SLACK)
    }
}

pub fn pixel_to_direction(u: f64, v: f64, cfg: &FovConfig) -> Result<Direction> {
    if !(u.abs() <= 1.0 && v.abs() <= 1.0) {
        return Err(Error::OutOfFrame { u, v });
    }
    Direction::new(-u * cfg.theta_v0, (v * cfg.vert_extent).atan())
}

/// Inverse of [`pixel_to_direction`].
pub fn direction_to_pixel(dir: Direction, cfg: &FovConfig) -> Result<(f64, f64)> {
    if !cfg.contains(dir) {
        return Err(Error::OutOfFov {
            azimuth: dir.azimuth(),
            elevation: dir.elevation(),
        });
    }
    let u = (-dir.azimuth() / cfg.theta_v0).clamp(-1.0, 1.0);
    let v = (dir.elevation().tan() / cfg.vert_extent).clamp(-1.0, 1.0);
    Ok((u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn anchor_points() {
        let cfg = FovConfig::default();
        let c = pixel_to_direction(0.0, 0.0, &cfg).unwrap();
        assert_eq!((c.azimuth(), c.elevation()), (0.0, 0.0));

        let left = pixel_to_direction(-1.0, 0.0, &cfg).unwrap();
        assert!((left.azimuth() - FRAC_PI_3).abs() < 1e-15);

        let top = pixel_to_direction(0.0, 1.0, &cfg).unwrap();
        assert!((top.elevation() - FRAC_PI_3.atan()).abs() < 1e-15);
        assert!((top.zenith() - (FRAC_PI_2 - FRAC_PI_3.atan())).abs() < 1e-15);
    }

    #[test]
    fn inverse_anchors() {
        let cfg = FovConfig::default();
        assert_eq!(direction_to_pixel(Direction::front(), &cfg).unwrap(), (0.0, 0.0));
        let (u, v) = direction_to_pixel(Direction::new(FRAC_PI_3, 0.0).unwrap(), &cfg).unwrap();
        assert!((u + 1.0).abs() < 1e-15 && v == 0.0);
    }

    #[test]
    fn rejects_out_of_range() {
        let cfg = FovConfig::default();
        assert!(matches!(pixel_to_direction(1.2, 0.0, &cfg), Err(Error::OutOfFrame { .. })));
        assert!(matches!(pixel_to_direction(0.0, -1.01, &cfg), Err(Error::OutOfFrame { .. })));
        assert!(matches!(
            direction_to_pixel(Direction::new(1.5, 0.0).unwrap(), &cfg),
            Err(Error::OutOfFov { .. })
        ));
        assert!(matches!(
            direction_to_pixel(Direction::new(0.0, 1.2).unwrap(), &cfg),
            Err(Error::OutOfFov { .. })
        ));
        assert!(FovConfig::new(0.0, 0.5, 1.0).is_err());
        assert!(FovConfig::new(1.0, -0.5, 1.0).is_err());
        assert!(FovConfig::new(1.0, 0.5, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(u in -1.0f64..=1.0, v in -1.0f64..=1.0, theta in 0.1f64..3.0, ext in 0.1f64..3.0) {
            let cfg = FovConfig::new(theta, 0.5, ext).unwrap();
            let (u2, v2) = direction_to_pixel(pixel_to_direction(u, v, &cfg).unwrap(), &cfg).unwrap();
            prop_assert!((u - u2).abs() <= 1e-12);
            prop_assert!((v - v2).abs() <= 1e-12);
        }

        #[test]
        fn monotone(u1 in -1.0f64..=1.0, u2 in -1.0f64..=1.0, v1 in -1.0f64..=1.0, v2 in -1.0f64..=1.0) {
            let cfg = FovConfig::default();
            let a = pixel_to_direction(u1, v1, &cfg).unwrap();
            let b = pixel_to_direction(u2, v2, &cfg).unwrap();
            if u1 < u2 { prop_assert!(a.azimuth() > b.azimuth()); }
            if v1 < v2 { prop_assert!(a.elevation() < b.elevation()); }
            prop_assert!(a.azimuth().abs() <= cfg.theta_v0);
        }
    }
}
