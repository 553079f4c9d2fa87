//! Latitude-longitude grid geometry for the sphere.
//!
//! Latitudes are cell centred and sit half a cell away from the poles,
//! `theta_j = -pi/2 + (j + 1/2) dtheta`, so `cos(theta_j)` is bounded away
//! from zero. Longitude indices wrap periodically; latitude indices clamp to
//! the boundary rows, which closes the stencils with a zero-gradient rule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalConstants {
    /// Earth radius, m.
    pub radius: f64,
    /// Gravitational acceleration, m/s^2.
    pub gravity: f64,
    /// Rotation rate, rad/s.
    pub omega: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { radius: 6.371e6, gravity: 9.81, omega: 7.292e-5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub nlon: usize,
    pub nlat: usize,
    pub dlambda: f64,
    pub dtheta: f64,
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub constants: PhysicalConstants,
}

impl SphereGrid {
    /// Grid with standard Earth constants.
    pub fn new(nlon: usize, nlat: usize) -> Result<Self> {
        Self::with_constants(nlon, nlat, PhysicalConstants::default())
    }

    pub fn with_constants(nlon: usize, nlat: usize, constants: PhysicalConstants) -> Result<Self> {
        if nlon < 3 || nlat < 3 {
            return Err(Error::GridTooSmall { nlon, nlat });
        }
        let dlambda = 2.0 * PI / nlon as f64;
        Ok(Self {
            nlon,
            nlat,
            dlambda,
            dtheta: PI / nlat as f64,
            theta: cell_latitudes(nlat),
            lambda: (0..nlon).map(|i| i as f64 * dlambda).collect(),
            constants,
        })
    }

    /// Number of grid cells, `nlon * nlat`.
    pub fn ncells(&self) -> usize {
        self.nlon * self.nlat
    }

    /// Length of a linearized `(u, v, h)` state.
    pub fn state_len(&self) -> usize {
        3 * self.ncells()
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i + j * self.nlon
    }

    /// Checks that a `(p, q)` stencil does not alias onto itself.
    pub fn check_stencil(&self, p: usize, q: usize) -> Result<()> {
        if self.nlon < 2 * p + 1 || self.nlat < 2 * q + 1 {
            return Err(Error::StencilTooWide { p, q, nlon: self.nlon, nlat: self.nlat });
        }
        Ok(())
    }
}

/// Pole-offset latitudes `-pi/2 + (j + 0.5) * pi / nlat`.
pub fn cell_latitudes(nlat: usize) -> Vec<f64> {
    let dtheta = PI / nlat as f64;
    (0..nlat).map(|j| -PI / 2.0 + (j as f64 + 0.5) * dtheta).collect()
}

/// Periodic longitude index in `[0, nlon)`.
#[inline]
pub fn wrap_lon(i: isize, nlon: usize) -> usize {
    i.rem_euclid(nlon as isize) as usize
}

/// Latitude index clamped to `[0, nlat - 1]`.
#[inline]
pub fn clamp_lat(j: isize, nlat: usize) -> usize {
    j.clamp(0, nlat as isize - 1) as usize
}
