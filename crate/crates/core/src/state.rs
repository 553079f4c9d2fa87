//! The linearized `(u, v, h)` model state.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result, SphereGrid};

/// One of the three prognostic fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    U,
    V,
    H,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::U, Field::V, Field::H];

    /// Position of the field's block in the linearized state.
    pub fn block(self) -> usize {
        match self {
            Field::U => 0,
            Field::V => 1,
            Field::H => 2,
        }
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" | "U" => Ok(Field::U),
            "v" | "V" => Ok(Field::V),
            "h" | "H" => Ok(Field::H),
            other => Err(Error::Config(format!("unknown field {other:?} (expected u, v or h)"))),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::U => "u",
            Field::V => "v",
            Field::H => "h",
        })
    }
}

/// Zonal velocity, meridional velocity and height on an `nlon x nlat` grid.
///
/// Stored as one contiguous vector: the `u` block, then `v`, then `h`, each
/// block row-major with cell index `i + j * nlon`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    nlon: usize,
    nlat: usize,
    data: Vec<f64>,
}

impl StateVector {
    pub fn zeros(nlon: usize, nlat: usize) -> Self {
        Self { nlon, nlat, data: vec![0.0; 3 * nlon * nlat] }
    }

    pub fn zeros_like_grid(grid: &SphereGrid) -> Self {
        Self::zeros(grid.nlon, grid.nlat)
    }

    pub fn from_vec(nlon: usize, nlat: usize, data: Vec<f64>) -> Result<Self> {
        let expected = 3 * nlon * nlat;
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: data.len() });
        }
        Ok(Self { nlon, nlat, data })
    }

    /// Builds a state from the three field blocks.
    pub fn from_fields(nlon: usize, nlat: usize, u: &[f64], v: &[f64], h: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(3 * nlon * nlat);
        for f in [u, v, h] {
            if f.len() != nlon * nlat {
                return Err(Error::DimensionMismatch { expected: nlon * nlat, found: f.len() });
            }
            data.extend_from_slice(f);
        }
        Ok(Self { nlon, nlat, data })
    }

    pub fn nlon(&self) -> usize {
        self.nlon
    }

    pub fn nlat(&self) -> usize {
        self.nlat
    }

    pub fn ncells(&self) -> usize {
        self.nlon * self.nlat
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn field(&self, f: Field) -> &[f64] {
        let n = self.ncells();
        &self.data[f.block() * n..(f.block() + 1) * n]
    }

    pub fn field_mut(&mut self, f: Field) -> &mut [f64] {
        let n = self.ncells();
        &mut self.data[f.block() * n..(f.block() + 1) * n]
    }

    pub fn u(&self) -> &[f64] {
        self.field(Field::U)
    }

    pub fn v(&self) -> &[f64] {
        self.field(Field::V)
    }

    pub fn h(&self) -> &[f64] {
        self.field(Field::H)
    }

    /// Value of field `f` at longitude `i`, latitude `j`.
    pub fn at(&self, f: Field, i: usize, j: usize) -> f64 {
        self.data[f.block() * self.ncells() + i + j * self.nlon]
    }

    pub fn is_finite(&self) -> bool {
        crate::linalg::all_finite(&self.data)
    }

    pub fn conforms_to(&self, grid: &SphereGrid) -> bool {
        self.nlon == grid.nlon && self.nlat == grid.nlat
    }

    pub fn same_shape(&self, other: &StateVector) -> bool {
        self.nlon == other.nlon && self.nlat == other.nlat
    }

    pub fn dot(&self, other: &StateVector) -> f64 {
        crate::linalg::dot(&self.data, &other.data)
    }

    pub fn norm2(&self) -> f64 {
        crate::linalg::norm2(&self.data)
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &StateVector) {
        crate::linalg::axpy(alpha, &x.data, &mut self.data);
    }

    /// Rolls every field by `shift` longitudes (periodic).
    pub fn roll_lon(&self, shift: isize) -> StateVector {
        let mut out = self.clone();
        let n = self.ncells();
        for b in 0..3 {
            for j in 0..self.nlat {
                for i in 0..self.nlon {
                    let dst = crate::wrap_lon(i as isize + shift, self.nlon);
                    out.data[b * n + dst + j * self.nlon] = self.data[b * n + i + j * self.nlon];
                }
            }
        }
        out
    }
}
