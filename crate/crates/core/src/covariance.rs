//! Error models: the rank-one background covariance and its truncated-SVD
//! pseudo-inverse, observation-error weights and 0/1 observation operators.
//!
//! The background covariance is `B = e e^T` with `e = x_b - nu`, where `nu`
//! is the mean of every entry of `x_b` (all three fields pooled). `B` has a
//! single nonzero singular value `|e|^2` with singular vector `e / |e|`, so
//! the decomposition is written down directly instead of computed.

use crate::observations::Problem;
use crate::{linalg, Error, Result, SphereGrid, StateVector};

/// Default truncation threshold on `S_{n-1} / S_0`.
pub const DEFAULT_REL_TOL: f64 = 1e-14;

/// Why a truncated SVD could not be used as a preconditioner.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TsvdFailure {
    #[error("background anomaly is identically zero")]
    Degenerate,
    #[error("requested {nsvs} singular values but S[{}]/S[0] = {ratio:e} < {rel_tol:e}", nsvs - 1)]
    BelowTolerance { nsvs: usize, ratio: f64, rel_tol: f64 },
    #[error("nSVs must be at least 1")]
    ZeroRank,
}

/// `B = e e^T`, kept implicitly as the anomaly `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundCov {
    pub err_vector: Vec<f64>,
    pub nu: f64,
}

impl BackgroundCov {
    pub fn from_background(x_b: &[f64]) -> Self {
        let nu = x_b.iter().sum::<f64>() / x_b.len() as f64;
        Self { err_vector: x_b.iter().map(|x| x - nu).collect(), nu }
    }

    pub fn len(&self) -> usize {
        self.err_vector.len()
    }

    pub fn is_empty(&self) -> bool {
        self.err_vector.is_empty()
    }

    /// `B y = e (e^T y)`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let s = linalg::dot(&self.err_vector, y);
        self.err_vector.iter().map(|e| e * s).collect()
    }

    /// Leading `nsvs` singular triplets of `B`.
    pub fn tsvd(&self, nsvs: usize, rel_tol: f64) -> Result<TsvdPrecon, TsvdFailure> {
        if nsvs == 0 {
            return Err(TsvdFailure::ZeroRank);
        }
        let s0 = linalg::dot(&self.err_vector, &self.err_vector);
        if s0 == 0.0 {
            return Err(TsvdFailure::Degenerate);
        }
        let mut singular_values = vec![0.0; nsvs.min(self.len())];
        singular_values[0] = s0;
        let ratio = singular_values[nsvs.min(self.len()) - 1] / s0;
        if nsvs > self.len() || ratio < rel_tol {
            return Err(TsvdFailure::BelowTolerance { nsvs, ratio, rel_tol });
        }
        let norm = s0.sqrt();
        let u0: Vec<f64> = self.err_vector.iter().map(|e| e / norm).collect();
        Ok(TsvdPrecon { singular_values, singular_vectors: vec![u0], nsvs, rel_tol })
    }

    /// Singular values `S_0..S_{n-1}` regardless of the truncation rule.
    pub fn singular_values(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        if let Some(first) = s.first_mut() {
            *first = linalg::dot(&self.err_vector, &self.err_vector);
        }
        s
    }
}

/// Truncated SVD of `B`, applied as a pseudo-inverse.
///
/// Only the singular vectors whose values pass the threshold are stored;
/// `singular_values` lists all `nsvs` requested values.
#[derive(Debug, Clone, PartialEq)]
pub struct TsvdPrecon {
    pub singular_values: Vec<f64>,
    pub singular_vectors: Vec<Vec<f64>>,
    pub nsvs: usize,
    pub rel_tol: f64,
}

impl TsvdPrecon {
    pub fn len(&self) -> usize {
        self.singular_vectors.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of singular pairs used by [`apply_pinv`](Self::apply_pinv).
    pub fn retained(&self) -> usize {
        self.singular_vectors.len()
    }

    /// `sum_i u_i (u_i^T y) / S_i` over the retained pairs.
    pub fn apply_pinv(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: y.len() });
        }
        let mut out = vec![0.0; y.len()];
        for (u, s) in self.singular_vectors.iter().zip(&self.singular_values) {
            let c = linalg::dot(u, y) / s;
            linalg::axpy(c, u, &mut out);
        }
        Ok(out)
    }

    /// `y^T B^+ y`.
    pub fn quad_form(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: y.len() });
        }
        Ok(self
            .singular_vectors
            .iter()
            .zip(&self.singular_values)
            .map(|(u, s)| {
                let c = linalg::dot(u, y);
                c * c / s
            })
            .sum())
    }
}

/// Diagonal 0/1 observation operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsOperator {
    pub mask: Vec<f64>,
}

/// Spacing of observed entries for the sparse problems.
pub const OBS_STRIDE: usize = 5;

impl ObsOperator {
    pub fn identity(len: usize) -> Self {
        Self { mask: vec![1.0; len] }
    }

    /// Observes entries whose linear index is a multiple of `stride`.
    pub fn strided(len: usize, stride: usize) -> Self {
        Self { mask: (0..len).map(|i| if i % stride == 0 { 1.0 } else { 0.0 }).collect() }
    }

    pub fn for_problem(problem: Problem, grid: &SphereGrid) -> Self {
        let len = grid.state_len();
        if problem.is_sparse() {
            Self::strided(len, OBS_STRIDE)
        } else {
            Self::identity(len)
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn is_observed(&self, i: usize) -> bool {
        self.mask[i] != 0.0
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m != 0.0).count()
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.mask).map(|(v, m)| v * m).collect()
    }

    /// `H H`, which equals `H` for a 0/1 mask.
    pub fn compose(&self, other: &ObsOperator) -> ObsOperator {
        ObsOperator { mask: self.apply(&other.mask) }
    }
}

/// Diagonal of `R^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsErrWeights {
    pub rinv: Vec<f64>,
}

/// `R^{-1}` weight of the first field block.
pub const FIRST_BLOCK_WEIGHT: f64 = 1e-6;

impl ObsErrWeights {
    /// `1e-6` on the first `nlat * nlon` entries (the `u` block), `1` after.
    pub fn standard(grid: &SphereGrid) -> Self {
        let n = grid.ncells();
        Self { rinv: (0..grid.state_len()).map(|i| if i < n { FIRST_BLOCK_WEIGHT } else { 1.0 }).collect() }
    }

    pub fn uniform(len: usize, w: f64) -> Self {
        Self { rinv: vec![w; len] }
    }

    pub fn len(&self) -> usize {
        self.rinv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rinv.is_empty()
    }

    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: y.len() });
        }
        Ok(y.iter().zip(&self.rinv).map(|(v, w)| v * w).collect())
    }
}

impl From<&StateVector> for BackgroundCov {
    fn from(x_b: &StateVector) -> Self {
        BackgroundCov::from_background(x_b.as_slice())
    }
}
