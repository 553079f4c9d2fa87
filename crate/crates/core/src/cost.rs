//! The strong-constraint 4D-Var functional and its adjoint gradient.
//!
//! ```text
//! J(x) = (x - x_b)^T B^+ (x - x_b)
//!      + lambda * sum_{k < nt_obs} (H M^k(x) - v_k)^T R^{-1} (H M^k(x) - v_k)
//! ```
//!
//! `M^k` is `k` model steps (`M^0` is the identity) and `B^+` the truncated
//! SVD pseudo-inverse of the rank-one background covariance. There is no
//! factor one half, so the gradient is
//! `2 B^+ (x - x_b) + 2 lambda sum_k (M^k)'^* H R^{-1} (H M^k(x) - v_k)`.
//! Each observation time gets its own adjoint sweep over its `k` steps.

use std::ops::Range;

use crate::covariance::{BackgroundCov, ObsErrWeights, ObsOperator, TsvdPrecon};
use crate::observations::{ObservationSet, WindowData};
use crate::tlm::adjoint_along;
use crate::{linalg, Error, Result, StateVector, SweModel};

/// Background term of the functional.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    /// Truncated SVD of the global rank-one covariance.
    Tsvd(TsvdPrecon),
    /// Independent covariances on disjoint index sets; entries outside every
    /// block carry no background weight.
    BlockDiagonal(Vec<BackgroundBlock>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundBlock {
    pub indices: Vec<usize>,
    pub precon: TsvdPrecon,
}

impl Background {
    /// `(d^T B^+ d, 2 B^+ d)`; the second entry only when `want_grad`.
    pub(crate) fn term(&self, d: &[f64], want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
        match self {
            Background::Tsvd(p) => {
                let j = p.quad_form(d)?;
                let g = if want_grad {
                    let mut g = p.apply_pinv(d)?;
                    linalg::scale(2.0, &mut g);
                    Some(g)
                } else {
                    None
                };
                Ok((j, g))
            }
            Background::BlockDiagonal(blocks) => {
                let mut j = 0.0;
                let mut g = want_grad.then(|| vec![0.0; d.len()]);
                for b in blocks {
                    let local: Vec<f64> = b.indices.iter().map(|&i| d[i]).collect();
                    j += b.precon.quad_form(&local)?;
                    if let Some(g) = g.as_mut() {
                        let gl = b.precon.apply_pinv(&local)?;
                        for (&i, v) in b.indices.iter().zip(gl) {
                            g[i] += 2.0 * v;
                        }
                    }
                }
                Ok((j, g))
            }
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            Background::Tsvd(p) => Some(p.len()),
            Background::BlockDiagonal(_) => None,
        }
    }
}

/// Everything the functional consumes.
#[derive(Debug, Clone)]
pub struct AssimilationSetup {
    pub model: SweModel,
    pub x_b: StateVector,
    pub obs: ObservationSet,
    pub operator: ObsOperator,
    pub rinv: ObsErrWeights,
    pub background: Background,
    pub lambda: f64,
}

impl AssimilationSetup {
    pub fn new(
        model: SweModel,
        x_b: StateVector,
        obs: ObservationSet,
        operator: ObsOperator,
        rinv: ObsErrWeights,
        background: Background,
        lambda: f64,
    ) -> Result<Self> {
        let len = model.grid().state_len();
        if obs.is_empty() {
            return Err(Error::InvalidSetup("at least one observation vector is required".into()));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidSetup(format!("lambda must be a finite nonnegative number, got {lambda}")));
        }
        model.check_state(&x_b, "background")?;
        for v in &obs.obs {
            if !v.conforms_to(model.grid()) {
                return Err(Error::DimensionMismatch { expected: len, found: v.len() });
            }
        }
        for found in [operator.len(), rinv.len()].into_iter().chain(background.len()) {
            if found != len {
                return Err(Error::DimensionMismatch { expected: len, found });
            }
        }
        Ok(Self { model, x_b, obs, operator, rinv, background, lambda })
    }

    /// Standard setup for a twin-experiment window: `B` from the
    /// background, its `nsvs`-term truncated SVD, printed `R^{-1}` weights.
    pub fn from_window(model: SweModel, data: &WindowData, nsvs: usize, rel_tol: f64, lambda: f64) -> Result<Self> {
        let precon = BackgroundCov::from(&data.x_b).tsvd(nsvs, rel_tol)?;
        let rinv = ObsErrWeights::standard(model.grid());
        Self::new(
            model,
            data.x_b.clone(),
            data.observations.clone(),
            data.operator.clone(),
            rinv,
            Background::Tsvd(precon),
            lambda,
        )
    }

    pub fn nt_obs(&self) -> usize {
        self.obs.len()
    }

    pub fn with_background(&self, background: Background) -> Result<Self> {
        Self::new(
            self.model.clone(),
            self.x_b.clone(),
            self.obs.clone(),
            self.operator.clone(),
            self.rinv.clone(),
            background,
            self.lambda,
        )
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut s = self.clone();
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidSetup(format!("lambda must be a finite nonnegative number, got {lambda}")));
        }
        s.lambda = lambda;
        Ok(s)
    }

    pub fn eval_cost(&self, x: &StateVector) -> Result<f64> {
        Ok(self.evaluate(x, false)?.0)
    }

    pub fn eval_grad(&self, x: &StateVector) -> Result<StateVector> {
        let (_, g) = self.evaluate(x, true)?;
        Ok(g.expect("gradient requested"))
    }

    pub fn cost_and_grad(&self, x: &StateVector) -> Result<(f64, StateVector)> {
        let (j, g) = self.evaluate(x, true)?;
        Ok((j, g.expect("gradient requested")))
    }

    /// Background and observation parts of `J(x)`, unweighted by lambda.
    pub fn cost_terms(&self, x: &StateVector) -> Result<(f64, f64)> {
        self.model.check_state(x, "control state")?;
        let d = linalg::sub(x.as_slice(), self.x_b.as_slice());
        let (jb, _) = self.background.term(&d, false)?;
        let (jo, _) = self.obs_term(x, 0..self.nt_obs(), None, false)?;
        Ok((jb, jo))
    }

    fn evaluate(&self, x: &StateVector, want_grad: bool) -> Result<(f64, Option<StateVector>)> {
        self.model.check_state(x, "control state")?;
        let d = linalg::sub(x.as_slice(), self.x_b.as_slice());
        let (jb, gb) = self.background.term(&d, want_grad)?;
        let (jo, go) = self.obs_term(x, 0..self.nt_obs(), None, want_grad)?;
        let j = combine_cost(jb, self.lambda, jo);
        let g = match (gb, go) {
            (Some(gb), Some(go)) => {
                let g = combine_grad(gb, self.lambda, go.as_slice());
                Some(StateVector::from_vec(x.nlon(), x.nlat(), g)?)
            }
            _ => None,
        };
        Ok((j, g))
    }

    /// `sum_{k in ks} |filter (H M^k(x) - v_k)|^2_{R^{-1}}` and, when asked,
    /// its gradient with respect to `x` (without the lambda factor).
    ///
    /// `filter` is a 0/1 weight over state entries; `None` keeps them all.
    pub(crate) fn obs_term(
        &self,
        x: &StateVector,
        ks: Range<usize>,
        filter: Option<&[f64]>,
        want_grad: bool,
    ) -> Result<(f64, Option<StateVector>)> {
        if ks.is_empty() {
            return Ok((0.0, want_grad.then(|| StateVector::zeros_like_grid(self.model.grid()))));
        }
        let traj = self.model.trajectory(x, ks.end - 1)?;
        let mask = &self.operator.mask;
        let rinv = &self.rinv.rinv;
        let mut j = 0.0;
        let mut grad = want_grad.then(|| StateVector::zeros_like_grid(self.model.grid()));
        for k in ks {
            let state = traj[k].as_slice();
            let obs = self.obs.obs[k].as_slice();
            let mut w = vec![0.0; state.len()];
            for i in 0..state.len() {
                let mut r = mask[i] * state[i] - obs[i];
                if let Some(f) = filter {
                    r *= f[i];
                }
                j += rinv[i] * r * r;
                w[i] = mask[i] * rinv[i] * r;
            }
            if let Some(g) = grad.as_mut() {
                let w = StateVector::from_vec(x.nlon(), x.nlat(), w)?;
                let back = adjoint_along(&self.model, &traj[..k], &w);
                g.axpy(2.0, &back);
            }
        }
        Ok((j, grad))
    }
}

pub(crate) fn combine_cost(jb: f64, lambda: f64, jo: f64) -> f64 {
    jb + lambda * jo
}

pub(crate) fn combine_grad(mut gb: Vec<f64>, lambda: f64, go: &[f64]) -> Vec<f64> {
    linalg::axpy(lambda, go, &mut gb);
    gb
}
