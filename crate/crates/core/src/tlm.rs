//! Tangent-linear and adjoint operators of the discrete model.
//!
//! Both are matrix-free. One step of the tangent-linear model maps
//! `delta -> delta + dt * J(base) delta`; the adjoint step applies the exact
//! transpose, `ybar -> ybar + dt * J(base)^T ybar`. Window operators chain the
//! steps along a stored forward trajectory.

use crate::{Error, Result, StateVector, SweModel};

impl SweModel {
    fn check_pair(&self, base: &StateVector, other: &StateVector) -> Result<()> {
        self.check_state(base, "linearization state")?;
        self.check_state(other, "perturbation")?;
        Ok(())
    }

    /// `(I + dt J(base)) delta`.
    pub fn tlm_step(&self, base: &StateVector, delta: &StateVector) -> Result<StateVector> {
        self.check_pair(base, delta)?;
        Ok(self.tlm_step_unchecked(base, delta))
    }

    /// `(I + dt J(base))^T ybar`.
    pub fn adjoint_step(&self, base: &StateVector, ybar: &StateVector) -> Result<StateVector> {
        self.check_pair(base, ybar)?;
        Ok(self.adjoint_step_unchecked(base, ybar))
    }

    fn tlm_step_unchecked(&self, base: &StateVector, delta: &StateVector) -> StateVector {
        let mut jd = StateVector::zeros_like_grid(self.grid());
        self.jvp_into(base.as_slice(), delta.as_slice(), jd.as_mut_slice());
        combine(delta, self.params().dt, jd)
    }

    fn adjoint_step_unchecked(&self, base: &StateVector, ybar: &StateVector) -> StateVector {
        let mut jty = StateVector::zeros_like_grid(self.grid());
        self.vjp_into(base.as_slice(), ybar.as_slice(), jty.as_mut_slice());
        combine(ybar, self.params().dt, jty)
    }

    /// Runs the model `steps` times from `x0` and keeps the states needed to
    /// linearize each step.
    pub fn linearize(&self, x0: &StateVector, steps: usize) -> Result<LinearizationPoint<'_>> {
        let mut trajectory = self.trajectory(x0, steps)?;
        trajectory.pop();
        Ok(LinearizationPoint { model: self, trajectory })
    }
}

/// `x + dt * y`, reusing `y`'s storage.
fn combine(x: &StateVector, dt: f64, mut y: StateVector) -> StateVector {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi = xi + dt * *yi;
    }
    y
}

/// Adjoint of the steps linearized at `states`, last step first.
pub(crate) fn adjoint_along(model: &SweModel, states: &[StateVector], ybar: &StateVector) -> StateVector {
    let mut y = ybar.clone();
    for base in states.iter().rev() {
        y = model.adjoint_step_unchecked(base, &y);
    }
    y
}

/// Forward states `x_0, ..., x_{n-1}` at which the `n` steps are linearized.
#[derive(Debug, Clone)]
pub struct LinearizationPoint<'m> {
    model: &'m SweModel,
    trajectory: Vec<StateVector>,
}

impl<'m> LinearizationPoint<'m> {
    /// Uses a trajectory computed elsewhere; `trajectory[k]` must be the
    /// state entering step `k`.
    pub fn from_trajectory(model: &'m SweModel, trajectory: Vec<StateVector>) -> Result<Self> {
        for x in &trajectory {
            model.check_state(x, "linearization state")?;
        }
        Ok(Self { model, trajectory })
    }

    pub fn model(&self) -> &'m SweModel {
        self.model
    }

    pub fn trajectory(&self) -> &[StateVector] {
        &self.trajectory
    }

    /// Number of linearized steps.
    pub fn len(&self) -> usize {
        self.trajectory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectory.is_empty()
    }

    /// Steps `range` of this window as a window of its own.
    pub fn sub_window(&self, range: std::ops::Range<usize>) -> LinearizationPoint<'m> {
        LinearizationPoint { model: self.model, trajectory: self.trajectory[range].to_vec() }
    }

    fn check(&self, v: &StateVector) -> Result<()> {
        if !v.conforms_to(self.model.grid()) {
            return Err(Error::DimensionMismatch { expected: self.model.grid().state_len(), found: v.len() });
        }
        if !v.is_finite() {
            return Err(Error::NonFinite("perturbation"));
        }
        Ok(())
    }

    /// Tangent-linear model over the whole window.
    pub fn tlm(&self, delta: &StateVector) -> Result<StateVector> {
        self.check(delta)?;
        Ok(self.tlm_prefix(delta, self.len()))
    }

    /// Adjoint model over the whole window.
    pub fn adjoint(&self, ybar: &StateVector) -> Result<StateVector> {
        self.check(ybar)?;
        Ok(self.adjoint_prefix(ybar, self.len()))
    }

    /// Tangent-linear model over the first `steps` steps.
    pub(crate) fn tlm_prefix(&self, delta: &StateVector, steps: usize) -> StateVector {
        let mut d = delta.clone();
        for base in &self.trajectory[..steps] {
            d = self.model.tlm_step_unchecked(base, &d);
        }
        d
    }

    /// Adjoint of the first `steps` steps, swept backwards.
    pub(crate) fn adjoint_prefix(&self, ybar: &StateVector, steps: usize) -> StateVector {
        adjoint_along(self.model, &self.trajectory[..steps], ybar)
    }
}
