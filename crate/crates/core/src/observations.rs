//! Twin-experiment data: the truth run, the assimilation window and the
//! synthetic observations of the four test problems.
//!
//! The truth is the model run from `x0`. With `nt_obs` observation times
//! ending at step 30, the background is the truth at step `30 - nt_obs + 1`
//! and observation `n` (1-based) is derived from the truth at step
//! `30 - nt_obs + n`.
//!
//! | problem | mask         | observation                       |
//! |---------|--------------|-----------------------------------|
//! | 1       | all entries  | truth rounded to 2 decimals       |
//! | 2       | every 5th    | truth + 0.01 N(0,1)               |
//! | 3       | all entries  | truth rounded to 1 decimal        |
//! | 4       | every 5th    | truth + 0.01 O(truth) N(0,1)      |
//!
//! `O(x)` is the power of ten at or below `|x|`. Normal draws come from a
//! ChaCha20 stream seeded with the window seed, one draw per observed entry
//! in increasing index order, observation times in increasing order.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::ObsOperator;
use crate::{Error, Result, StateVector, SweModel};

/// Last model step of the assimilation window.
pub const WINDOW_END_STEP: usize = 30;

/// Standard deviation of the additive noise of problems 2 and 4.
pub const NOISE_SCALE: f64 = 0.01;

/// One of the four observation problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Problem(u8);

impl Problem {
    pub const ALL: [Problem; 4] = [Problem(1), Problem(2), Problem(3), Problem(4)];

    pub fn new(id: u8) -> Result<Self> {
        if (1..=4).contains(&id) {
            Ok(Self(id))
        } else {
            Err(Error::UnknownProblem(id))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// Problems 2 and 4 observe every fifth entry.
    pub fn is_sparse(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// Rounding precision of problems 1 and 3.
    pub fn decimals(self) -> Option<i32> {
        match self.0 {
            1 => Some(2),
            3 => Some(1),
            _ => None,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `nt_obs` observation times ending at `end_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssimilationWindow {
    pub nt_obs: usize,
    pub end_step: usize,
    pub dt: f64,
}

impl AssimilationWindow {
    pub fn new(nt_obs: usize, dt: f64) -> Result<Self> {
        Self::ending_at(nt_obs, WINDOW_END_STEP, dt)
    }

    pub fn ending_at(nt_obs: usize, end_step: usize, dt: f64) -> Result<Self> {
        if nt_obs == 0 {
            return Err(Error::InvalidWindow("nt_obs must be at least 1".into()));
        }
        if nt_obs > end_step + 1 {
            return Err(Error::InvalidWindow(format!("nt_obs = {nt_obs} exceeds {} available steps", end_step + 1)));
        }
        Ok(Self { nt_obs, end_step, dt })
    }

    /// Model step of the background and of the first observation.
    pub fn base_step(&self) -> usize {
        self.end_step + 1 - self.nt_obs
    }

    /// Model step of observation `n`, 1-based.
    pub fn obs_step(&self, n: usize) -> usize {
        self.base_step() + n - 1
    }

    /// Time interval covered by the observations, s.
    pub fn interval(&self) -> (f64, f64) {
        (self.base_step() as f64 * self.dt, self.end_step as f64 * self.dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    /// `obs[k]` is observed `k` steps after the window start.
    pub obs: Vec<StateVector>,
    pub problem: Problem,
    pub seed: u64,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

/// Background, observations and observation operator of one window.
#[derive(Debug, Clone)]
pub struct WindowData {
    pub window: AssimilationWindow,
    pub x_b: StateVector,
    pub observations: ObservationSet,
    pub operator: ObsOperator,
    /// Truth at the observation times.
    pub truth: Vec<StateVector>,
}

/// `round(10^d x) / 10^d`, halves away from zero.
pub fn round_to_decimals(x: f64, d: i32) -> f64 {
    let s = 10f64.powi(d);
    (x * s).round() / s
}

/// Largest power of ten not above `|x|`; zero for zero.
pub fn order_of_magnitude(x: f64) -> f64 {
    let ax = x.abs();
    if ax == 0.0 || !ax.is_finite() {
        return if ax == 0.0 { 0.0 } else { ax };
    }
    let mut e = ax.log10().floor() as i32;
    if 10f64.powi(e) > ax {
        e -= 1;
    } else if 10f64.powi(e + 1) <= ax {
        e += 1;
    }
    10f64.powi(e)
}

/// Observation of `truth` for `problem`, drawing noise from `rng`.
pub fn make_observation<R: rand::Rng + ?Sized>(
    truth: &StateVector,
    problem: Problem,
    mask: &ObsOperator,
    rng: &mut R,
) -> StateVector {
    let mut obs = truth.clone();
    let data = obs.as_mut_slice();
    match problem.decimals() {
        Some(d) => {
            for v in data.iter_mut() {
                *v = round_to_decimals(*v, d);
            }
        }
        None => {
            let relative = problem.id() == 4;
            for (i, v) in data.iter_mut().enumerate() {
                if !mask.is_observed(i) {
                    *v = 0.0;
                    continue;
                }
                let z: f64 = StandardNormal.sample(rng);
                let scale = if relative { NOISE_SCALE * order_of_magnitude(*v) } else { NOISE_SCALE };
                *v += scale * z;
            }
        }
    }
    obs
}

/// Runs the truth from `x0` and builds the background and observations of
/// `window`. The truth states are computed once, in one forward run.
pub fn generate_window_data(
    model: &SweModel,
    x0: &StateVector,
    window: AssimilationWindow,
    problem: Problem,
    seed: u64,
) -> Result<WindowData> {
    let start = model.integrate_steps(x0, window.base_step())?;
    let truth = model.trajectory(&start, window.nt_obs - 1)?;
    let operator = ObsOperator::for_problem(problem, model.grid());
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let obs = truth.iter().map(|t| make_observation(t, problem, &operator, &mut rng)).collect();
    Ok(WindowData { window, x_b: start, observations: ObservationSet { obs, problem, seed }, operator, truth })
}
