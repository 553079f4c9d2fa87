//! Limited-memory BFGS with Armijo backtracking.

use serde::{Deserialize, Serialize};

use crate::{linalg, AssimilationSetup, Error, Result, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizerOptions {
    /// Stop once `|g| <= gtol * max(1, |g_0|)`.
    pub gtol: f64,
    pub max_iter: usize,
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self { gtol: 1e-8, max_iter: 200, memory: 10, c1: 1e-4, backtrack: 0.5, max_backtracks: 60 }
    }
}

impl MinimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gtol >= 0.0
            && self.memory >= 1
            && self.c1 > 0.0
            && self.c1 < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.max_backtracks >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid minimizer options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub cost: f64,
    pub grad_norm: f64,
    /// Accepted step length along the search direction; 0 for the start.
    pub step: f64,
}

/// A smooth scalar function of a flat vector.
pub trait Objective {
    fn cost(&self, x: &[f64]) -> Result<f64>;
    fn cost_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone)]
pub struct RawResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub f_initial: f64,
    pub f_final: f64,
    pub grad_norm_final: f64,
    pub stop: StopReason,
    pub log: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct DAResult {
    pub x_da: StateVector,
    pub iterations: usize,
    pub j_initial: f64,
    pub j_final: f64,
    pub grad_norm_final: f64,
    pub converged: bool,
    pub stop: StopReason,
    pub log: Vec<IterationRecord>,
}

impl Objective for AssimilationSetup {
    fn cost(&self, x: &[f64]) -> Result<f64> {
        self.eval_cost(&self.wrap(x)?)
    }

    fn cost_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (j, g) = self.cost_and_grad(&self.wrap(x)?)?;
        Ok((j, g.into_vec()))
    }
}

impl AssimilationSetup {
    fn wrap(&self, x: &[f64]) -> Result<StateVector> {
        StateVector::from_vec(self.x_b.nlon(), self.x_b.nlat(), x.to_vec())
    }
}

/// Minimize the functional starting from the background state.
pub fn minimize(setup: &AssimilationSetup, opts: &MinimizerOptions) -> Result<DAResult> {
    let raw = minimize_objective(setup, setup.x_b.as_slice(), opts)?;
    Ok(DAResult::from_raw(raw, setup.x_b.nlon(), setup.x_b.nlat()))
}

impl DAResult {
    pub(crate) fn from_raw(raw: RawResult, nlon: usize, nlat: usize) -> Self {
        Self {
            x_da: StateVector::from_vec(nlon, nlat, raw.x).expect("minimizer keeps the length"),
            iterations: raw.iterations,
            j_initial: raw.f_initial,
            j_final: raw.f_final,
            grad_norm_final: raw.grad_norm_final,
            converged: raw.stop == StopReason::GradientTolerance,
            stop: raw.stop,
            log: raw.log,
        }
    }
}

pub fn minimize_objective(obj: &dyn Objective, x0: &[f64], opts: &MinimizerOptions) -> Result<RawResult> {
    opts.validate()?;
    let mut x = x0.to_vec();
    let (mut f, mut g) = obj.cost_grad(&x)?;
    if !f.is_finite() || !linalg::all_finite(&g) {
        return Err(Error::NonFinite("objective at the starting point"));
    }
    let f_initial = f;
    let mut gnorm = linalg::norm2(&g);
    let tol = opts.gtol * gnorm.max(1.0);
    let mut log = vec![IterationRecord { iter: 0, cost: f, grad_norm: gnorm, step: 0.0 }];
    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(opts.memory);
    let mut iterations = 0;

    let stop = loop {
        if gnorm <= tol {
            break StopReason::GradientTolerance;
        }
        if iterations >= opts.max_iter {
            break StopReason::MaxIterations;
        }
        let mut d = two_loop(&g, &pairs);
        let mut slope = linalg::dot(&g, &d);
        // also catches a NaN slope
        if slope.partial_cmp(&0.0) != Some(std::cmp::Ordering::Less) {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut t = if pairs.is_empty() { 1.0f64.min(1.0 / gnorm) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let mut trial = x.clone();
            linalg::axpy(t, &d, &mut trial);
            let ft = obj.cost(&trial)?;
            if ft.is_finite() && ft <= f + opts.c1 * t * slope {
                accepted = Some(trial);
                break;
            }
            t *= opts.backtrack;
        }
        let Some(x_new) = accepted else {
            break StopReason::LineSearchFailed;
        };
        let (f_new, g_new) = obj.cost_grad(&x_new)?;
        if !linalg::all_finite(&g_new) {
            return Err(Error::NonFinite("objective gradient"));
        }
        let s = linalg::sub(&x_new, &x);
        let y = linalg::sub(&g_new, &g);
        let sy = linalg::dot(&s, &y);
        if sy > 1e-12 * linalg::norm2(&s) * linalg::norm2(&y) && sy > 0.0 {
            if pairs.len() == opts.memory {
                pairs.remove(0);
            }
            pairs.push((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
        gnorm = linalg::norm2(&g);
        iterations += 1;
        log.push(IterationRecord { iter: iterations, cost: f, grad_norm: gnorm, step: t });
    };

    Ok(RawResult { x, iterations, f_initial, f_final: f, grad_norm_final: gnorm, stop, log })
}

/// `-H g` from the stored pairs, scaled by the latest curvature estimate.
fn two_loop(g: &[f64], pairs: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = vec![0.0; pairs.len()];
    for (i, (s, y, rho)) in pairs.iter().enumerate().rev() {
        let a = rho * linalg::dot(s, &q);
        alphas[i] = a;
        linalg::axpy(-a, y, &mut q);
    }
    if let Some((_, y, rho)) = pairs.last() {
        let gamma = 1.0 / (rho * linalg::dot(y, y));
        linalg::scale(gamma, &mut q);
    }
    for (i, (s, y, rho)) in pairs.iter().enumerate() {
        let b = rho * linalg::dot(y, &q);
        linalg::axpy(alphas[i] - b, s, &mut q);
    }
    linalg::scale(-1.0, &mut q);
    q
}
