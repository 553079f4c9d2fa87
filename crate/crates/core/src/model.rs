//! Semi-discrete Turkel-Zwas shallow-water model and its time stepping.
//!
//! The right-hand side is a sum of monomials of degree one and two in the
//! state, with coefficients that depend only on the grid and on `(alpha, p,
//! q)`. [`SweModel::new`] enumerates those monomials once; evaluating the
//! tendency, its Jacobian-vector product and the transposed product are then
//! three loops over the same term lists.
//!
//! Finite differences use `sigma_lon = 1 / (2 a dlambda)` and
//! `sigma_lat = 1 / (2 a dtheta)`. The gravity-wave terms span `i +- p` in
//! longitude and `j +- q` in latitude; the Coriolis terms are averaged over
//! the same wide neighbours with weights `(1 - alpha, alpha/2, alpha/2)`.
//!
//! Two variants are available:
//!
//! * [`StencilVariant::AsPrinted`] reproduces the published stencil term by
//!   term: the factor `2` on the Coriolis brackets, `u`-differences in the
//!   meridional advection of `v`, and a height tendency scaled by `alpha`
//!   without the `sigma` metric factors.
//! * [`StencilVariant::Corrected`] is the consistent centred discretization
//!   of the continuous equations: unit Coriolis weight, `v`-differences in the
//!   meridional advection of `v`, and a flux-form height tendency with the
//!   `sigma` factors and the `h`-weighted meridional flux.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{clamp_lat, wrap_lon, Error, Result, SphereGrid, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StencilVariant {
    #[default]
    AsPrinted,
    Corrected,
}

impl FromStr for StencilVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(Self::AsPrinted),
            "corrected" => Ok(Self::Corrected),
            other => {
                Err(Error::Config(format!("unknown stencil variant {other:?} (expected as-printed or corrected)")))
            }
        }
    }
}

impl fmt::Display for StencilVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AsPrinted => "as-printed",
            Self::Corrected => "corrected",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Time step, s.
    pub dt: f64,
    /// Coriolis averaging weight of the Turkel-Zwas scheme, `0 < alpha < 1`.
    pub alpha: f64,
    /// Longitudinal half-width of the gravity-wave stencil.
    pub p: usize,
    /// Latitudinal half-width of the gravity-wave stencil.
    pub q: usize,
    /// Number of steps taken by [`SweModel::integrate`].
    pub msteps: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { dt: 50.0, alpha: 1.0 / 3.0, p: 4, q: 2, msteps: 30 }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParams(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.p == 0 || self.q == 0 {
            return Err(Error::InvalidParams(format!("p and q must be >= 1, got {} and {}", self.p, self.q)));
        }
        Ok(())
    }
}

/// Parameters of the synthetic initial height field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldParams {
    /// Mean height, m.
    pub mean_height: f64,
    /// Pointwise standard deviation of the perturbation, m.
    pub std_dev: f64,
    /// Number of random modes; `None` means `nlat / 2`.
    pub modes: Option<usize>,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self { mean_height: 5000.0, std_dev: 10.0, modes: None }
    }
}

#[derive(Debug, Clone, Copy)]
struct LinTerm {
    out: u32,
    a: u32,
    c: f64,
}

#[derive(Debug, Clone, Copy)]
struct QuadTerm {
    out: u32,
    a: u32,
    b: u32,
    c: f64,
}

#[derive(Debug, Default)]
struct Stencil {
    lin: Vec<LinTerm>,
    quad: Vec<QuadTerm>,
}

impl Stencil {
    fn lin(&mut self, out: usize, c: f64, a: usize) {
        self.lin.push(LinTerm { out: out as u32, a: a as u32, c });
    }

    fn quad(&mut self, out: usize, c: f64, a: usize, b: usize) {
        self.quad.push(QuadTerm { out: out as u32, a: a as u32, b: b as u32, c });
    }

    fn build(grid: &SphereGrid, params: &ModelParams, variant: StencilVariant) -> Self {
        const U: usize = 0;
        const V: usize = 1;
        const H: usize = 2;

        let (nlon, nlat) = (grid.nlon, grid.nlat);
        let n = grid.ncells();
        let idx = |b: usize, i: usize, j: usize| b * n + i + j * nlon;
        let PhysicalConsts { a, g, omega } = PhysicalConsts::from(grid);
        let sl = 1.0 / (2.0 * a * grid.dlambda);
        let st = 1.0 / (2.0 * a * grid.dtheta);
        let alpha = params.alpha;
        let (p, q) = (params.p as isize, params.q as isize);
        let (pf, qf) = (params.p as f64, params.q as f64);
        let printed = variant == StencilVariant::AsPrinted;
        let coriolis = if printed { 2.0 } else { 1.0 };
        let v_adv = if printed { U } else { V };
        // scales of the height tendency: overall factor, lon and lat metric
        let (outer, hx, hy) = if printed { (-alpha, 1.0, 1.0) } else { (-1.0, sl, st) };
        let weights = [1.0 - alpha, alpha / 2.0, alpha / 2.0];

        let cos: Vec<f64> = grid.theta.iter().map(|t| t.cos()).collect();
        let fcor: Vec<f64> = grid.theta.iter().map(|t| 2.0 * omega * t.sin()).collect();
        let metric: Vec<f64> = grid.theta.iter().map(|t| t.tan() / a).collect();

        let mut s = Stencil::default();
        for j in 0..nlat {
            let jj = j as isize;
            let jn = clamp_lat(jj + 1, nlat);
            let js = clamp_lat(jj - 1, nlat);
            let jnq = clamp_lat(jj + q, nlat);
            let jsq = clamp_lat(jj - q, nlat);
            let c = cos[j];
            for i in 0..nlon {
                let ii = i as isize;
                let e = wrap_lon(ii + 1, nlon);
                let w = wrap_lon(ii - 1, nlon);
                let ep = wrap_lon(ii + p, nlon);
                let wp = wrap_lon(ii - p, nlon);

                // zonal momentum
                let o = idx(U, i, j);
                s.quad(o, -sl / c, idx(U, i, j), idx(U, e, j));
                s.quad(o, sl / c, idx(U, i, j), idx(U, w, j));
                s.quad(o, -st, idx(V, i, j), idx(U, i, jn));
                s.quad(o, st, idx(V, i, j), idx(U, i, js));
                let gp = sl * g / (pf * c);
                s.lin(o, -gp, idx(H, ep, j));
                s.lin(o, gp, idx(H, wp, j));
                for (wt, col) in weights.into_iter().zip([i, ep, wp]) {
                    s.lin(o, coriolis * wt * fcor[j], idx(V, col, j));
                    s.quad(o, coriolis * wt * metric[j], idx(U, col, j), idx(V, col, j));
                }

                // meridional momentum
                let o = idx(V, i, j);
                s.quad(o, -sl / c, idx(U, i, j), idx(V, e, j));
                s.quad(o, sl / c, idx(U, i, j), idx(V, w, j));
                s.quad(o, -st, idx(V, i, j), idx(v_adv, i, jn));
                s.quad(o, st, idx(V, i, j), idx(v_adv, i, js));
                let gq = st * g / qf;
                s.lin(o, -gq, idx(H, i, jnq));
                s.lin(o, gq, idx(H, i, jsq));
                for (wt, row) in weights.into_iter().zip([j, jnq, jsq]) {
                    s.lin(o, -coriolis * wt * fcor[row], idx(U, i, row));
                    s.quad(o, -coriolis * wt * metric[row], idx(U, i, row), idx(U, i, row));
                }

                // height
                let o = idx(H, i, j);
                s.quad(o, outer * hx / c, idx(U, i, j), idx(H, e, j));
                s.quad(o, -outer * hx / c, idx(U, i, j), idx(H, w, j));
                s.quad(o, outer * hy, idx(V, i, j), idx(H, i, jn));
                s.quad(o, -outer * hy, idx(V, i, j), idx(H, i, js));
                let hu = outer * hx / (c * pf);
                let u_div = [
                    (weights[0], ep, j, 1.0),
                    (weights[0], wp, j, -1.0),
                    (weights[1], ep, jnq, 1.0),
                    (weights[1], wp, jnq, -1.0),
                    (weights[2], ep, jsq, 1.0),
                    (weights[2], wp, jsq, -1.0),
                ];
                for (wt, col, row, sign) in u_div {
                    s.quad(o, hu * wt * sign, idx(H, i, j), idx(U, col, row));
                }
                let v_div = [
                    (weights[0], i, jnq, 1.0),
                    (weights[0], i, jsq, -1.0),
                    (weights[1], ep, jnq, 1.0),
                    (weights[1], ep, jsq, -1.0),
                    (weights[2], wp, jnq, 1.0),
                    (weights[2], wp, jsq, -1.0),
                ];
                for (wt, col, row, sign) in v_div {
                    if printed {
                        s.lin(o, outer / qf * wt * sign * cos[row], idx(V, col, row));
                    } else {
                        let hv = outer * hy / (qf * c);
                        s.quad(o, hv * wt * sign * cos[row], idx(H, i, j), idx(V, col, row));
                    }
                }
            }
        }
        s
    }
}

struct PhysicalConsts {
    a: f64,
    g: f64,
    omega: f64,
}

impl From<&SphereGrid> for PhysicalConsts {
    fn from(grid: &SphereGrid) -> Self {
        Self { a: grid.constants.radius, g: grid.constants.gravity, omega: grid.constants.omega }
    }
}

/// The discrete shallow-water model on a fixed grid.
#[derive(Debug, Clone)]
pub struct SweModel {
    grid: SphereGrid,
    params: ModelParams,
    variant: StencilVariant,
    stencil: Arc<Stencil>,
}

impl SweModel {
    pub fn new(grid: SphereGrid, params: ModelParams, variant: StencilVariant) -> Result<Self> {
        params.validate()?;
        grid.check_stencil(params.p, params.q)?;
        let stencil = Arc::new(Stencil::build(&grid, &params, variant));
        Ok(Self { grid, params, variant, stencil })
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn variant(&self) -> StencilVariant {
        self.variant
    }

    /// Same stencil, different step size.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        let params = ModelParams { dt, ..self.params };
        params.validate()?;
        Ok(Self { params, ..self.clone() })
    }

    /// Same stencil, different default step count.
    pub fn with_msteps(&self, msteps: usize) -> Self {
        Self { params: ModelParams { msteps, ..self.params }, ..self.clone() }
    }

    pub(crate) fn check_state(&self, x: &StateVector, what: &'static str) -> Result<()> {
        if !x.conforms_to(&self.grid) {
            return Err(Error::DimensionMismatch { expected: self.grid.state_len(), found: x.len() });
        }
        if !x.is_finite() {
            return Err(Error::NonFinite(what));
        }
        Ok(())
    }

    /// Tendency `(U, V, H)` of the semi-discrete system, per second.
    pub fn rhs(&self, x: &StateVector) -> Result<StateVector> {
        self.check_state(x, "state")?;
        let mut out = StateVector::zeros_like_grid(&self.grid);
        self.rhs_into(x.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    fn rhs_into(&self, x: &[f64], out: &mut [f64]) {
        for t in &self.stencil.lin {
            out[t.out as usize] += t.c * x[t.a as usize];
        }
        for t in &self.stencil.quad {
            out[t.out as usize] += t.c * x[t.a as usize] * x[t.b as usize];
        }
    }

    /// `out += J(base) * delta`, where `J` is the Jacobian of the tendency.
    pub(crate) fn jvp_into(&self, base: &[f64], delta: &[f64], out: &mut [f64]) {
        for t in &self.stencil.lin {
            out[t.out as usize] += t.c * delta[t.a as usize];
        }
        for t in &self.stencil.quad {
            let (a, b) = (t.a as usize, t.b as usize);
            out[t.out as usize] += t.c * (delta[a] * base[b] + base[a] * delta[b]);
        }
    }

    /// `out += J(base)^T * ybar`.
    pub(crate) fn vjp_into(&self, base: &[f64], ybar: &[f64], out: &mut [f64]) {
        for t in &self.stencil.lin {
            out[t.a as usize] += t.c * ybar[t.out as usize];
        }
        for t in &self.stencil.quad {
            let (a, b) = (t.a as usize, t.b as usize);
            let w = t.c * ybar[t.out as usize];
            out[a] += w * base[b];
            out[b] += w * base[a];
        }
    }

    /// One explicit Euler step, `x + dt * rhs(x)`.
    pub fn step(&self, x: &StateVector) -> Result<StateVector> {
        let mut out = self.rhs(x)?;
        let dt = self.params.dt;
        for (o, xi) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *o = xi + dt * *o;
        }
        Ok(out)
    }

    /// `msteps` steps from `x0`.
    pub fn integrate(&self, x0: &StateVector) -> Result<StateVector> {
        self.integrate_steps(x0, self.params.msteps)
    }

    pub fn integrate_steps(&self, x0: &StateVector, steps: usize) -> Result<StateVector> {
        self.check_state(x0, "initial state")?;
        let mut x = x0.clone();
        for _ in 0..steps {
            x = self.step(&x)?;
        }
        Ok(x)
    }

    /// States `x0, M(x0), ..., M^steps(x0)`.
    pub fn trajectory(&self, x0: &StateVector, steps: usize) -> Result<Vec<StateVector>> {
        self.check_state(x0, "initial state")?;
        let mut traj = Vec::with_capacity(steps + 1);
        traj.push(x0.clone());
        for k in 0..steps {
            let next = self.step(&traj[k])?;
            traj.push(next);
        }
        Ok(traj)
    }

    /// Resting initial state with a random height perturbation.
    ///
    /// `u = v = 0`; `h` is `mean_height` plus a sum of random-phase modes
    /// `A_k cos^m(theta) cos(m lambda + phi_k) cos(n_k theta + psi_k)` with
    /// standard normal amplitudes, scaled so the standard deviation near the
    /// equator is `std_dev`. The `cos^m` taper keeps each mode regular at
    /// the poles, like an associated Legendre function. Zonal wavenumbers
    /// stay within `1..=(nlon-1)/2`, so every mode averages to zero around
    /// each latitude circle.
    pub fn synth_initial(&self, seed: u64, fp: &FieldParams) -> StateVector {
        synth_initial(&self.grid, seed, fp)
    }
}

/// See [`SweModel::synth_initial`].
pub fn synth_initial(grid: &SphereGrid, seed: u64, fp: &FieldParams) -> StateVector {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let modes = fp.modes.unwrap_or(grid.nlat / 2).max(1);
    let max_m = ((grid.nlon - 1) / 2).max(1);
    let scale = fp.std_dev * 2.0 / (modes as f64).sqrt();
    let mut x = StateVector::zeros_like_grid(grid);
    let nlon = grid.nlon;
    let h = x.field_mut(crate::Field::H);
    h.fill(fp.mean_height);
    for k in 0..modes {
        let amp: f64 = rng.sample(StandardNormal);
        let phi = rng.random_range(0.0..2.0 * PI);
        let psi = rng.random_range(0.0..2.0 * PI);
        let m = 1 + k % max_m;
        let nmer = (1 + k) as f64;
        for (j, theta) in grid.theta.iter().enumerate() {
            let merid = (nmer * theta + psi).cos() * theta.cos().powi(m as i32);
            let m = m as f64;
            for (i, lambda) in grid.lambda.iter().enumerate() {
                h[i + j * nlon] += scale * amp * (m * lambda + phi).cos() * merid;
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Field;

    fn model(nlon: usize, nlat: usize, p: usize, q: usize, variant: StencilVariant) -> SweModel {
        let grid = SphereGrid::new(nlon, nlat).unwrap();
        SweModel::new(grid, ModelParams { p, q, ..Default::default() }, variant).unwrap()
    }

    fn resting(nlon: usize, nlat: usize, h0: f64) -> StateVector {
        let mut x = StateVector::zeros(nlon, nlat);
        x.field_mut(Field::H).fill(h0);
        x
    }

    #[test]
    fn rest_state_has_zero_tendency() {
        for variant in [StencilVariant::AsPrinted, StencilVariant::Corrected] {
            let m = model(12, 7, 4, 2, variant);
            let x = resting(12, 7, 5000.0);
            assert!(m.rhs(&x).unwrap().as_slice().iter().all(|&v| v == 0.0));
            assert_eq!(m.step(&x).unwrap(), x);
        }
    }

    #[test]
    fn uniform_meridional_wind_coriolis() {
        // u = 0, h const, v = v0: the U bracket weights sum to one.
        let m = model(12, 7, 4, 2, StencilVariant::AsPrinted);
        let v0 = 3.0;
        let mut x = resting(12, 7, 100.0);
        x.field_mut(Field::V).fill(v0);
        let t = m.rhs(&x).unwrap();
        let omega = m.grid().constants.omega;
        for j in 0..7 {
            let theta = m.grid().theta[j];
            let expect_u = 2.0 * (2.0 * omega * theta.sin()) * v0;
            for i in 0..12 {
                let got = t.at(Field::U, i, j);
                assert!((got - expect_u).abs() <= 1e-15 * expect_u.abs().max(1e-300), "{got} vs {expect_u}");
                // V: advection of u vanishes (u = 0), Coriolis multiplies u = 0
                assert_eq!(t.at(Field::V, i, j), 0.0);
                // H (printed): -alpha * { v (h_N - h_S) + v-bracket / q }
                let jnq = clamp_lat(j as isize + 2, 7);
                let jsq = clamp_lat(j as isize - 2, 7);
                let cn = m.grid().theta[jnq].cos();
                let cs = m.grid().theta[jsq].cos();
                let expect_h = -(1.0 / 3.0) * (v0 * (cn - cs)) / 2.0;
                let got_h = t.at(Field::H, i, j);
                assert!((got_h - expect_h).abs() <= 1e-13 * expect_h.abs().max(1e-12), "{got_h} vs {expect_h}");
            }
        }
    }

    #[test]
    fn point_height_footprint() {
        let (nlon, nlat, p, q) = (8, 6, 3, 2);
        for variant in [StencilVariant::AsPrinted, StencilVariant::Corrected] {
            let m = model(nlon, nlat, p, q, variant);
            let (ci, cj) = (2usize, 3usize);
            let mut x = StateVector::zeros(nlon, nlat);
            x.field_mut(Field::H)[ci + cj * nlon] = 1.0;
            let t = m.rhs(&x).unwrap();
            for j in 0..nlat {
                for i in 0..nlon {
                    let di = (i as isize - ci as isize).rem_euclid(nlon as isize);
                    let di = di.min(nlon as isize - di) as usize;
                    let u_hit = j == cj && di == p;
                    let v_hit = i == ci
                        && (clamp_lat(j as isize + q as isize, nlat) == cj
                            || clamp_lat(j as isize - q as isize, nlat) == cj);
                    if !u_hit {
                        assert_eq!(t.at(Field::U, i, j), 0.0, "U leak at ({i},{j})");
                    } else {
                        assert!(t.at(Field::U, i, j) != 0.0);
                    }
                    if !v_hit {
                        assert_eq!(t.at(Field::V, i, j), 0.0, "V leak at ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn longitude_translation_equivariance() {
        let m = model(10, 7, 3, 2, StencilVariant::AsPrinted);
        let mut x = m.synth_initial(3, &FieldParams::default());
        let n = x.ncells();
        for k in 0..2 * n {
            x.as_mut_slice()[k] = ((k * 37) % 11) as f64 * 0.1 - 0.5;
        }
        let lhs = m.rhs(&x.roll_lon(1)).unwrap();
        let rhs = m.rhs(&x).unwrap().roll_lon(1);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn step_increment_is_linear_in_dt() {
        let m = model(12, 7, 4, 2, StencilVariant::AsPrinted);
        let x = m.synth_initial(11, &FieldParams::default());
        let m2 = m.with_dt(m.params().dt / 2.0).unwrap();
        let d1 = crate::linalg::sub(m.step(&x).unwrap().as_slice(), x.as_slice());
        let d2 = crate::linalg::sub(m2.step(&x).unwrap().as_slice(), x.as_slice());
        let ratio = crate::linalg::norm2(&d1) / crate::linalg::norm2(&d2);
        assert!((ratio - 2.0).abs() < 1e-12 * 2.0, "ratio {ratio}");
    }

    #[test]
    fn integrate_composes() {
        let m = model(12, 7, 4, 2, StencilVariant::AsPrinted);
        let x = m.synth_initial(1, &FieldParams::default());
        assert_eq!(m.integrate_steps(&x, 0).unwrap(), x);
        let direct = m.integrate_steps(&x, 7).unwrap();
        let split = m.integrate_steps(&m.integrate_steps(&x, 3).unwrap(), 4).unwrap();
        assert_eq!(direct, split);
        let traj = m.trajectory(&x, 7).unwrap();
        assert_eq!(traj.len(), 8);
        assert_eq!(traj[7], direct);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = model(8, 6, 3, 2, StencilVariant::AsPrinted);
        let mut x = StateVector::zeros(8, 6);
        x.as_mut_slice()[5] = f64::NAN;
        assert!(matches!(m.rhs(&x), Err(Error::NonFinite(_))));
        assert!(matches!(m.rhs(&StateVector::zeros(7, 6)), Err(Error::DimensionMismatch { .. })));
        let grid = SphereGrid::new(8, 6).unwrap();
        assert!(matches!(
            SweModel::new(grid.clone(), ModelParams::default(), StencilVariant::AsPrinted),
            Err(Error::StencilTooWide { .. })
        ));
        let bad = ModelParams { alpha: 1.0, p: 1, q: 1, ..Default::default() };
        assert!(SweModel::new(grid, bad, StencilVariant::AsPrinted).is_err());
    }

    #[test]
    fn synthetic_initial_state() {
        let grid = SphereGrid::new(72, 36).unwrap();
        let fp = FieldParams::default();
        let a = synth_initial(&grid, 42, &fp);
        assert_eq!(a, synth_initial(&grid, 42, &fp));
        assert_ne!(a, synth_initial(&grid, 43, &fp));
        assert!(a.u().iter().chain(a.v()).all(|&v| v == 0.0));
        let n = grid.ncells() as f64;
        let bound = 3.0 * 10.0 / n.sqrt();
        let mut mean_of_means = 0.0;
        for seed in 0..100 {
            let x = synth_initial(&grid, seed, &fp);
            let mean = x.h().iter().map(|h| h - 5000.0).sum::<f64>() / n;
            assert!(mean.abs() < bound, "seed {seed}: mean {mean}");
            mean_of_means += mean / 100.0;
        }
        assert!(mean_of_means.abs() < bound);
    }

    #[test]
    fn variant_parses() {
        assert_eq!("as-printed".parse::<StencilVariant>().unwrap(), StencilVariant::AsPrinted);
        assert_eq!("corrected".parse::<StencilVariant>().unwrap(), StencilVariant::Corrected);
        assert!("leapfrog".parse::<StencilVariant>().is_err());
        assert_eq!(StencilVariant::Corrected.to_string(), "corrected");
    }
}
