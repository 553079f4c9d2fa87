//! Shared fixtures and an independent pointwise evaluation of the stencils.
#![allow(dead_code)]

use std::ops::{Add, Mul, Neg, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use swe4dvar::observations::{generate_window_data, AssimilationWindow, Problem};
use swe4dvar::{AssimilationSetup, FieldParams, ModelParams, SphereGrid, StateVector, StencilVariant, SweModel};

pub const VARIANTS: [StencilVariant; 2] = [StencilVariant::AsPrinted, StencilVariant::Corrected];

pub fn model(nlon: usize, nlat: usize, p: usize, q: usize, variant: StencilVariant) -> SweModel {
    let grid = SphereGrid::new(nlon, nlat).unwrap();
    SweModel::new(grid, ModelParams { p, q, ..Default::default() }, variant).unwrap()
}

/// The 8x6 test model with the widest stencil it admits.
pub fn small_model(variant: StencilVariant) -> SweModel {
    model(8, 6, 3, 2, variant)
}

pub fn random_state(nlon: usize, nlat: usize, scale: f64, rng: &mut ChaCha8Rng) -> StateVector {
    let v = (0..3 * nlon * nlat).map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng)).collect();
    StateVector::from_vec(nlon, nlat, v).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A base state whose 30-step trajectory stays finite for the given variant.
///
/// The as-printed height tendency lacks the metric factors and grows any
/// state of realistic size past `f64` range within a few steps, so it is
/// linearized about a small random state instead.
pub fn base_state(m: &SweModel, seed: u64) -> StateVector {
    let g = m.grid();
    match m.variant() {
        StencilVariant::Corrected => {
            let mut x = m.synth_initial(seed, &FieldParams::default());
            let wind = random_state(g.nlon, g.nlat, 5.0, &mut rng(seed ^ 0x5eed));
            for k in 0..2 * g.ncells() {
                x.as_mut_slice()[k] = wind.as_slice()[k];
            }
            x
        }
        StencilVariant::AsPrinted => random_state(g.nlon, g.nlat, 1e-3, &mut rng(seed)),
    }
}

pub fn setup(problem: u8, nt_obs: usize, nsvs: usize, rel_tol: f64) -> AssimilationSetup {
    let m = small_model(StencilVariant::Corrected);
    let x0 = m.synth_initial(3, &FieldParams::default());
    let w = AssimilationWindow::new(nt_obs, m.params().dt).unwrap();
    let data = generate_window_data(&m, &x0, w, Problem::new(problem).unwrap(), 11).unwrap();
    AssimilationSetup::from_window(m, &data, nsvs, rel_tol, 1.0).unwrap()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Forward-mode dual number, enough arithmetic for the stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Self { v, d }
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Self { v, d: 0.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

pub trait Scalar:
    Copy + From<f64> + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
}
impl Scalar for f64 {}
impl Scalar for Dual {}

/// Cell-by-cell evaluation of the tendency straight from the formulas.
pub fn rhs_oracle<T: Scalar>(grid: &SphereGrid, prm: &ModelParams, variant: StencilVariant, x: &[T]) -> Vec<T> {
    let (nlon, nlat) = (grid.nlon as isize, grid.nlat as isize);
    let n = (nlon * nlat) as usize;
    let a = grid.constants.radius;
    let g = grid.constants.gravity;
    let om = grid.constants.omega;
    let sl = 1.0 / (2.0 * a * grid.dlambda);
    let st = 1.0 / (2.0 * a * grid.dtheta);
    let al = prm.alpha;
    let (p, q) = (prm.p as isize, prm.q as isize);
    let (pf, qf) = (prm.p as f64, prm.q as f64);
    let printed = variant == StencilVariant::AsPrinted;

    let at = |b: usize, i: isize, j: isize| -> T {
        let i = i.rem_euclid(nlon);
        let j = j.clamp(0, nlat - 1);
        x[b * n + (i + j * nlon) as usize]
    };
    let u = |i, j| at(0, i, j);
    let v = |i, j| at(1, i, j);
    let h = |i, j| at(2, i, j);
    let th = |j: isize| grid.theta[j.clamp(0, nlat - 1) as usize];
    let k = |c: f64| T::from(c);

    let mut out = vec![T::from(0.0); 3 * n];
    for j in 0..nlat {
        let c = th(j).cos();
        let f = |jj: isize| 2.0 * om * th(jj).sin();
        let tn = |jj: isize| th(jj).tan() / a;
        for i in 0..nlon {
            let cor = if printed { 2.0 } else { 1.0 };
            let uu = -(k(sl / c) * u(i, j) * (u(i + 1, j) - u(i - 1, j)))
                - k(st) * v(i, j) * (u(i, j + 1) - u(i, j - 1))
                - k(sl * g / (pf * c)) * (h(i + p, j) - h(i - p, j))
                + k(cor)
                    * (k(1.0 - al) * (k(f(j)) + k(tn(j)) * u(i, j)) * v(i, j)
                        + k(al / 2.0) * (k(f(j)) + k(tn(j)) * u(i + p, j)) * v(i + p, j)
                        + k(al / 2.0) * (k(f(j)) + k(tn(j)) * u(i - p, j)) * v(i - p, j));

            let adv = if printed { u(i, j + 1) - u(i, j - 1) } else { v(i, j + 1) - v(i, j - 1) };
            let vv = -(k(sl / c) * u(i, j) * (v(i + 1, j) - v(i - 1, j)))
                - k(st) * v(i, j) * adv
                - k(st * g / qf) * (h(i, j + q) - h(i, j - q))
                - k(cor)
                    * (k(1.0 - al) * (k(f(j)) + k(tn(j)) * u(i, j)) * u(i, j)
                        + k(al / 2.0) * (k(f(j + q)) + k(tn(j + q)) * u(i, j + q)) * u(i, j + q)
                        + k(al / 2.0) * (k(f(j - q)) + k(tn(j - q)) * u(i, j - q)) * u(i, j - q));

            let cq = |jj: isize| k(th(jj).cos());
            let udiv = k(1.0 - al) * (u(i + p, j) - u(i - p, j))
                + k(al / 2.0) * (u(i + p, j + q) - u(i - p, j + q) + u(i + p, j - q) - u(i - p, j - q));
            let vdiv = k(1.0 - al) * (v(i, j + q) * cq(j + q) - v(i, j - q) * cq(j - q))
                + k(al / 2.0) * (v(i + p, j + q) * cq(j + q) - v(i + p, j - q) * cq(j - q))
                + k(al / 2.0) * (v(i - p, j + q) * cq(j + q) - v(i - p, j - q) * cq(j - q));
            let hh = if printed {
                -(k(al)
                    * (u(i, j) * k(1.0 / c) * (h(i + 1, j) - h(i - 1, j))
                        + v(i, j) * (h(i, j + 1) - h(i, j - 1))
                        + h(i, j) * k(1.0 / c) * udiv * k(1.0 / pf)
                        + vdiv * k(1.0 / qf)))
            } else {
                -(k(sl / c) * u(i, j) * (h(i + 1, j) - h(i - 1, j))
                    + k(st) * v(i, j) * (h(i, j + 1) - h(i, j - 1))
                    + k(sl / (c * pf)) * h(i, j) * udiv
                    + k(st / (c * qf)) * h(i, j) * vdiv)
            };

            let cell = (i + j * nlon) as usize;
            out[cell] = uu;
            out[n + cell] = vv;
            out[2 * n + cell] = hh;
        }
    }
    out
}

/// Dense Jacobian of [`rhs_oracle`] at `x`, row-major `len x len`.
pub fn jacobian_oracle(grid: &SphereGrid, prm: &ModelParams, variant: StencilVariant, x: &[f64]) -> Vec<Vec<f64>> {
    let len = x.len();
    let cols: Vec<Vec<f64>> = (0..len)
        .map(|col| {
            let xd: Vec<Dual> =
                x.iter().enumerate().map(|(k, &v)| Dual::new(v, f64::from(u8::from(k == col)))).collect();
            rhs_oracle(grid, prm, variant, &xd).iter().map(|r| r.d).collect()
        })
        .collect();
    (0..len).map(|row| cols.iter().map(|c| c[row]).collect()).collect()
}
