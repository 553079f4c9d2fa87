//! Space-time domain decomposition of the assimilation problem.
//!
//! Space is split into longitude strips, each widened by a periodic halo;
//! the observation window is split into contiguous ranges of observation
//! times that share one time level with their neighbour. Every subdomain
//! owns a local functional
//!
//! ```text
//! J_jh(x) = (x - x_b)^T B_jh^+ (x - x_b)              (first time range only)
//!         + lambda * sum_{k in range} |local part of H M^k(x) - v_k|^2_{R^-1}
//!         + mu * sum_{shared entries} (x - neighbour trace)^2
//! ```
//!
//! where `B_jh` is rebuilt from the restricted background, the model runs on
//! the full grid with values outside the subdomain frozen at the latest
//! assembled iterate, and the traces come from the previous outer sweep.
//! Local minimizers are assembled by averaging over the cover count.

use std::ops::Range;

use crate::cost::{combine_cost, combine_grad, BackgroundBlock};
use crate::covariance::{BackgroundCov, ObsOperator, TsvdPrecon};
use crate::minimize::{minimize_objective, IterationRecord, Objective, RawResult, StopReason};
use crate::observations::{AssimilationWindow, ObservationSet};
use crate::{
    linalg, AssimilationSetup, Background, DAResult, Error, MinimizerOptions, Result, SphereGrid, StateVector,
};

/// Outer sweeps stop once the assembled iterate moves by less than this, relatively.
pub const SWEEP_TOL: f64 = 1e-8;
pub const MAX_SWEEPS: usize = 10;
/// Smallest damping factor tried before a sweep is rejected outright.
const MIN_DAMPING: f64 = 1.0 / 1024.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    pub space_index: usize,
    pub time_index: usize,
    /// First longitude of the strip proper (without halo).
    pub lon_start: usize,
    pub core_width: usize,
    pub halo: usize,
    /// Observation indices `k` handled by this subdomain.
    pub obs_range: Range<usize>,
    cells: Vec<usize>,
    ncells: usize,
}

impl Subdomain {
    /// Global cell indices `i + j * nlon`, halo included, latitude-major.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Length of a local state vector.
    pub fn len(&self) -> usize {
        3 * self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn covers_grid(&self) -> bool {
        self.cells.len() == self.ncells
    }

    /// Global state indices of the local entries, field blocks in u, v, h order.
    pub fn entry_indices(&self) -> Vec<usize> {
        (0..3).flat_map(|b| self.cells.iter().map(move |&c| b * self.ncells + c)).collect()
    }

    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), 3 * self.ncells);
        (0..3).flat_map(|b| self.cells.iter().map(move |&c| x[b * self.ncells + c])).collect()
    }

    /// Write `local` back into its place in `global`.
    pub fn extend_into(&self, local: &[f64], global: &mut [f64]) {
        for (pos, idx) in self.entry_indices().into_iter().enumerate() {
            global[idx] = local[pos];
        }
    }

    /// Local slices of the observations in this subdomain's time range.
    pub fn restrict_observations(&self, obs: &ObservationSet) -> Vec<Vec<f64>> {
        obs.obs[self.obs_range.clone()].iter().map(|v| self.restrict(v.as_slice())).collect()
    }

    pub fn restrict_mask(&self, op: &ObsOperator) -> Vec<f64> {
        self.restrict(&op.mask)
    }

    /// 0/1 weight over global state entries selecting this subdomain.
    fn filter(&self) -> Vec<f64> {
        let mut f = vec![0.0; 3 * self.ncells];
        for i in self.entry_indices() {
            f[i] = 1.0;
        }
        f
    }
}

/// Entries shared with one neighbour, as positions in both local vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Overlap {
    pub neighbor: usize,
    pub local_pos: Vec<usize>,
    pub neighbor_pos: Vec<usize>,
}

/// Values a neighbour last held on the shared entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub positions: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainDecomposition {
    pub nlon: usize,
    pub nlat: usize,
    pub nt_obs: usize,
    pub n_space: usize,
    pub n_time: usize,
    pub halo: usize,
    pub mu: f64,
    pub subdomains: Vec<Subdomain>,
    /// Number of subdomains covering each cell.
    pub cover: Vec<u32>,
    pub overlaps: Vec<Vec<Overlap>>,
}

impl DomainDecomposition {
    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.subdomains.len() == 1
    }

    /// Block-diagonal background built from the local covariances of the
    /// space strips. Needs disjoint strips.
    pub fn block_background(&self, x_b: &StateVector, nsvs: usize, rel_tol: f64) -> Result<Background> {
        if self.halo != 0 && self.n_space > 1 {
            return Err(Error::Decomposition("block background needs disjoint strips (halo 0)".into()));
        }
        let blocks = self
            .subdomains
            .iter()
            .filter(|s| s.time_index == 0)
            .map(|s| {
                let precon = local_precon(s, x_b, nsvs, rel_tol)?;
                Ok(BackgroundBlock { indices: s.entry_indices(), precon })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Background::BlockDiagonal(blocks))
    }
}

/// Longitude strips of near-equal width, widened by `halo` on both sides,
/// times the observation times split into `n_time` ranges sharing endpoints.
pub fn decompose(
    grid: &SphereGrid,
    window: &AssimilationWindow,
    n_space: usize,
    n_time: usize,
    halo: usize,
    mu: f64,
) -> Result<DomainDecomposition> {
    if n_space == 0 || n_time == 0 {
        return Err(Error::Decomposition("need at least one space and one time subdomain".into()));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::Decomposition(format!("mu must be finite and nonnegative, got {mu}")));
    }
    let (nlon, nlat) = (grid.nlon, grid.nlat);
    if n_space > nlon {
        return Err(Error::Decomposition(format!("{n_space} strips on {nlon} longitudes")));
    }
    let halo = if n_space == 1 { 0 } else { halo };
    let base = nlon / n_space;
    let extra = nlon % n_space;
    let mut strips = Vec::with_capacity(n_space);
    let mut start = 0;
    for s in 0..n_space {
        let w = base + usize::from(s < extra);
        if n_space > 1 && w < 2 * halo + 1 {
            return Err(Error::Decomposition(format!(
                "strip of width {w} is thinner than 2*halo+1 = {}",
                2 * halo + 1
            )));
        }
        strips.push((start, w));
        start += w;
    }

    let nt = window.nt_obs;
    if n_time > 1 && nt < n_time + 1 {
        return Err(Error::Decomposition(format!(
            "{n_time} time subdomains need at least {} observation times, have {nt}",
            n_time + 1
        )));
    }
    let ranges: Vec<Range<usize>> = if n_time == 1 {
        std::iter::once(0..nt).collect()
    } else {
        let edge = |t: usize| t * (nt - 1) / n_time;
        (0..n_time).map(|t| edge(t)..edge(t + 1) + 1).collect()
    };

    let ncells = grid.ncells();
    let mut subdomains = Vec::with_capacity(n_space * n_time);
    for (t, range) in ranges.iter().enumerate() {
        for (s, &(lon_start, w)) in strips.iter().enumerate() {
            let lons: Vec<usize> = (0..w + 2 * halo)
                .map(|o| crate::wrap_lon(lon_start as isize - halo as isize + o as isize, nlon))
                .collect();
            let cells = (0..nlat).flat_map(|j| lons.iter().map(move |&i| i + j * nlon)).collect();
            subdomains.push(Subdomain {
                space_index: s,
                time_index: t,
                lon_start,
                core_width: w,
                halo,
                obs_range: range.clone(),
                cells,
                ncells,
            });
        }
    }

    let mut cover = vec![0u32; ncells];
    for sub in &subdomains {
        for &c in &sub.cells {
            cover[c] += 1;
        }
    }

    let mut overlaps = vec![Vec::new(); subdomains.len()];
    for (a, sa) in subdomains.iter().enumerate() {
        let mut pos_a = vec![usize::MAX; ncells];
        for (p, &c) in sa.cells.iter().enumerate() {
            pos_a[c] = p;
        }
        for (b, sb) in subdomains.iter().enumerate() {
            if a == b || sa.obs_range.end <= sb.obs_range.start || sb.obs_range.end <= sa.obs_range.start {
                continue;
            }
            let (mut lp, mut np) = (Vec::new(), Vec::new());
            for field in 0..3 {
                for (q, &c) in sb.cells.iter().enumerate() {
                    if pos_a[c] != usize::MAX {
                        lp.push(field * sa.cells.len() + pos_a[c]);
                        np.push(field * sb.cells.len() + q);
                    }
                }
            }
            if !lp.is_empty() {
                overlaps[a].push(Overlap { neighbor: b, local_pos: lp, neighbor_pos: np });
            }
        }
    }

    Ok(DomainDecomposition { nlon, nlat, nt_obs: nt, n_space, n_time, halo, mu, subdomains, cover, overlaps })
}

/// Average the local vectors over the cells each one covers.
pub fn extend_and_sum(locals: &[Vec<f64>], dd: &DomainDecomposition) -> Result<StateVector> {
    if locals.len() != dd.len() {
        return Err(Error::DimensionMismatch { expected: dd.len(), found: locals.len() });
    }
    let n = dd.nlon * dd.nlat;
    let mut sum = vec![0.0; 3 * n];
    for (sub, local) in dd.subdomains.iter().zip(locals) {
        if local.len() != sub.len() {
            return Err(Error::DimensionMismatch { expected: sub.len(), found: local.len() });
        }
        for (pos, idx) in sub.entry_indices().into_iter().enumerate() {
            sum[idx] += local[pos];
        }
    }
    for (idx, v) in sum.iter_mut().enumerate() {
        let c = dd.cover[idx % n];
        if c > 0 {
            *v /= f64::from(c);
        }
    }
    StateVector::from_vec(dd.nlon, dd.nlat, sum)
}

/// `mu * sum (x - trace)^2` over the traced entries, and its gradient.
pub fn overlap_penalty(x_local: &[f64], traces: &[Trace], mu: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; x_local.len()];
    if mu == 0.0 {
        return (0.0, grad);
    }
    let mut j = 0.0;
    for t in traces {
        for (&p, &v) in t.positions.iter().zip(&t.values) {
            let d = x_local[p] - v;
            j += mu * d * d;
            grad[p] += 2.0 * mu * d;
        }
    }
    (j, grad)
}

fn local_precon(sub: &Subdomain, x_b: &StateVector, nsvs: usize, rel_tol: f64) -> Result<TsvdPrecon> {
    Ok(BackgroundCov::from_background(&sub.restrict(x_b.as_slice())).tsvd(nsvs, rel_tol)?)
}

fn precon_params(bg: &Background) -> Result<(usize, f64)> {
    match bg {
        Background::Tsvd(p) => Ok((p.nsvs, p.rel_tol)),
        Background::BlockDiagonal(b) => b
            .first()
            .map(|b| (b.precon.nsvs, b.precon.rel_tol))
            .ok_or_else(|| Error::InvalidSetup("empty block background".into())),
    }
}

struct LocalProblem<'a> {
    setup: &'a AssimilationSetup,
    sub: &'a Subdomain,
    frame: &'a StateVector,
    filter: Option<Vec<f64>>,
    background: Option<(Vec<f64>, TsvdPrecon)>,
    traces: Vec<Trace>,
    mu: f64,
}

impl LocalProblem<'_> {
    fn evaluate(&self, x: &[f64], want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
        let mut full = self.frame.clone();
        self.sub.extend_into(x, full.as_mut_slice());
        let (jb, gb) = match &self.background {
            Some((xb, precon)) => Background::Tsvd(precon.clone()).term(&linalg::sub(x, xb), want_grad)?,
            None => (0.0, want_grad.then(|| vec![0.0; x.len()])),
        };
        let (jo, go) = self.setup.obs_term(&full, self.sub.obs_range.clone(), self.filter.as_deref(), want_grad)?;
        let (jp, gp) = overlap_penalty(x, &self.traces, self.mu);
        let j = combine_cost(jb, self.setup.lambda, jo) + jp;
        let g = match (gb, go) {
            (Some(gb), Some(go)) => {
                let mut g = combine_grad(gb, self.setup.lambda, &self.sub.restrict(go.as_slice()));
                for (gi, pi) in g.iter_mut().zip(gp) {
                    *gi += pi;
                }
                Some(g)
            }
            _ => None,
        };
        Ok((j, g))
    }
}

impl Objective for LocalProblem<'_> {
    fn cost(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x, false)?.0)
    }

    fn cost_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (j, g) = self.evaluate(x, true)?;
        Ok((j, g.expect("gradient requested")))
    }
}

#[derive(Debug, Clone)]
pub struct LocalSummary {
    pub subdomain: usize,
    pub iterations: usize,
    pub j_initial: f64,
    pub j_final: f64,
    pub stop: StopReason,
    pub log: Vec<IterationRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    /// Global functional at the accepted assembly.
    pub cost: f64,
    /// Relative change of the assembled iterate.
    pub change: f64,
    /// Fraction of the assembled update that was accepted.
    pub damping: f64,
}

#[derive(Debug, Clone)]
pub struct DdResult {
    pub result: DAResult,
    pub sweeps: Vec<SweepRecord>,
    /// Local solver summaries, one list per sweep.
    pub local: Vec<Vec<LocalSummary>>,
}

impl DomainDecomposition {
    fn local_problem<'a>(
        &'a self,
        setup: &'a AssimilationSetup,
        idx: usize,
        frame: &'a StateVector,
        previous: &[Vec<f64>],
    ) -> Result<LocalProblem<'a>> {
        let sub = &self.subdomains[idx];
        let background = if sub.time_index == 0 {
            let (nsvs, rel_tol) = precon_params(&setup.background)?;
            Some((sub.restrict(setup.x_b.as_slice()), local_precon(sub, &setup.x_b, nsvs, rel_tol)?))
        } else {
            None
        };
        let traces = self.overlaps[idx]
            .iter()
            .map(|o| Trace {
                positions: o.local_pos.clone(),
                values: o.neighbor_pos.iter().map(|&p| previous[o.neighbor][p]).collect(),
            })
            .collect();
        Ok(LocalProblem {
            setup,
            sub,
            frame,
            filter: (!sub.covers_grid()).then(|| sub.filter()),
            background,
            traces,
            mu: self.mu,
        })
    }

    /// Every local functional evaluated at the restriction of `x`, with
    /// traces taken from `x` itself.
    pub fn local_costs(&self, setup: &AssimilationSetup, x: &StateVector) -> Result<Vec<f64>> {
        self.check(setup)?;
        let previous: Vec<Vec<f64>> = self.subdomains.iter().map(|s| s.restrict(x.as_slice())).collect();
        (0..self.len()).map(|i| self.local_problem(setup, i, x, &previous)?.cost(&previous[i])).collect()
    }

    fn check(&self, setup: &AssimilationSetup) -> Result<()> {
        let g = setup.model.grid();
        if (g.nlon, g.nlat, setup.nt_obs()) != (self.nlon, self.nlat, self.nt_obs) {
            return Err(Error::Decomposition(format!(
                "decomposition is for a {}x{} grid with {} observation times",
                self.nlon, self.nlat, self.nt_obs
            )));
        }
        Ok(())
    }
}

/// Additive-Schwarz-style outer iteration over the local problems.
///
/// Each sweep solves all local problems from the current assembly, averages
/// their minimizers, and accepts the largest step toward that average (by
/// halving) that does not increase the global functional.
pub fn solve_dd(setup: &AssimilationSetup, dd: &DomainDecomposition, opts: &MinimizerOptions) -> Result<DdResult> {
    dd.check(setup)?;
    opts.validate()?;
    let mut x = setup.x_b.clone();
    let j_initial = setup.eval_cost(&x)?;
    let mut j_current = j_initial;
    let mut previous: Vec<Vec<f64>> = dd.subdomains.iter().map(|s| s.restrict(x.as_slice())).collect();
    let mut sweeps = Vec::new();
    let mut local_logs = Vec::new();
    let mut iterations = 0;
    let mut all_converged = true;
    let mut log = vec![IterationRecord { iter: 0, cost: j_initial, grad_norm: f64::NAN, step: 0.0 }];

    for sweep in 1..=MAX_SWEEPS {
        let raws: Vec<Result<RawResult>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..dd.len())
                .map(|i| {
                    let (x, previous) = (&x, &previous);
                    scope.spawn(move || {
                        let problem = dd.local_problem(setup, i, x, previous)?;
                        minimize_objective(&problem, &previous[i], opts)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("local solve panicked")).collect()
        });
        let raws = raws.into_iter().collect::<Result<Vec<_>>>()?;
        if dd.is_trivial() {
            let raw = raws.into_iter().next().expect("one subdomain");
            return Ok(trivial_result(raw, dd, &x));
        }

        let mut summaries = Vec::with_capacity(raws.len());
        let mut locals = Vec::with_capacity(raws.len());
        for (i, raw) in raws.into_iter().enumerate() {
            iterations += raw.iterations;
            all_converged &= raw.stop == StopReason::GradientTolerance;
            summaries.push(LocalSummary {
                subdomain: i,
                iterations: raw.iterations,
                j_initial: raw.f_initial,
                j_final: raw.f_final,
                stop: raw.stop,
                log: raw.log,
            });
            locals.push(raw.x);
        }
        local_logs.push(summaries);

        let assembled = extend_and_sum(&locals, dd)?;
        let delta = linalg::sub(assembled.as_slice(), x.as_slice());
        let mut tau = 1.0;
        let mut accepted = None;
        while tau >= MIN_DAMPING {
            let mut cand = x.clone();
            linalg::axpy(tau, &delta, cand.as_mut_slice());
            let jc = setup.eval_cost(&cand)?;
            if jc <= j_current {
                accepted = Some((cand, jc));
                break;
            }
            tau *= 0.5;
        }
        let (next, j_next, damping) = match accepted {
            Some((c, j)) => (c, j, tau),
            None => (x.clone(), j_current, 0.0),
        };
        let change = linalg::norm2(&linalg::sub(next.as_slice(), x.as_slice())) / x.norm2().max(f64::MIN_POSITIVE);
        x = next;
        j_current = j_next;
        previous = locals;
        sweeps.push(SweepRecord { sweep, cost: j_current, change, damping });
        log.push(IterationRecord { iter: sweep, cost: j_current, grad_norm: f64::NAN, step: damping });
        if change < SWEEP_TOL {
            break;
        }
    }

    let (j_final, g) = setup.cost_and_grad(&x)?;
    let grad_norm_final = g.norm2();
    let last = sweeps.last().map_or(0.0, |s| s.change);
    let converged = all_converged && last < SWEEP_TOL;
    let result = DAResult {
        x_da: x,
        iterations,
        j_initial,
        j_final,
        grad_norm_final,
        converged,
        stop: if converged { StopReason::GradientTolerance } else { StopReason::MaxIterations },
        log,
    };
    Ok(DdResult { result, sweeps, local: local_logs })
}

/// With one subdomain every operator is the identity, so the local result is the global one.
fn trivial_result(raw: RawResult, dd: &DomainDecomposition, x0: &StateVector) -> DdResult {
    let summary = LocalSummary {
        subdomain: 0,
        iterations: raw.iterations,
        j_initial: raw.f_initial,
        j_final: raw.f_final,
        stop: raw.stop,
        log: raw.log.clone(),
    };
    let change = linalg::norm2(&linalg::sub(&raw.x, x0.as_slice())) / x0.norm2().max(f64::MIN_POSITIVE);
    let sweep = SweepRecord { sweep: 1, cost: raw.f_final, change, damping: 1.0 };
    DdResult { result: DAResult::from_raw(raw, dd.nlon, dd.nlat), sweeps: vec![sweep], local: vec![vec![summary]] }
}
