//! Reproduction runs: drift versus time step, the error tables, the
//! singular-value table and the misfit trend series.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::covariance::BackgroundCov;
use crate::observations::{generate_window_data, AssimilationWindow, Problem, WindowData};
use crate::{linalg, minimize, AssimilationSetup, Error, Result, StateVector, SweModel};

use super::ExperimentConfig;

/// Marker written for runs whose truncated SVD was rejected.
pub const FAILED: &str = "−";

/// Tolerance of the per-cell descent check on the error metric.
pub const ERR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftRow {
    pub dt: f64,
    pub rel_diff: f64,
}

/// `|M^msteps(x0) - x0| / |x0|` for every configured time step.
pub fn run_dt_sweep(config: &ExperimentConfig) -> Result<Vec<DriftRow>> {
    let grid = config.grid()?;
    let x0 = crate::model::synth_initial(&grid, config.seed, &config.field);
    config
        .dt_list
        .iter()
        .map(|&dt| {
            if dt == 0.0 {
                return Ok(DriftRow { dt, rel_diff: 0.0 });
            }
            let model = config.model_with_dt(dt)?;
            let x = model.integrate(&x0)?;
            let d = linalg::sub(x.as_slice(), x0.as_slice());
            Ok(DriftRow { dt, rel_diff: linalg::norm2(&d) / x0.norm2() })
        })
        .collect()
}

pub fn write_drift_csv<W: Write>(rows: &[DriftRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["dt", "rel_diff"])?;
    for r in rows {
        out.write_record([r.dt.to_string(), r.rel_diff.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Model and window data of one experiment cell.
pub fn window_data(
    config: &ExperimentConfig,
    problem: Problem,
    dt: f64,
    nt_obs: usize,
) -> Result<(SweModel, WindowData)> {
    let model = config.model_with_dt(dt)?;
    let x0 = model.synth_initial(config.seed, &config.field);
    let window = AssimilationWindow::ending_at(nt_obs, config.model.msteps, dt)?;
    let data = generate_window_data(&model, &x0, window, problem, config.seed)?;
    Ok((model, data))
}

/// `|H M^n(x) - v_n| / |v_n|` for `n = 0..steps`.
pub fn misfit_series(setup: &AssimilationSetup, x: &StateVector, steps: usize) -> Result<Vec<f64>> {
    let steps = steps.min(setup.nt_obs());
    if steps == 0 {
        return Ok(Vec::new());
    }
    let traj = setup.model.trajectory(x, steps - 1)?;
    Ok(traj
        .iter()
        .zip(&setup.obs.obs)
        .map(|(state, obs)| {
            let r = linalg::sub(&setup.operator.apply(state.as_slice()), obs.as_slice());
            linalg::norm2(&r) / obs.norm2()
        })
        .collect())
}

/// Relative misfits of the background and of `x_da` against the first
/// observation vector.
pub fn compute_err_metrics(x_da: &StateVector, setup: &AssimilationSetup) -> Result<(f64, f64)> {
    let err = |x: &StateVector| -> Result<f64> { Ok(misfit_series(setup, x, 1)?[0]) };
    Ok((err(&setup.x_b)?, err(x_da)?))
}

/// One cell of the error tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrRecord {
    pub problem: u8,
    pub dt: f64,
    pub ntobs: usize,
    pub nsvs: usize,
    pub err_b: f64,
    /// `None` when the truncated SVD was rejected.
    pub err_da: Option<f64>,
    pub j_b: Option<f64>,
    pub j_da: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
}

impl ErrRecord {
    pub fn failed(&self) -> bool {
        self.err_da.is_none()
    }

    /// Descent, read off either the functional or the error metric.
    /// Failed cells have nothing to check.
    pub fn descent_ok(&self) -> bool {
        match (self.j_b, self.j_da, self.err_da) {
            (Some(jb), Some(jda), Some(eda)) => jda <= jb || eda <= self.err_b * (1.0 + ERR_SLACK),
            _ => true,
        }
    }
}

pub const RECORD_HEADER: [&str; 10] =
    ["problem", "dt", "ntobs", "nsvs", "err_b", "err_da", "j_b", "j_da", "iterations", "converged"];

fn cell<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| FAILED.to_string(), |v| v.to_string())
}

fn parse<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Format(format!("bad {what} value {s:?}")))
}

fn parse_cell<T: FromStr>(s: &str, what: &str) -> Result<Option<T>> {
    if s == FAILED {
        Ok(None)
    } else {
        parse(s, what).map(Some)
    }
}

pub fn write_records<W: Write>(records: &[ErrRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RECORD_HEADER)?;
    for r in records {
        out.write_record([
            r.problem.to_string(),
            r.dt.to_string(),
            r.ntobs.to_string(),
            r.nsvs.to_string(),
            r.err_b.to_string(),
            cell(r.err_da),
            cell(r.j_b),
            cell(r.j_da),
            cell(r.iterations),
            cell(r.converged),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<ErrRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    if rdr.headers()?.iter().ne(RECORD_HEADER) {
        return Err(Error::Format("unexpected error-record header".into()));
    }
    rdr.records()
        .map(|row| {
            let row = row?;
            if row.len() != RECORD_HEADER.len() {
                return Err(Error::Format(format!("error record with {} fields", row.len())));
            }
            Ok(ErrRecord {
                problem: parse(&row[0], "problem")?,
                dt: parse(&row[1], "dt")?,
                ntobs: parse(&row[2], "ntobs")?,
                nsvs: parse(&row[3], "nsvs")?,
                err_b: parse(&row[4], "err_b")?,
                err_da: parse_cell(&row[5], "err_da")?,
                j_b: parse_cell(&row[6], "j_b")?,
                j_da: parse_cell(&row[7], "j_da")?,
                iterations: parse_cell(&row[8], "iterations")?,
                converged: parse_cell(&row[9], "converged")?,
            })
        })
        .collect()
}

/// One problem's records laid out as a printed error table: per time step
/// an `err_b` row, then one `err_da` row per nSVs, columns over nt_obs.
pub fn write_table<W: Write>(config: &ExperimentConfig, problem: u8, records: &[ErrRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["dt".to_string(), "row".to_string()];
    header.extend(config.ntobs_list.iter().map(|n| format!("ntobs={n}")));
    out.write_record(&header)?;
    let find = |dt: f64, nt: usize, nsvs: usize| {
        records.iter().find(|r| r.problem == problem && r.dt == dt && r.ntobs == nt && r.nsvs == nsvs)
    };
    for &dt in &config.dt_list {
        let first = config.nsvs_list.first().copied().unwrap_or(1);
        let mut row = vec![dt.to_string(), "err_b".to_string()];
        row.extend(config.ntobs_list.iter().map(|&nt| cell(find(dt, nt, first).map(|r| r.err_b))));
        out.write_record(&row)?;
        for &nsvs in &config.nsvs_list {
            let mut row = vec![dt.to_string(), format!("nsvs={nsvs}")];
            row.extend(config.ntobs_list.iter().map(|&nt| cell(find(dt, nt, nsvs).and_then(|r| r.err_da))));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Run `f` over `jobs` on a few threads; results keep the job order.
fn parallel_map<T: Sync, R: Send>(jobs: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let r = f(&jobs[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("result slots").into_iter().map(|r| r.expect("every job ran")).collect()
}

/// All (problem, dt, nt_obs, nSVs) cells of the error tables.
pub fn run_tests_set1(config: &ExperimentConfig) -> Result<Vec<ErrRecord>> {
    let mut jobs = Vec::new();
    for problem in config.problem_list()? {
        for &dt in &config.dt_list {
            for &nt in &config.ntobs_list {
                jobs.push((problem, dt, nt));
            }
        }
    }
    let per_job = parallel_map(&jobs, |&(problem, dt, nt)| -> Result<Vec<ErrRecord>> {
        let (model, data) = window_data(config, problem, dt, nt)?;
        config.nsvs_list.iter().map(|&nsvs| run_cell(config, &model, &data, problem, dt, nt, nsvs)).collect()
    });
    let mut records = Vec::new();
    for r in per_job {
        records.extend(r?);
    }
    Ok(records)
}

fn run_cell(
    config: &ExperimentConfig,
    model: &SweModel,
    data: &WindowData,
    problem: Problem,
    dt: f64,
    ntobs: usize,
    nsvs: usize,
) -> Result<ErrRecord> {
    let rec = |err_b| ErrRecord {
        problem: problem.id(),
        dt,
        ntobs,
        nsvs,
        err_b,
        err_da: None,
        j_b: None,
        j_da: None,
        iterations: None,
        converged: None,
    };
    match AssimilationSetup::from_window(model.clone(), data, nsvs, config.rel_tol, config.lambda) {
        Err(Error::Tsvd(_)) => {
            let err_b = background_err(data)?;
            Ok(rec(err_b))
        }
        Err(e) => Err(e),
        Ok(setup) => {
            let res = minimize(&setup, &config.minimizer)?;
            let (err_b, err_da) = compute_err_metrics(&res.x_da, &setup)?;
            Ok(ErrRecord {
                err_da: Some(err_da),
                j_b: Some(res.j_initial),
                j_da: Some(res.j_final),
                iterations: Some(res.iterations),
                converged: Some(res.converged),
                ..rec(err_b)
            })
        }
    }
}

fn background_err(data: &WindowData) -> Result<f64> {
    let first = data.observations.obs.first().ok_or_else(|| Error::InvalidSetup("empty observation set".into()))?;
    let r = linalg::sub(&data.operator.apply(data.x_b.as_slice()), first.as_slice());
    Ok(linalg::norm2(&r) / first.norm2())
}

/// Leading singular values of the background covariance for each time step,
/// as rows `(dt, i, S_i)`.
pub fn singular_value_table(config: &ExperimentConfig) -> Result<Vec<(f64, usize, f64)>> {
    let count = config.nsvs_list.iter().copied().max().unwrap_or(1);
    let problem = config.problem_list()?.first().copied().unwrap_or(Problem::ALL[0]);
    let mut rows = Vec::new();
    for &dt in &config.dt_list {
        let (_, data) = window_data(config, problem, dt, config.sv_ntobs)?;
        let s = BackgroundCov::from(&data.x_b).singular_values(count);
        rows.extend(s.into_iter().enumerate().map(|(i, v)| (dt, i, v)));
    }
    Ok(rows)
}

pub fn write_singular_values<W: Write>(rows: &[(f64, usize, f64)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["dt", "i", "s"])?;
    for (dt, i, s) in rows {
        out.write_record([dt.to_string(), i.to_string(), s.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendMode {
    /// Fixed window length, every problem and time step.
    Set2,
    /// Several window lengths side by side.
    Set3,
}

impl FromStr for TrendMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "set2" => Ok(TrendMode::Set2),
            "set3" => Ok(TrendMode::Set3),
            _ => Err(Error::Config(format!("unknown trend mode {s:?} (expected set2 or set3)"))),
        }
    }
}

impl fmt::Display for TrendMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrendMode::Set2 => "set2",
            TrendMode::Set3 => "set3",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendSeries {
    pub mode: TrendMode,
    pub problem: u8,
    pub dt: f64,
    pub ntobs: usize,
    pub nsvs: usize,
    /// Misfit of the background trajectory at `n = 0..ntobs`.
    pub err_b: Vec<f64>,
    /// Same for the analysis; `None` if the truncated SVD was rejected.
    pub err_da: Option<Vec<f64>>,
}

impl TrendSeries {
    pub fn file_name(&self) -> String {
        format!("{}_p{}_dt{}_ntobs{}.csv", self.mode, self.problem, self.dt, self.ntobs)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "err_b", "err_da"])?;
        for (n, b) in self.err_b.iter().enumerate() {
            let da = self.err_da.as_ref().map(|d| d[n]);
            out.write_record([n.to_string(), b.to_string(), cell(da)])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn run_trend_series(config: &ExperimentConfig, mode: TrendMode) -> Result<Vec<TrendSeries>> {
    let ntobs: Vec<usize> = match mode {
        TrendMode::Set2 => vec![config.set2_ntobs],
        TrendMode::Set3 => config.set3_ntobs.clone(),
    };
    let mut jobs = Vec::new();
    for problem in config.problem_list()? {
        for &dt in &config.dt_list {
            for &nt in &ntobs {
                jobs.push((problem, dt, nt));
            }
        }
    }
    parallel_map(&jobs, |&(problem, dt, nt)| {
        let (model, data) = window_data(config, problem, dt, nt)?;
        let nsvs = config.trend_nsvs;
        let series = |setup: &AssimilationSetup, x: &StateVector| misfit_series(setup, x, nt);
        let (err_b, err_da) =
            match AssimilationSetup::from_window(model.clone(), &data, nsvs, config.rel_tol, config.lambda) {
                Ok(setup) => {
                    let res = minimize(&setup, &config.minimizer)?;
                    (series(&setup, &setup.x_b)?, Some(series(&setup, &res.x_da)?))
                }
                Err(Error::Tsvd(_)) => {
                    // The background curve does not depend on the preconditioner.
                    let setup = AssimilationSetup::from_window(model, &data, 1, 0.0, config.lambda)?;
                    (series(&setup, &setup.x_b)?, None)
                }
                Err(e) => return Err(e),
            };
        Ok(TrendSeries { mode, problem: problem.id(), dt, ntobs: nt, nsvs, err_b, err_da })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            nlon: 8,
            nlat: 6,
            model: crate::ModelParams { p: 3, q: 2, ..Default::default() },
            dt_list: vec![50.0],
            ntobs_list: vec![1, 2],
            nsvs_list: vec![1, 2],
            problems: vec![1, 2],
            minimizer: crate::MinimizerOptions { max_iter: 20, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn zero_step_has_no_drift() {
        let c = ExperimentConfig { dt_list: vec![0.0, 50.0], ..small() };
        let rows = run_dt_sweep(&c).unwrap();
        assert_eq!(rows[0].rel_diff, 0.0);
        assert!(rows[1].rel_diff > 0.0);
    }

    #[test]
    fn set1_cells_and_failures() {
        let c = small();
        let recs = run_tests_set1(&c).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 2);
        for r in &recs {
            assert_eq!(r.failed(), r.nsvs >= 2, "{r:?}");
            assert!(r.descent_ok());
            assert!(r.err_b >= 0.0);
        }
        let mut buf = Vec::new();
        write_records(&recs, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().contains(FAILED));
        assert_eq!(read_records(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn table_layout() {
        let c = small();
        let recs = run_tests_set1(&c).unwrap();
        let mut buf = Vec::new();
        write_table(&c, 1, &recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "dt,row,ntobs=1,ntobs=2");
        assert!(lines[1].starts_with("50,err_b,"));
        assert!(lines[3].ends_with(&format!("{FAILED},{FAILED}")));
        assert_eq!(lines.len(), 1 + 3);
    }

    #[test]
    fn err_metrics_at_background() {
        let c = small();
        let (model, data) = window_data(&c, Problem::new(1).unwrap(), 50.0, 2).unwrap();
        let setup = AssimilationSetup::from_window(model, &data, 1, 0.0, 1.0).unwrap();
        let (b, da) = compute_err_metrics(&setup.x_b, &setup).unwrap();
        assert_eq!(b, da);
        let mut exact = setup.clone();
        exact.obs.obs[0] = exact.x_b.clone();
        assert_eq!(compute_err_metrics(&exact.x_b, &exact).unwrap().0, 0.0);
    }

    #[test]
    fn trends_start_at_err_metrics() {
        let c = ExperimentConfig { trend_nsvs: 1, set2_ntobs: 3, problems: vec![3], ..small() };
        let s = run_trend_series(&c, TrendMode::Set2).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].err_b.len(), 3);
        let da = s[0].err_da.as_ref().unwrap();
        assert_eq!(da.len(), 3);
        let (model, data) = window_data(&c, Problem::new(3).unwrap(), 50.0, 3).unwrap();
        let setup = AssimilationSetup::from_window(model, &data, 1, c.rel_tol, 1.0).unwrap();
        let res = minimize(&setup, &c.minimizer).unwrap();
        let (b, d) = compute_err_metrics(&res.x_da, &setup).unwrap();
        assert_eq!((s[0].err_b[0], da[0]), (b, d));
        let failed = run_trend_series(&ExperimentConfig { trend_nsvs: 4, ..c }, TrendMode::Set2).unwrap();
        assert!(failed[0].err_da.is_none());
    }
}
