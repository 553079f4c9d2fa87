use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use swe4dvar::dd::{decompose, solve_dd};
use swe4dvar::harness::experiments::{
    window_data, write_drift_csv, write_records, write_singular_values, write_table, TrendMode,
};
use swe4dvar::harness::{self, ExperimentConfig};
use swe4dvar::observations::Problem;
use swe4dvar::{minimize, AssimilationSetup, Field, Result, StateVector, StencilVariant, SweModel};

#[derive(Parser)]
#[command(name = "swe4dvar", version, about = "4D-Var assimilation for the shallow-water equations on the sphere")]
struct Cli {
    /// TOML experiment configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = "SWE4DVAR_OUT", default_value = ".")]
    out_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    nlon: Option<usize>,
    #[arg(long)]
    nlat: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<StencilVariant>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct Solver {
    #[arg(long)]
    nsvs: Option<usize>,
    /// Truncation threshold on S_{n-1}/S_0.
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gtol: Option<f64>,
    #[arg(long)]
    maxiter: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the model from the synthetic initial state.
    RunModel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value = "model_final.swe1")]
        out: PathBuf,
    },
    /// Write the background and observations of one assimilation window.
    GenObs {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        problem: u8,
        #[arg(long, default_value_t = 2)]
        ntobs: usize,
        #[arg(long, default_value = "obs")]
        out_dir: PathBuf,
    },
    /// Minimize the functional for one window, optionally decomposed.
    Assimilate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        #[arg(long, default_value_t = 1)]
        problem: u8,
        #[arg(long, default_value_t = 2)]
        ntobs: usize,
        #[arg(long, default_value = "x_da.swe1")]
        out: PathBuf,
        /// Iteration log (JSON lines); defaults to the output path with a .jsonl extension.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        nsub_space: Option<usize>,
        #[arg(long)]
        nsub_time: Option<usize>,
        #[arg(long)]
        halo: Option<usize>,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Dot-product and Taylor tests of the tangent-linear and adjoint models.
    VerifyAdjoint {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        /// Linearize about a random state of this size instead of the synthetic initial state.
        #[arg(long)]
        base_scale: Option<f64>,
    },
    /// Relative drift of the model over the configured time steps.
    SweepDt {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "drift.csv")]
        out: PathBuf,
    },
    /// Error tables and singular values over every configured cell.
    TestsSet1 {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        #[arg(long, default_value = "set1")]
        out_dir: PathBuf,
    },
    /// Misfit trends along the window.
    Trends {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        #[arg(long, default_value = "set2")]
        mode: TrendMode,
        #[arg(long, default_value = "trends")]
        out_dir: PathBuf,
    },
    /// Write one field of a SWE1 dump as a PGM image.
    ExportImage {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "h")]
        field: Field,
        #[arg(long)]
        out: PathBuf,
    },
}

fn apply_common(cfg: &mut ExperimentConfig, c: &Common) {
    if let Some(v) = c.nlon {
        cfg.nlon = v;
    }
    if let Some(v) = c.nlat {
        cfg.nlat = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.variant {
        cfg.variant = v;
    }
    if let Some(v) = c.dt {
        cfg.model.dt = v;
        cfg.dt_list = vec![v];
    }
    if let Some(v) = c.alpha {
        cfg.model.alpha = v;
    }
    if let Some(v) = c.p {
        cfg.model.p = v;
    }
    if let Some(v) = c.q {
        cfg.model.q = v;
    }
}

fn apply_solver(cfg: &mut ExperimentConfig, s: &Solver) {
    if let Some(v) = s.nsvs {
        cfg.nsvs_list = vec![v];
        cfg.trend_nsvs = v;
    }
    if let Some(v) = s.rtol {
        cfg.rel_tol = v;
    }
    if let Some(v) = s.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = s.gtol {
        cfg.minimizer.gtol = v;
    }
    if let Some(v) = s.maxiter {
        cfg.minimizer.max_iter = v;
    }
}

struct Ctx {
    root: PathBuf,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    fn dir(&self, p: &Path) -> Result<PathBuf> {
        let d = self.path(p);
        std::fs::create_dir_all(&d)?;
        Ok(d)
    }

    fn create(&self, p: &Path) -> Result<BufWriter<File>> {
        let p = self.path(p);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok(BufWriter::new(File::create(p)?))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checked properties failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the command ran but a property it checks did not hold.
fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let ctx = Ctx { root: cli.out_root };
    match cli.command {
        Command::RunModel { common, steps, out } => {
            apply_common(&mut cfg, &common);
            let model = cfg.model()?;
            let x0 = model.synth_initial(cfg.seed, &cfg.field);
            let x = model.integrate_steps(&x0, steps.unwrap_or(cfg.model.msteps))?;
            let path = ctx.path(&out);
            harness::dump_state(&x, &path)?;
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::GenObs { common, problem, ntobs, out_dir } => {
            apply_common(&mut cfg, &common);
            let problem = Problem::new(problem)?;
            let (_, data) = window_data(&cfg, problem, cfg.model.dt, ntobs)?;
            let dir = ctx.dir(&out_dir)?;
            let mut manifest = csv::Writer::from_writer(ctx.create(&dir.join("manifest.csv"))?);
            manifest.write_record(["step", "file", "problem", "seed"])?;
            let w = data.window;
            harness::dump_state(&data.x_b, &dir.join("xb.swe1"))?;
            manifest.write_record([
                w.base_step().to_string(),
                "xb.swe1".into(),
                problem.to_string(),
                cfg.seed.to_string(),
            ])?;
            for (n, v) in data.observations.obs.iter().enumerate() {
                let name = format!("obs_{:02}.swe1", n + 1);
                harness::dump_state(v, &dir.join(&name))?;
                manifest.write_record([
                    w.obs_step(n + 1).to_string(),
                    name,
                    problem.to_string(),
                    cfg.seed.to_string(),
                ])?;
            }
            manifest.flush()?;
            println!("wrote {} observation files to {}", data.observations.len(), dir.display());
            Ok(true)
        }
        Command::Assimilate { common, solver, problem, ntobs, out, log, nsub_space, nsub_time, halo, mu } => {
            apply_common(&mut cfg, &common);
            apply_solver(&mut cfg, &solver);
            let dd_cfg = swe4dvar::harness::DdConfig {
                n_space: nsub_space.unwrap_or(cfg.dd.n_space),
                n_time: nsub_time.unwrap_or(cfg.dd.n_time),
                halo: halo.unwrap_or(cfg.dd.halo),
                mu: mu.unwrap_or(cfg.dd.mu),
            };
            assimilate(&ctx, &cfg, Problem::new(problem)?, ntobs, &out, log.as_deref(), dd_cfg)
        }
        Command::VerifyAdjoint { common, steps, pairs, base_scale } => {
            apply_common(&mut cfg, &common);
            verify_adjoint(&cfg, steps, pairs, base_scale)
        }
        Command::SweepDt { common, out } => {
            apply_common(&mut cfg, &common);
            if let Some(dt) = common.dt {
                cfg.dt_list = vec![dt];
            }
            let rows = harness::run_dt_sweep(&cfg)?;
            write_drift_csv(&rows, ctx.create(&out)?)?;
            let mut ok = true;
            for (k, r) in rows.iter().enumerate() {
                let ratio = k.checked_sub(1).map(|p| r.rel_diff / rows[p].rel_diff);
                match ratio {
                    Some(q) => println!("dt={:<6} rel_diff={:.6e} ratio={q:.3}", r.dt, r.rel_diff),
                    None => println!("dt={:<6} rel_diff={:.6e}", r.dt, r.rel_diff),
                }
                if k > 0 && r.rel_diff.partial_cmp(&rows[k - 1].rel_diff) != Some(std::cmp::Ordering::Greater) {
                    ok = false;
                }
            }
            println!("monotone: {ok}");
            Ok(ok)
        }
        Command::TestsSet1 { common, solver, out_dir } => {
            apply_common(&mut cfg, &common);
            apply_solver(&mut cfg, &solver);
            let dir = ctx.dir(&out_dir)?;
            let records = harness::run_tests_set1(&cfg)?;
            write_records(&records, ctx.create(&dir.join("records.csv"))?)?;
            for &p in &cfg.problems {
                write_table(&cfg, p, &records, ctx.create(&dir.join(format!("table_problem{p}.csv")))?)?;
            }
            let sv = harness::singular_value_table(&cfg)?;
            write_singular_values(&sv, ctx.create(&dir.join("singular_values.csv"))?)?;
            let failed = records.iter().filter(|r| r.failed()).count();
            let bad: Vec<_> = records.iter().filter(|r| !r.descent_ok()).collect();
            println!("{} cells, {failed} with rejected truncated SVD, {} descent violations", records.len(), bad.len());
            for r in &bad {
                println!("  descent violated: problem {} dt {} ntobs {} nsvs {}", r.problem, r.dt, r.ntobs, r.nsvs);
            }
            Ok(bad.is_empty())
        }
        Command::Trends { common, solver, mode, out_dir } => {
            apply_common(&mut cfg, &common);
            apply_solver(&mut cfg, &solver);
            let dir = ctx.dir(&out_dir)?;
            let series = harness::run_trend_series(&cfg, mode)?;
            let mut ok = true;
            for s in &series {
                s.write_csv(ctx.create(&dir.join(s.file_name()))?)?;
                ok &= s.err_b.len() == s.ntobs && s.err_da.as_ref().is_none_or(|d| d.len() == s.ntobs);
                let first = s.err_da.as_ref().map(|d| d[0]);
                println!(
                    "{} problem {} dt {} ntobs {}: err_b[0]={:.6e} err_da[0]={}",
                    s.mode,
                    s.problem,
                    s.dt,
                    s.ntobs,
                    s.err_b[0],
                    first.map_or("−".to_string(), |v| format!("{v:.6e}"))
                );
            }
            Ok(ok)
        }
        Command::ExportImage { input, field, out } => {
            let x = harness::load_state(&input)?;
            let path = ctx.path(&out);
            harness::export_field_image(&x, field, &path)?;
            println!("wrote {}", path.display());
            Ok(true)
        }
    }
}

fn write_log(
    w: &mut impl Write,
    log: &[swe4dvar::minimize::IterationRecord],
    extra: Option<(usize, usize)>,
) -> Result<()> {
    for r in log {
        let mut obj = serde_json::json!({ "iter": r.iter, "J": r.cost, "grad_norm": r.grad_norm, "step": r.step });
        if let Some((sweep, sub)) = extra {
            obj["sweep"] = sweep.into();
            obj["subdomain"] = sub.into();
        }
        writeln!(w, "{obj}")?;
    }
    Ok(())
}

fn assimilate(
    ctx: &Ctx,
    cfg: &ExperimentConfig,
    problem: Problem,
    ntobs: usize,
    out: &Path,
    log: Option<&Path>,
    dd_cfg: swe4dvar::harness::DdConfig,
) -> Result<bool> {
    let (model, data) = window_data(cfg, problem, cfg.model.dt, ntobs)?;
    let nsvs = cfg.nsvs_list.first().copied().unwrap_or(1);
    let setup = AssimilationSetup::from_window(model, &data, nsvs, cfg.rel_tol, cfg.lambda)?;
    let log_path = log.map_or_else(|| out.with_extension("jsonl"), Path::to_path_buf);
    let mut log_w = ctx.create(&log_path)?;
    let dd = decompose(setup.model.grid(), &data.window, dd_cfg.n_space, dd_cfg.n_time, dd_cfg.halo, dd_cfg.mu)?;
    let res = if dd.is_trivial() {
        let res = minimize(&setup, &cfg.minimizer)?;
        write_log(&mut log_w, &res.log, None)?;
        res
    } else {
        let out = solve_dd(&setup, &dd, &cfg.minimizer)?;
        for (sweep, locals) in out.local.iter().enumerate() {
            for l in locals {
                write_log(&mut log_w, &l.log, Some((sweep + 1, l.subdomain)))?;
            }
        }
        for s in &out.sweeps {
            println!("sweep {}: J={:.12e} change={:.3e} damping={}", s.sweep, s.cost, s.change, s.damping);
        }
        out.result
    };
    log_w.flush()?;
    harness::dump_state(&res.x_da, &ctx.path(out))?;
    let (err_b, err_da) = harness::compute_err_metrics(&res.x_da, &setup)?;
    println!(
        "J(x_b)={:.12e} J(x_DA)={:.12e} iterations={} converged={} err_b={err_b:.12e} err_da={err_da:.12e}",
        res.j_initial, res.j_final, res.iterations, res.converged
    );
    Ok(res.j_final <= res.j_initial)
}

fn verify_adjoint(cfg: &ExperimentConfig, steps: usize, pairs: usize, base_scale: Option<f64>) -> Result<bool> {
    let model: SweModel = cfg.model()?;
    let grid = model.grid().clone();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut random = |scale: f64| -> StateVector {
        let v = (0..grid.state_len()).map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        StateVector::from_vec(grid.nlon, grid.nlat, v).expect("grid-sized vector")
    };
    let base = match base_scale {
        Some(s) => random(s),
        None => model.synth_initial(cfg.seed, &cfg.field),
    };
    let lin = model.linearize(&base, steps)?;
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let (d, y) = (random(1.0), random(1.0));
        let md = lin.tlm(&d)?;
        let ay = lin.adjoint(&y)?;
        let rel = (md.dot(&y) - d.dot(&ay)).abs() / (md.norm2() * y.norm2());
        worst = worst.max(rel);
    }
    println!("dot-product test: {pairs} pairs over {steps} steps, worst relative residual {worst:.3e}");

    let d = random(base.norm2() / (grid.state_len() as f64).sqrt() * 1e-2);
    let x1 = model.integrate_steps(&base, steps)?;
    let md = lin.tlm(&d)?;
    let mut prev: Option<f64> = None;
    println!("Taylor test: |M(x + e d) - M(x) - e M'd| / |e M'd|");
    for k in 0..6 {
        let eps = 10f64.powi(-k);
        let mut xe = base.clone();
        xe.axpy(eps, &d);
        let mut r = model.integrate_steps(&xe, steps)?;
        r.axpy(-1.0, &x1);
        r.axpy(-eps, &md);
        let res = r.norm2() / (eps * md.norm2());
        match prev {
            Some(p) => println!("  eps={eps:.0e} residual={res:.3e} ratio={:.2}", p / res),
            None => println!("  eps={eps:.0e} residual={res:.3e}"),
        }
        prev = Some(res);
    }
    let ok = worst <= 1e-12;
    println!("adjoint identity within 1e-12: {ok}");
    Ok(ok)
}
