use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swe4dvar::harness::{load_state, ExperimentConfig};

const SMALL: &str = r#"
nlon = 12
nlat = 8
dt_list = [50.0, 100.0]
ntobs_list = [1, 3]
nsvs_list = [1, 2]
problems = [1, 2]
set2_ntobs = 3
set3_ntobs = [2, 3]
trend_nsvs = 1

[minimizer]
max_iter = 20
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swe4dvar"))
}

fn run_in(root: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.env_remove("SWE4DVAR_OUT").arg("--out-root").arg(root);
    if let Some(text) = config {
        let path = root.join("config.toml");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.args(args).output().unwrap()
}

/// Relative path to contents of every file under `root`.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                out.insert(p.strip_prefix(base).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn assert_reproducible(args: &[&str]) {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let oa = run_in(a.path(), Some(SMALL), args);
    let ob = run_in(b.path(), Some(SMALL), args);
    assert!(oa.status.success(), "{args:?}: {}", String::from_utf8_lossy(&oa.stderr));
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert!(sa.len() > 1, "{args:?} wrote nothing");
    assert_eq!(sa, sb, "{args:?} output differs between runs");
    // printed paths contain the temporary directory, everything else must agree
    let strip = |o: &Output, root: &Path| String::from_utf8_lossy(&o.stdout).replace(&root.display().to_string(), "");
    assert_eq!(strip(&oa, a.path()), strip(&ob, b.path()));
}

#[test]
fn every_subcommand_is_reproducible() {
    assert_reproducible(&["run-model", "--steps", "5"]);
    assert_reproducible(&["gen-obs", "--problem", "4", "--ntobs", "3"]);
    assert_reproducible(&["assimilate", "--problem", "2", "--ntobs", "3"]);
    assert_reproducible(&["assimilate", "--ntobs", "3", "--nsub-space", "2", "--nsub-time", "2", "--halo", "1"]);
    assert_reproducible(&["sweep-dt"]);
    assert_reproducible(&["tests-set1"]);
    assert_reproducible(&["trends", "--mode", "set3"]);
}

#[test]
fn verify_adjoint_reports_a_passing_dot_product_test() {
    let dir = tempfile::tempdir().unwrap();
    for variant in ["corrected", "as-printed"] {
        let o = run_in(
            dir.path(),
            Some(SMALL),
            &["verify-adjoint", "--variant", variant, "--steps", "10", "--base-scale", "1e-3"],
        );
        let out = String::from_utf8_lossy(&o.stdout);
        assert!(o.status.success(), "{variant}: {out}");
        assert!(out.contains("adjoint identity within 1e-12: true"));
    }
}

#[test]
fn exit_codes_distinguish_errors_from_failed_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), Some(SMALL), &["gen-obs", "--problem", "7"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run_in(dir.path(), Some("bogus_key = 1\n"), &["run-model"]);
    assert_eq!(o.status.code(), Some(2));
    // a shrinking step list cannot show growing drift
    let cfg = SMALL.replace("dt_list = [50.0, 100.0]", "dt_list = [100.0, 50.0]");
    let o = run_in(dir.path(), Some(&cfg), &["sweep-dt"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run_in(dir.path(), Some(SMALL), &["sweep-dt"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn model_dump_round_trips_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), Some(SMALL), &["run-model", "--steps", "3", "--out", "x3.swe1"]);
    assert!(o.status.success());
    let x = load_state(&dir.path().join("x3.swe1")).unwrap();
    let cfg = ExperimentConfig::from_toml_str(SMALL).unwrap();
    let m = cfg.model().unwrap();
    let want = m.integrate_steps(&m.synth_initial(cfg.seed, &cfg.field), 3).unwrap();
    assert_eq!(x, want);

    let input = dir.path().join("x3.swe1");
    let o = run_in(
        dir.path(),
        None,
        &["export-image", "--input", input.to_str().unwrap(), "--field", "h", "--out", "h.pgm"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pgm = std::fs::read(dir.path().join("h.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n"));
    assert!(pgm.len() > 12 * 8);
    let header = String::from_utf8_lossy(&pgm[..pgm.len() - 12 * 8]).to_string();
    assert!(header.contains("12 8\n255\n"), "{header}");
}

#[test]
fn gen_obs_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), Some(SMALL), &["gen-obs", "--problem", "2", "--ntobs", "3", "--seed", "5"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("obs/manifest.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines,
        ["step,file,problem,seed", "28,xb.swe1,2,5", "28,obs_01.swe1,2,5", "29,obs_02.swe1,2,5", "30,obs_03.swe1,2,5"]
    );
    let obs = load_state(&dir.path().join("obs/obs_02.swe1")).unwrap();
    assert!(obs.as_slice().iter().enumerate().all(|(i, &v)| i % 5 == 0 || v == 0.0));
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("SWE4DVAR_OUT", dir.path())
        .args(["run-model", "--nlon", "12", "--nlat", "8", "--steps", "1"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("model_final.swe1").exists());
}
