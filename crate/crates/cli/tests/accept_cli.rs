use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use forkfluid::{execute, Command, ExperimentConfig, Overrides, RunOptions};
use sha2::{Digest, Sha256};

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_forkfluid"))
}

fn sha(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn fluid_output_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fluid.csv");
    let st = bin()
        .args(["fluid", "--config"])
        .arg(manifest("tests/configs/fluid_a1_b10.toml"))
        .arg("--out")
        .arg(&out)
        .arg("-q")
        .status()
        .unwrap();
    assert!(st.success());
    let got = std::fs::read_to_string(&out).unwrap();
    let want = std::fs::read_to_string(manifest("tests/golden/fluid_a1_b10.csv")).unwrap();
    assert_eq!(got, want);
    assert!(!got.contains('\r'));
    // plateau alpha / (2 beta) from t = alpha / (2 beta^2) on
    for line in got.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (t, q) = (cols[0], cols[2]);
        if t >= 0.005 {
            assert_eq!(q, 0.05);
        } else {
            assert_eq!(q, (2.0 * t).sqrt() - 10.0 * t);
        }
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("cmp{workers}.csv"));
        let st = bin()
            .args(["compare", "--config"])
            .arg(manifest("tests/configs/compare_small.toml"))
            .args(["--workers", workers, "-q", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        hashes.push(sha(&out));
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn sidecar_replays_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let st = bin()
        .args(["compare", "--config"])
        .arg(manifest("tests/configs/compare_small.toml"))
        .args(["--seed", "99", "--reps", "10", "-q", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let meta_path = dir.path().join("run.csv.meta.json");
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&meta_path).unwrap()).unwrap();
    assert_eq!(meta["seed"], 99);
    assert_eq!(meta["config"]["reps"], 10);
    assert!(meta["counters"]["events"].as_u64().unwrap() > 0);
    assert!(meta["version"].as_str().unwrap().starts_with('v'));

    let replay = dir.path().join("replay.csv");
    let st = bin()
        .args(["compare", "--config"])
        .arg(&meta_path)
        .args(["-q", "--out"])
        .arg(&replay)
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(sha(&out), sha(&replay));
}

#[test]
fn compare_rows_cover_every_time_and_size() {
    let cfg = ExperimentConfig::load(&manifest("tests/configs/compare_small.toml"))
        .unwrap()
        .resolve(Command::Compare, &Overrides::default())
        .unwrap();
    let a = execute(&cfg, &RunOptions { workers: 2, stdout: false, progress: false }).unwrap();
    let lines: Vec<&str> = a.csv.lines().collect();
    assert_eq!(
        lines[0],
        "t,n_servers,reps,mean_scaled_max,std_scaled_max,ci_halfwidth,fluid_q,n3_clock_q,steady_q"
    );
    assert_eq!(lines.len(), 1 + 6 * 2);
    for l in &lines[1..] {
        let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(c[2], 24.0);
        assert!((c[5] - 1.96 * c[4] / 24f64.sqrt()).abs() <= 1e-15 * c[4].max(1.0));
        assert_eq!(c[7], (2.0 * c[0]).sqrt());
        assert_eq!(c[8], 0.5);
    }
}

#[test]
fn every_command_runs_on_a_tiny_config() {
    let base = "seed = 5\nreps = 100\n[params]\nalpha = 1.0\nbeta = 1.0\nn_servers = [10, 20]\n\
                [time]\nstop = 0.2\nstep = 0.1\n[extremal]\ncomponents = [\"standard_normal\", \"exponential\"]\n";
    let cfg = ExperimentConfig::from_toml_str(base).unwrap();
    for cmd in [Command::Simulate, Command::Fluid, Command::Compare, Command::Extremal, Command::Bounds, Command::Validate] {
        let c = cfg.clone().resolve(cmd, &Overrides::default()).unwrap();
        let a = execute(&c, &RunOptions { workers: 3, stdout: false, progress: false }).unwrap();
        assert!(a.csv.lines().count() > 1, "{cmd}");
        assert!(a.csv.ends_with('\n'));
        let width = a.csv.lines().next().unwrap().split(',').count();
        assert!(a.csv.lines().all(|l| l.split(',').count() == width), "{cmd}");
    }
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[params]\nalpha = 1.0\nbeta = -2.0\nn_servers = [10]\n").unwrap();
    let o = bin().args(["fluid", "--stdout", "--config"]).arg(&cfg).output().unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("params.beta"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn stdout_mode_prints_only_csv() {
    let o = bin()
        .args(["fluid", "--stdout", "--config"])
        .arg(manifest("tests/configs/fluid_a1_b10.toml"))
        .output()
        .unwrap();
    assert!(o.status.success());
    let want = std::fs::read_to_string(manifest("tests/golden/fluid_a1_b10.csv")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), want);
}

#[test]
fn presets_can_be_written_and_loaded() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin().args(["presets", "--dir"]).arg(dir.path()).output().unwrap();
    assert!(st.status.success());
    let p = dir.path().join("fig3-a1-b10.toml");
    let cfg = ExperimentConfig::load(&p).unwrap();
    assert_eq!(cfg, forkfluid::presets::find("fig3-a1-b10").unwrap().config);
}
