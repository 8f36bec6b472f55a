use std::fs;
use std::path::{Path, PathBuf};

use pinn_experiments::ExperimentReport;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn lab(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pinn-lab").chain(args.iter().copied());
    let code = pinn_lab::run(argv, &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn only_subdir(dir: &Path) -> PathBuf {
    let mut v: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(v.len(), 1, "{v:?}");
    v.pop().unwrap()
}

#[test]
fn checked_in_defaults_are_current() {
    let r = lab(&["config", "--defaults"]);
    assert_eq!(r.code, 0);
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/defaults.toml");
    assert_eq!(fs::read_to_string(file).unwrap(), r.stdout, "regenerate with `pinn-lab config --defaults`");
}

#[test]
fn config_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lab.toml");
    fs::write(&path, "seed = 9\n[experiments.d2]\nps = [12]\n").unwrap();
    let first = lab(&["-c", path.to_str().unwrap(), "config"]);
    assert_eq!(first.code, 0, "{}", first.stderr);
    assert!(first.stdout.contains("ps = [12]"));
    fs::write(&path, &first.stdout).unwrap();
    let second = lab(&["-c", path.to_str().unwrap(), "config"]);
    assert_eq!(second.stdout, first.stdout);
}

#[test]
fn malformed_config_exits_1_with_schema_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[experiments.a]\nnot_a_key = 3\n").unwrap();
    let r = lab(&["-c", path.to_str().unwrap(), "exp", "A"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("not_a_key"));
    assert!(r.stderr.contains("config --defaults"));
    let r = lab(&["exp", "Z", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert_eq!(lab(&["no-such-command"]).code, 1);
}

#[test]
fn exp_a_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let r = lab(&["exp", "A", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let run = only_subdir(&dir.path().join("A"));
    let rep = ExperimentReport::load(run.join("report.json")).unwrap();
    assert_eq!(rep.claim("A.zero_loss").len(), 4);
    assert!(run.join("metrics.csv").exists());
    assert!(run.join("plots").is_dir());
}

#[test]
fn d2_flags_give_the_cartesian_product() {
    let dir = tempfile::tempdir().unwrap();
    let r = lab(&["exp", "D2", "--ps", "10,20,30", "--dxs", "0.1,0.01", "--no-plots", "--out", dir.path().to_str().unwrap()]);
    assert!(r.code == 0 || r.code == 1, "{}", r.stderr);
    let run = only_subdir(&dir.path().join("D2"));
    let csv = fs::read_to_string(run.join("cells.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(!run.join("plots").exists());
}

#[test]
fn gradcheck_prints_the_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let r = lab(&["gradcheck", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("max relative deviation"));
}

#[test]
fn report_rerender_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(&["exp", "D1", "--out", dir.path().to_str().unwrap()]).code, 0);
    let run = only_subdir(&dir.path().join("D1"));
    let r = lab(&["report", run.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let plot = run.join("plots/step_error.svg");
    let first = fs::read(&plot).unwrap();
    assert_eq!(lab(&["report", run.to_str().unwrap()]).code, 0);
    assert_eq!(fs::read(&plot).unwrap(), first);
}

#[test]
fn report_with_no_series_writes_no_plots() {
    let dir = tempfile::tempdir().unwrap();
    let rep = ExperimentReport::new("A", &(), 0);
    fs::write(dir.path().join("report.json"), rep.to_json()).unwrap();
    let r = lab(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("wrote 0 plot(s)"));
    assert!(!dir.path().join("plots").exists());
}

#[test]
fn solve_ref_and_train_on_transport() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = lab(&["solve-ref", "transport", "--out", out]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(only_subdir(&dir.path().join("solve-ref-transport")).join("field.bin").exists());

    let cfg = dir.path().join("lab.toml");
    fs::write(&cfg, "[train]\ninterior = 50\ninitial = 10\n[train.config]\nsteps = 20\nlog_every = 5\ncheckpoint_every = 10\n").unwrap();
    let r = lab(&["-c", cfg.to_str().unwrap(), "train", "transport", "--out", out]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let run = only_subdir(&dir.path().join("train-transport"));
    assert!(run.join("train_log.csv").exists() && run.join("checkpoint.json").exists());
    assert!(run.join("checkpoints/step_00000010.json").exists());
    assert_eq!(lab(&["train", "navier-stokes", "--out", out]).code, 1);
}

#[test]
fn exit_codes() {
    use pinn_experiments::Outcome::*;
    assert_eq!(pinn_lab::exit_code(&[Pass, Pass]), 0);
    assert_eq!(pinn_lab::exit_code(&[Pass, Inconclusive]), 2);
    assert_eq!(pinn_lab::exit_code(&[Inconclusive, Fail]), 1);
    assert_eq!(pinn_lab::exit_code(&[]), 0);
}
