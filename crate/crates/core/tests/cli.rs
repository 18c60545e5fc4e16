//! End-to-end tests of the `uccrl` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MINIMAL: &str = "\
env.name = lower-bound
env.n_cells = 2
env.reward_actions = 2
run.T = 1024
run.seeds = 0
";

const HEADER: &str = "t,reward,cum_reward,cum_regret,episode,optimistic_gain_at_episode_start";

fn uccrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uccrl")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ];
    args.extend_from_slice(extra);
    uccrl(&args)
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
}

fn summary_value(dir: &Path, file: &str, key: &str) -> Option<String> {
    fs::read_to_string(dir.join(file))
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
}

#[test]
fn minimal_config_writes_one_row_per_step() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "min.cfg", MINIMAL);
    let out = tmp.path().join("out");
    let status = run(&cfg, &out, &[]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let files = csv_files(&out);
    assert_eq!(files.len(), 1);
    let text = fs::read_to_string(&files[0]).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1024);
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 6);
        assert_eq!(cols[0], (i + 1).to_string());
        assert!(cols
            .iter()
            .all(|c| !c.is_empty() && !c.contains("NaN") && !c.contains("inf")));
    }
    assert_eq!(
        summary_value(&out, "summary.txt", "regret_available").as_deref(),
        Some("true")
    );
    assert_eq!(summary_value(&out, "summary.txt", "rho_star").as_deref(), Some("0.6"));
}

#[test]
fn reruns_are_byte_identical_across_job_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MINIMAL.replace("run.seeds = 0", "run.seeds = 0, 1, 2, 3");
    let cfg = write_config(tmp.path(), "multi.cfg", &text);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&cfg, &a, &["--jobs", "1"]).status.success());
    assert!(run(&cfg, &b, &["--jobs", "4"]).status.success());
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    assert_eq!(fa.len(), 4);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    assert_eq!(
        fs::read(a.join("summary.txt")).unwrap(),
        fs::read(b.join("summary.txt")).unwrap()
    );
}

#[test]
fn expanded_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "auto.cfg",
        "env.name = wrapped-kernel\nenv.seed = 3\nagent.n = auto\nagent.H = auto\nrun.T = 3000\nrun.seeds = 5\n",
    );
    let first = tmp.path().join("first");
    assert!(run(&cfg, &first, &[]).status.success());
    let echo = first.join("config.expanded.txt");
    let echoed = fs::read_to_string(&echo).unwrap();
    assert!(echoed.contains("agent.n = 8"), "{echoed}");
    assert!(!echoed.contains("agent.H = auto"));
    let second = tmp.path().join("second");
    assert!(run(&echo, &second, &[]).status.success());
    for (x, y) in csv_files(&first).iter().zip(csv_files(&second)) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    assert_eq!(
        fs::read(&echo).unwrap(),
        fs::read(second.join("config.expanded.txt")).unwrap()
    );
}

#[test]
fn invalid_config_exits_with_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.cfg", &format!("{MINIMAL}agent.delta = 2\n"));
    let out = run(&cfg, &tmp.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 6"), "{stderr}");
    let cfg = write_config(tmp.path(), "syntax.cfg", "env.name = lower-bound\nrun.T 10\n");
    let out = run(&cfg, &tmp.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(uccrl(&["run"]).status.code(), Some(2));
}

#[test]
fn unavailable_oracle_gives_reward_only_output() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "env.name = wrapped-kernel\nagent.n = 2\nrun.T = 200\noracle.fine_n = 100000\n";
    let cfg = write_config(tmp.path(), "noracle.cfg", text);
    let out_dir = tmp.path().join("o");
    let out = run(&cfg, &out_dir, &[]);
    assert!(out.status.success());
    let csv = fs::read_to_string(&csv_files(&out_dir)[0]).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("t,reward,cum_reward,episode,optimistic_gain_at_episode_start")
    );
    assert_eq!(csv.lines().count(), 201);
    assert_eq!(
        summary_value(&out_dir, "summary.txt", "regret_available").as_deref(),
        Some("false")
    );
    assert!(summary_value(&out_dir, "summary.txt", "warning").is_some());

    let oracle = uccrl(&["oracle", "--config", cfg.to_str().unwrap()]);
    assert_eq!(oracle.status.code(), Some(4));
}

#[test]
fn oracle_command() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lb.cfg", "env.name = lower-bound\nenv.epsilon = 0.1\n");
    let out = uccrl(&["oracle", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("gain = 0.6\n") && stdout.contains("error_bound = 0\n"),
        "{stdout}"
    );

    let cfg = write_config(tmp.path(), "wk.cfg", "env.name = wrapped-kernel\n");
    let bound = |fine_n: &str| -> f64 {
        let out = uccrl(&["oracle", "--config", cfg.to_str().unwrap(), "--fine-n", fine_n]);
        let stdout = String::from_utf8(out.stdout).unwrap();
        stdout
            .lines()
            .find_map(|l| l.strip_prefix("error_bound = "))
            .unwrap()
            .parse()
            .unwrap()
    };
    let (coarse, fine) = (bound("128"), bound("256"));
    assert!((coarse / fine - 2.0).abs() < 1e-9, "{coarse} {fine}");
}

#[test]
fn check_holder_command() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ct.cfg", "env.name = constant-transition\n");
    let out_dir = tmp.path().join("h");
    let out = uccrl(&[
        "check-holder",
        "--config",
        cfg.to_str().unwrap(),
        "--pairs",
        "500",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("samples_checked = 500\n") && stdout.contains("max_trans_ratio = 0\n"),
        "{stdout}"
    );
    assert_eq!(fs::read_to_string(out_dir.join("holder.txt")).unwrap(), stdout);
}

#[test]
fn single_point_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let base = MINIMAL.replace("run.seeds = 0", "run.seeds = 0, 1");
    let run_cfg = write_config(tmp.path(), "run.cfg", &base);
    let sweep_cfg = write_config(
        tmp.path(),
        "sweep.cfg",
        &format!("{base}sweep.axis = T\nsweep.values = 1024\n"),
    );
    let (run_out, sweep_out) = (tmp.path().join("r"), tmp.path().join("s"));
    assert!(run(&run_cfg, &run_out, &[]).status.success());
    let out = uccrl(&[
        "sweep",
        "--config",
        sweep_cfg.to_str().unwrap(),
        "--out",
        sweep_out.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success());
    let point = sweep_out.join("point_T1024");
    let mut names: Vec<_> = fs::read_dir(&run_out)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for name in names {
        assert_eq!(
            fs::read(run_out.join(&name)).unwrap(),
            fs::read(point.join(&name)).unwrap(),
            "{name:?}"
        );
    }
    assert!(sweep_out.join("sweep_summary.txt").exists());
    assert!(summary_value(&sweep_out, "sweep_summary.txt", "regret.fit.slope").is_some());
}

#[test]
fn sweep_over_cells_reports_best_point() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "n.cfg",
        "env.name = wrapped-kernel\nrun.T = 2000\nrun.seeds = 0, 1\nsweep.axis = n\nsweep.values = 1, 2, 4\n",
    );
    let out_dir = tmp.path().join("n");
    let out = uccrl(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--quiet",
        "--jobs",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for n in [1, 2, 4] {
        assert!(out_dir
            .join(format!("point_n{n}"))
            .join(format!("run_T2000_n{n}_seed1.csv"))
            .exists());
    }
    let best: u64 = summary_value(&out_dir, "sweep_summary.txt", "best_point")
        .unwrap()
        .parse()
        .unwrap();
    assert!([1, 2, 4].contains(&best));
    let quantiles = fs::read_to_string(out_dir.join("sweep_quantiles.csv")).unwrap();
    assert_eq!(quantiles.lines().count(), 4);
}

#[test]
fn sweep_without_axis_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "min.cfg", MINIMAL);
    let out = uccrl(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
