use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sirs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sirs"))
        .args(args)
        .env_remove("SIRS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const BASE_CONFIG: &str = "\
model.lambda = 0.33
model.beta = 0.013
model.eta = 0.023
model.mu = 0.05
model.gamma = 0.04
model.alpha = 0.006
noise.sigma1 = 0.0
noise.sigma2 = 0.0
noise.sigma3 = 0.0
noise.sigma4 = 0.0
sim.dt = 0.1
sim.t_final = 50.0
";

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn check_reports_subcritical_numbers() {
    let o = sirs(&["check", "--preset", "fig1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("R0 = 0.89375"), "{text}");
    assert!(text.contains("EE: absent"), "{text}");
}

#[test]
fn check_reports_extinction_for_strong_coupling_noise() {
    let dir = TempDir::new().unwrap();
    let cfg = BASE_CONFIG
        .replace("model.mu = 0.05", "model.mu = 0.006")
        .replace("noise.sigma2 = 0.0", "noise.sigma2 = 0.02")
        .replace("noise.sigma4 = 0.0", "noise.sigma4 = 0.1");
    let path = write_config(dir.path(), &cfg);
    let o = sirs(&["check", "--config", &path]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("extinction predicted: true"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn missing_key_is_named_and_exits_2() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), &BASE_CONFIG.replace("model.beta = 0.013\n", ""));
    let o = sirs(&["check", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.beta"), "{}", stderr(&o));
}

#[test]
fn unknown_preset_and_bad_scheme_exit_2() {
    assert_eq!(sirs(&["check", "--preset", "fig9"]).status.code(), Some(2));
    assert_eq!(
        sirs(&["simulate", "--preset", "fig1", "--scheme", "heun"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = sirs(&[
            "simulate",
            "--preset",
            "fig8a",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let name = "trajectory_milstein-paper.csv";
    let first = fs::read(a.join(name)).unwrap();
    assert_eq!(first, fs::read(b.join(name)).unwrap());
    assert!(first.starts_with(b"t,x,y,z\n"));
}

#[test]
fn noiseless_subcritical_run_approaches_dfe() {
    let dir = TempDir::new().unwrap();
    let o = sirs(&[
        "simulate",
        "--preset",
        "fig1",
        "--scheme",
        "rk4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("trajectory_rk4.csv")).unwrap();
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last[0], 400.0);
    assert!((last[1] - 6.6).abs() < 0.1, "{last:?}");
    assert!(last[2] < 0.05 && last[3] < 0.5, "{last:?}");
}

#[test]
fn manifest_round_trips_as_config() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    let o = sirs(&[
        "simulate",
        "--preset",
        "fig4a",
        "--seed",
        "3",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = first.join("manifest.txt");
    let second = dir.path().join("second");
    let o = sirs(&[
        "simulate",
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let name = "trajectory_milstein-paper.csv";
    assert_eq!(
        fs::read(first.join(name)).unwrap(),
        fs::read(second.join(name)).unwrap()
    );
}

#[test]
fn out_dir_env_is_honoured_and_flag_wins() {
    let dir = TempDir::new().unwrap();
    let env_dir = dir.path().join("env");
    let flag_dir = dir.path().join("flag");
    let run = |extra: &[&str]| {
        let mut args = vec!["simulate", "--preset", "fig1"];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_sirs"))
            .args(&args)
            .env("SIRS_OUT_DIR", &env_dir)
            .output()
            .unwrap()
    };
    assert_eq!(run(&[]).status.code(), Some(0));
    assert!(env_dir.join("manifest.txt").exists());
    assert_eq!(
        run(&["--out", flag_dir.to_str().unwrap()]).status.code(),
        Some(0)
    );
    assert!(flag_dir.join("manifest.txt").exists());
}

#[test]
fn empty_sweep_values_exit_2() {
    let o = sirs(&[
        "sweep",
        "--preset",
        "fig2",
        "--sweep-axis",
        "sigma4",
        "--sweep-values",
        "",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_locates_extinction_flip() {
    let dir = TempDir::new().unwrap();
    let o = sirs(&[
        "sweep",
        "--preset",
        "fig2",
        "--sweep-axis",
        "sigma4",
        "--sweep-values",
        "0.01,0.03,0.05,0.07",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let flags: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(11).unwrap())
        .collect();
    assert_eq!(flags, ["false", "false", "true", "true"]);
    let summary = fs::read_to_string(dir.path().join("sweep_summary.txt")).unwrap();
    assert!(
        summary.contains("false -> true between sigma4=0.03 and sigma4=0.05"),
        "{summary}"
    );
}

#[test]
fn single_path_ensemble_matches_simulate() {
    let dir = TempDir::new().unwrap();
    let cfg = BASE_CONFIG
        .replace("model.mu = 0.05", "model.mu = 0.006")
        .replace("noise.sigma1 = 0.0", "noise.sigma1 = 0.01")
        .replace("noise.sigma4 = 0.0", "noise.sigma4 = 0.01")
        + "sim.seed = 11\nensemble.n_paths = 1\n";
    let path = write_config(dir.path(), &cfg);
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        sirs(&["simulate", "--config", &path, "--out", out])
            .status
            .code(),
        Some(0)
    );
    let o = sirs(&["ensemble", "--config", &path, "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let csv = fs::read_to_string(dir.path().join("trajectory_milstein-corrected.csv")).unwrap();
    let n: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .skip(1)
                .map(|v| v.parse::<f64>().unwrap())
                .sum()
        })
        .collect();
    let (lo, hi) = n
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
    let report = stdout(&o);
    let field = |key: &str| -> f64 {
        report
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(field("n_min"), lo);
    assert_eq!(field("n_max"), hi);
}
