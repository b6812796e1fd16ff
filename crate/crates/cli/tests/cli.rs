use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tracethresh_cli::config::{Axis, SweepAxis};
use tracethresh_cli::{presets, ExperimentConfig, Preset};

fn tracethresh(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracethresh"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn sidecar(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn untraced_critical_rate_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracethresh(&["lambda-crit", "--case", "exp-ru", "--p", "0"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), "lambda_crit\n1.000000\n");

    std::fs::write(dir.path().join("p0.json"), r#"{"params": {"p": 0.0}}"#).unwrap();
    let o = tracethresh(&["lambda-crit", "--case", "exp-ru", "--config", "p0.json"], dir.path());
    assert_eq!(stdout(&o), "lambda_crit\n1.000000\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| tracethresh(args, dir.path()).status.code().unwrap();
    assert_eq!(code(&["lambda-star"]), 0);
    assert_eq!(code(&["lambda-crit", "--p", "1.5"]), 2);
    assert_eq!(code(&["analyze-const"]), 2);
    assert_eq!(code(&["reproduce"]), 2);
    assert_eq!(code(&["lambda-star", "--out", "x.json"]), 2);
    assert_eq!(code(&["sweep", "--axis", "nonsense", "--grid", "1,2"]), 2);
    assert_eq!(code(&["lambda-star", "--config", "missing.json"]), 2);
    // Every named case is traced while latent, so R_U is zero for all contact rates.
    let no_root = [
        "lambda-crit",
        "--case",
        "const-ru",
        "--infectious",
        "const:1",
        "--latent",
        "const:5",
        "--delay",
        "zero",
        "--p",
        "1",
        "--pi-r",
        "1",
        "--pi-t",
        "0",
    ];
    let o = tracethresh(&no_root, dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not change sign"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["sim-bdp", "--n", "20000", "--seed", "5", "--axis", "delay_mean", "--grid", "0.5,1,2", "--out", out];
    let run = |out: &'static str, threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_tracethresh"))
            .args(args(out))
            .current_dir(dir.path())
            .env("TRACETHRESH_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "2"));
    let other = tracethresh(&["sim-bdp", "--n", "20000", "--seed", "6", "--axis", "delay_mean", "--grid", "0.5,1,2"], dir.path());
    assert_ne!(stdout(&other).as_bytes(), &a[..]);
}

#[test]
fn sidecar_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracethresh(&["reproduce", "--preset", "fig8", "--grid", "0,0.5,1", "--out", "a.csv"], dir.path());
    assert!(o.status.success());
    let side = sidecar(dir.path(), "a.json");
    let config: ExperimentConfig = serde_json::from_value(side["config"].clone()).unwrap();
    let expected = ExperimentConfig {
        sweep_axis: Some(SweepAxis {
            parameter: Axis::NamingProb,
            grid: vec![0.0, 0.5, 1.0],
        }),
        output_path: Some("a.csv".into()),
        ..presets::base(Preset::Fig8)
    };
    assert_eq!(config, expected);
    assert_eq!(side["version"], tracethresh::VERSION);
    assert_eq!(side["seed"], 42);

    // Rerunning from the sidecar reproduces the table.
    let o = tracethresh(&["reproduce", "--config", "a.json", "--out", "b.csv"], dir.path());
    assert!(o.status.success());
    let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.csv").lines().count(), 1 + 2 * 4 * 3);
    let again: ExperimentConfig = serde_json::from_value(sidecar(dir.path(), "b.json")["config"].clone()).unwrap();
    assert_eq!(
        again,
        ExperimentConfig {
            output_path: Some("b.csv".into()),
            ..config
        }
    );
}

#[test]
fn inputs_are_rescaled_to_unit_infectious_mean() {
    let dir = tempfile::tempdir().unwrap();
    let fig3 = ["--p", "1", "--pi-r", "1", "--pi-t", "0", "--latent", "zero"];
    let mut unit = vec!["lambda-star", "--infectious", "exp:1", "--delay", "exp:0.7"];
    unit.extend(fig3);
    let mut halved = vec!["lambda-star", "--infectious", "exp:2", "--delay", "exp:1.4", "--out", "h.csv"];
    halved.extend(fig3);
    let a = stdout(&tracethresh(&unit, dir.path()));
    assert!(tracethresh(&halved, dir.path()).status.success());
    let b = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(a, b);
    let star: f64 = a.lines().nth(1).unwrap().parse().unwrap();
    assert!((star - 1.9876).abs() < 0.01);
    let side = sidecar(dir.path(), "h.json");
    assert_eq!(side["time_scale"], 0.5);
    assert_eq!(side["normalized_params"]["delay"]["rate"], 0.7);
    assert_eq!(side["config"]["params"]["delay"]["rate"], 1.4);
}

#[test]
fn fig3_preset_covers_the_contact_rate_range() {
    let dir = tempfile::tempdir().unwrap();
    assert!(tracethresh(&["reproduce", "--preset", "fig3", "--out", "fig3.csv"], dir.path()).status.success());
    let csv = std::fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "lambda,y_star,denominator,r_u");
    assert_eq!(lines.len(), 1 + 421);
    assert!(lines[1].starts_with("0.000000,"));
    assert!(lines[421].starts_with("2.100000,") && lines[421].ends_with(",inf"));
    let star = sidecar(dir.path(), "fig3.json")["summary"]["lambda_star"].as_f64().unwrap();
    assert!((star - 1.9876).abs() < 0.01);
    // R_U is finite and increasing up to the blow-up rate.
    let r_u: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .filter(|v| v.is_finite())
        .collect();
    assert_eq!(r_u.len(), 398);
    assert!(r_u.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn final_size_summary_in_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracethresh(&["sim-epidemic", "--n", "3000", "--population", "100", "--out", "fs.csv"], dir.path());
    assert!(o.status.success());
    let summary = &sidecar(dir.path(), "fs.json")["summary"];
    assert_eq!(summary["n"], 3000);
    assert!(summary["cutoff"].as_u64().unwrap() > 1);
    let p = summary["p_minor"].as_f64().unwrap();
    assert!(p > 0.5 && p < 0.8);
    let csv = std::fs::read_to_string(dir.path().join("fs.csv")).unwrap();
    let total: u64 = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 3000);

    let o = tracethresh(&["sim-epidemic", "--n", "3000", "--population", "100", "--cutoff", "5"], dir.path());
    assert!(o.status.success());
}

// Published extinction probabilities: delay mean, then (independent, mutual)
// for lambda 1.5 with Exp(1) latency, lambda 1.5 without latency, lambda 2.5 without latency.
const TABLE2: [[f64; 7]; 11] = [
    [0.0, 1.0000, 1.0000, 1.0000, 1.0000, 0.8300, 0.8270],
    [0.5, 1.0000, 1.0000, 0.9821, 0.9861, 0.5166, 0.5296],
    [1.0, 1.0000, 1.0000, 0.8438, 0.8463, 0.4632, 0.4709],
    [1.5, 0.9999, 0.9999, 0.7865, 0.7884, 0.4434, 0.4493],
    [2.0, 0.9718, 0.9733, 0.7533, 0.7586, 0.4314, 0.4366],
    [2.5, 0.9090, 0.9191, 0.7366, 0.7426, 0.4239, 0.4291],
    [3.0, 0.8723, 0.8781, 0.7280, 0.7286, 0.4206, 0.4223],
    [3.5, 0.8431, 0.8504, 0.7184, 0.7175, 0.4171, 0.4229],
    [4.0, 0.8232, 0.8288, 0.7111, 0.7119, 0.4159, 0.4199],
    [4.5, 0.8041, 0.8121, 0.7039, 0.7089, 0.4143, 0.4162],
    [5.0, 0.7875, 0.7944, 0.7032, 0.7021, 0.4130, 0.4149],
];

#[test]
fn table2_preset_matches_published_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracethresh(&["reproduce", "--preset", "table2", "--n", "100000", "--seed", "42"], dir.path());
    assert!(o.status.success());
    let csv = stdout(&o);
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    let mut worst = 0.0_f64;
    for (row, want) in rows.iter().zip(TABLE2) {
        assert_eq!(row[0], want[0]);
        // Estimates sit in every other column, each followed by its standard error.
        for (k, &w) in want[1..].iter().enumerate() {
            let got = row[1 + 2 * k];
            worst = worst.max((got - w).abs());
            assert!((got - w).abs() <= 0.015, "delay mean {}: column {k}: {got} vs {w}", want[0]);
        }
    }
    assert!(worst > 0.0);
}
