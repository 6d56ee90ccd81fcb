use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use geophase_core::config::RunConfig;
use tempfile::TempDir;

const SMALL: &str = r#"
[noise]
D = 0.25
seed = 11

[schedule]
t_end = 40.0
steps = 400

[ensemble]
N = 200
record_every = 20

[sde_check]
N = 500

[adiabatic]
durations = [10.0, 20.0]
steps_per_time = 10.0

[sphere]
n_theta = 9
n_phi = 9
"#;

fn geophase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geophase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_in(dir: &TempDir, sub: &str, config: &Path, out: &str, extra: &[&str]) -> (Output, PathBuf) {
    let out_dir = dir.path().join(out);
    let mut args = vec![
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    (geophase(&args), out_dir)
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn every_subcommand_writes_a_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    for (sub, csv) in [
        ("holonomy", "holonomy.csv"),
        ("evolve", "evolve.csv"),
        ("ensemble", "ensemble.csv"),
        ("sde-check", "sde_check.csv"),
        ("verify-adiabatic", "fidelity.csv"),
        ("curvature", "curvature.csv"),
    ] {
        let (out, dir) = run_in(&tmp, sub, &cfg, sub, &[]);
        assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.join(csv).is_file(), "{sub} wrote no {csv}");
        let r = report(&dir);
        assert_eq!(r["command"], sub);
        assert_eq!(r["seed"], 11);
        assert!(r["outputs"].as_array().unwrap().iter().any(|v| v == csv));
    }
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let (out, dir) = run_in(&tmp, "holonomy", &cfg, "h", &[]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.join("holonomy.csv")).unwrap();
    let row = text
        .lines()
        .find(|l| !l.starts_with('#') && !l.starts_with('t'))
        .unwrap();
    for field in row.split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17, "{field}");
        let value: f64 = field.parse().unwrap();
        assert_eq!(format!("{value:.16e}"), field);
    }
}

#[test]
fn seeded_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    for (sub, csvs) in [
        ("ensemble", &["ensemble.csv"][..]),
        ("evolve", &["evolve.csv", "trajectory.csv"][..]),
    ] {
        let (a, da) = run_in(&tmp, sub, &cfg, &format!("{sub}-a"), &["--seed", "5"]);
        let (b, db) = run_in(&tmp, sub, &cfg, &format!("{sub}-b"), &["--seed", "5", "--threads", "1"]);
        let (c, dc) = run_in(&tmp, sub, &cfg, &format!("{sub}-c"), &["--seed", "6"]);
        assert!(a.status.success() && b.status.success() && c.status.success());
        for csv in csvs {
            let x = fs::read(da.join(csv)).unwrap();
            assert_eq!(
                x,
                fs::read(db.join(csv)).unwrap(),
                "{sub}/{csv} differs between identical runs"
            );
            assert_ne!(x, fs::read(dc.join(csv)).unwrap(), "{sub}/{csv} ignores the seed");
        }
        assert_eq!(report(&da)["results"], report(&db)["results"]);
    }
}

#[test]
fn report_echoes_the_effective_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let (out, dir) = run_in(&tmp, "holonomy", &cfg, "echo", &["--seed", "99"]);
    assert!(out.status.success());
    let echoed: RunConfig = serde_json::from_value(report(&dir)["config"].clone()).unwrap();
    let mut expected = RunConfig::load(&cfg).unwrap();
    expected.noise.seed = 99;
    expected.output.dir = dir.clone();
    assert_eq!(echoed, expected);
    // The echo is itself a valid config file.
    assert_eq!(RunConfig::from_toml_str(&echoed.to_toml_string()).unwrap(), echoed);
}

#[test]
fn configuration_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    for (name, text) in [
        ("typo.toml", "[model]\nomgea = 2.0\n"),
        ("section.toml", "[nosie]\nD = 1.0\n"),
        ("range.toml", "[model]\nomega = -1.0\n"),
        ("model.toml", "[model]\nname = \"three_level\"\n"),
        ("syntax.toml", "[model\n"),
    ] {
        let cfg = write_config(tmp.path(), name, text);
        let (out, _) = run_in(&tmp, "holonomy", &cfg, name, &[]);
        assert_eq!(
            out.status.code(),
            Some(1),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let cfg = write_config(tmp.path(), "sphere.toml", "[model]\nname = \"sphere\"\n");
    let (out, _) = run_in(&tmp, "ensemble", &cfg, "sphere", &[]);
    assert_eq!(out.status.code(), Some(1));
    let (out, _) = run_in(
        &tmp,
        "holonomy",
        &write_config(tmp.path(), "ok.toml", SMALL),
        "t0",
        &["--threads", "0"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{SMALL}\n[numerics]\ngap_min = 5.0\n");
    let cfg = write_config(tmp.path(), "gap.toml", &text);
    let (out, _) = run_in(&tmp, "holonomy", &cfg, "gap", &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn io_failures_exit_with_three() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("absent.toml");
    let (out, _) = run_in(&tmp, "holonomy", &missing, "missing", &[]);
    assert_eq!(out.status.code(), Some(3));

    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let blocker = write_config(tmp.path(), "blocker", "not a directory");
    let out = geophase(&[
        "holonomy",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
