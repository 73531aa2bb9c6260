use std::path::Path;
use std::process::{Command, Output};

use anyhow::Result;
use serde_json::Value;

fn cyclegas(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclegas"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CYCLEGAS_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[test]
fn bounds_table_has_explicit_gaussian_bound() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let out = cyclegas(dir.path(), &["bounds", "--alphas", "4,2.5,3"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout)?;
    assert!(stdout.contains("gaussian_explicit"));
    let report = json(&dir.path().join("bounds.json"))?;
    let explicit = report["alpha_star"]["gaussian_explicit"]["value"]
        .as_f64()
        .unwrap();
    assert!((explicit - 76.9176).abs() < 0.01);
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    assert!(report["provenance"]["config_hash"].as_str().unwrap().len() == 64);

    // beta against alpha: one row per alpha, decreasing
    let csv = std::fs::read_to_string(dir.path().join("beta_vs_alpha.csv"))?;
    let betas: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(betas.len(), 3);
    assert!(betas.windows(2).all(|w| w[1] < w[0]));
    let schema = json(&dir.path().join("plotdata_schema.json"))?;
    assert!(schema["files"]["beta_vs_alpha.csv"]["columns"]["beta_upper"].is_string());
    assert!(dir.path().join("config.toml").exists());
    Ok(())
}

#[test]
fn refuses_uncertified_sampling() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let out = cyclegas(
        dir.path(),
        &["sample-perfect", "--alpha", "1.0", "--replicas", "5"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("stats.json").exists());

    let out = cyclegas(
        dir.path(),
        &[
            "sample-perfect",
            "--alpha",
            "1.9",
            "--replicas",
            "5",
            "--allow-uncertified",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stats = json(&dir.path().join("stats.json"))?;
    assert_eq!(stats["provenance"]["label"], "UNCERTIFIED");
    let samples = std::fs::read_to_string(dir.path().join("samples.txt"))?;
    assert!(samples.contains("# UNCERTIFIED"));
    Ok(())
}

#[test]
fn config_errors_and_caps_have_exit_codes() -> Result<()> {
    let dir = tempfile::tempdir()?;
    assert_eq!(
        cyclegas(dir.path(), &["bounds", "--alpha", "-2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        cyclegas(dir.path(), &["oracle", "--window", "0,0,0:1,1,1"])
            .status
            .code(),
        Some(2)
    );
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "alpha = 2.0\nnot_a_key = 1\n")?;
    assert_eq!(
        cyclegas(dir.path(), &["bounds", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cyclegas(
            dir.path(),
            &[
                "oracle",
                "--alpha",
                "1",
                "--window",
                "0,0:3,3",
                "--state-cap",
                "100"
            ]
        )
        .status
        .code(),
        Some(4)
    );
    assert_eq!(
        cyclegas(dir.path(), &["bounds", "--max-classes", "10"])
            .status
            .code(),
        Some(4)
    );
    Ok(())
}

#[test]
fn identical_runs_are_byte_identical() -> Result<()> {
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    let args = [
        "sample-perfect",
        "--replicas",
        "300",
        "--seed",
        "17",
        "--region=-2,-2:2,2",
        "--region=-3,-3:3,3",
        "--region=-5,-5:5,5",
        "--t-back",
        "0.5,2",
        "--initial",
        "(0,0) (1,0)",
    ];
    assert_eq!(cyclegas(a.path(), &args).status.code(), Some(0));
    assert_eq!(cyclegas(b.path(), &args).status.code(), Some(0));
    for f in [
        "stats.json",
        "samples.txt",
        "agreement.csv",
        "clan_size.csv",
        "uniqueness.csv",
        "plotdata_schema.json",
        "config.toml",
    ] {
        assert_eq!(
            std::fs::read(a.path().join(f))?,
            std::fs::read(b.path().join(f))?,
            "{f} differs"
        );
    }
    let agreement = std::fs::read_to_string(a.path().join("agreement.csv"))?;
    assert_eq!(agreement.lines().count(), 1 + 3);
    let stats = json(&a.path().join("stats.json"))?;
    assert_eq!(stats["agreement"].as_array().unwrap().len(), 3);
    assert_eq!(stats["provenance"]["seed"], 17);
    assert!(stats["provenance"]["tail_bound_hex"]
        .as_str()
        .unwrap()
        .starts_with("0x"));

    // a different seed changes the samples
    let c = tempfile::tempdir()?;
    let mut other = args.to_vec();
    other[4] = "18";
    assert_eq!(cyclegas(c.path(), &other).status.code(), Some(0));
    assert_ne!(
        std::fs::read(a.path().join("samples.txt"))?,
        std::fs::read(c.path().join("samples.txt"))?
    );
    Ok(())
}

#[test]
fn config_file_with_flag_override() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 3\nalpha = 1.0\nwindow = \"0,0:1,1\"\nreplicas = 20000\n[cutoffs]\nmax_len = 4\nmax_jump = 1.5\n",
    )?;
    let out = cyclegas(
        dir.path(),
        &[
            "sample-finite",
            "--config",
            cfg.to_str().unwrap(),
            "--compare-oracle",
            "--seed",
            "4",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = json(&dir.path().join("summary.json"))?;
    assert_eq!(summary["provenance"]["seed"], 4);
    assert_eq!(summary["replicas"], 20000);
    assert!(summary["tv_distance_to_oracle"].as_f64().unwrap() < 0.03);
    let effective = std::fs::read_to_string(dir.path().join("config.toml"))?;
    assert!(effective.contains("seed = 4"));
    assert!(effective.contains("compare_oracle = true"));

    // stats re-reads the samples it wrote
    let stats_dir = dir.path().join("stats");
    let input = dir.path().join("samples.txt");
    let out = cyclegas(
        &stats_dir,
        &["stats", "--window", "0,0:1,1", "--input", input.to_str().unwrap()],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stats = json(&stats_dir.join("stats.json"))?;
    assert_eq!(stats["replicas"], 20000);
    let total: u64 = stats["cycle_length_histogram"]["counts"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(total, 4 * 20000);
    Ok(())
}

#[test]
fn oracle_reports_detailed_balance() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let out = cyclegas(
        dir.path(),
        &[
            "oracle",
            "--alpha",
            "1",
            "--window",
            "0,0:1,1",
            "--max-len",
            "4",
            "--max-jump",
            "1.5",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.path().join("oracle.json"))?;
    assert_eq!(report["states"], 24);
    assert!(report["detailed_balance_max_violation"].as_f64().unwrap() <= 1e-10);
    Ok(())
}

#[test]
fn output_directory_from_environment() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let status = Command::new(env!("CARGO_BIN_EXE_cyclegas"))
        .args(["bounds", "--format", "csv"])
        .env("CYCLEGAS_OUT", dir.path())
        .output()?
        .status;
    assert!(status.success());
    assert!(dir.path().join("bounds.json").exists());
    Ok(())
}
