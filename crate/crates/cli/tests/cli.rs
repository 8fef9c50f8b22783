use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use clap::Parser;
use doslab_cli::{execute, run, Cli, CliError};
use serde_json::Value;

fn doslab(dir: &Path, args: &[&str]) -> i32 {
    let out = dir.join("out");
    let cache = format!("cache.dir={}", dir.join("cache").display());
    let mut argv = vec!["doslab", "--out", out.to_str().unwrap(), "--set", &cache];
    argv.extend_from_slice(args);
    run(argv)
}

fn report(dir: &Path) -> Value {
    let text = fs::read_to_string(dir.join("out/report.json")).unwrap();
    serde_json::from_str::<Value>(&text).unwrap()["report"].clone()
}

#[test]
fn oracle_free_value() {
    let dir = tempfile::tempdir().unwrap();
    let code = doslab(dir.path(), &["oracle", "--set", "potential={kind=\"constant\",value=0.0}", "--set", "oracle.t=[1.0]"]);
    assert_eq!(code, 0);
    let r = report(dir.path());
    let v = r["oracle_laplace"][0].as_f64().unwrap();
    assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-16);
    assert!(dir.path().join("out/report.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "seed = 3\n[sweep]\nhbar = [0.1, 0.2]\n").unwrap();
    assert_eq!(doslab(dir.path(), &["sweep", "--config", cfg.to_str().unwrap()]), 2);
    assert!(!dir.path().join("out").exists(), "nothing may run before validation");

    fs::write(&cfg, "seed = 3\n\n[method]\nprobez = 10\n").unwrap();
    let cli = Cli::try_parse_from(["doslab", "oracle", "--config", cfg.to_str().unwrap()]).unwrap();
    match execute(&cli) {
        Err(e @ CliError::Config { .. }) => {
            assert_eq!(e.exit_code(), 2);
            assert!(e.to_string().contains("line 4"), "{e}");
        }
        other => panic!("expected config error, got {other:?}"),
    }

    let mask = "domain={kind=\"mask-function\",dimension=2,label=\"m\",bounding_radius=1.0,scale=1.0}";
    assert_eq!(doslab(dir.path(), &["oracle", "--set", mask]), 2);
    assert_eq!(doslab(dir.path(), &["oracle", "--set", "method.probes=2"]), 2);
    assert_eq!(run(["doslab", "frobnicate"]), 2);
}

#[test]
fn rescale_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bump = "potential={kind=\"gaussian-bump\",amplitude=1.0,width=0.5}";
    assert_eq!(doslab(dir.path(), &["rescale-check", "--set", bump]), 4);

    let code = doslab(dir.path(), &["rescale-check", "--set", "rescale.r=[1.0]", "--set", "rescale.h=0.2"]);
    assert_eq!(code, 0);
    let r = report(dir.path());
    assert_eq!(r["rows"][0]["max_entry_deviation"].as_f64(), Some(0.0));
    assert_eq!(r["rows"][0]["relative_deviation"][0].as_f64(), Some(0.0));
    assert_eq!(r["pass"], Value::Bool(true));
}

#[test]
fn numerical_failure_exit_3_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--set", "sweep.hbar=[0.5]", "--set", "sweep.t=[1.0]", "--set", "method.dense_cap=0", "--set",
        "method.degree=2", "--no-cache",
    ];
    assert_eq!(doslab(dir.path(), &args), 3);
    let r = report(dir.path());
    assert!(r["cells"]["error"][0].as_str().unwrap().contains("degree"));
    assert!(r["cells"]["value"][0].is_null());
}

#[test]
fn sweep_cache_reuse_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--set", "sweep.hbar=[0.5, 0.25]", "--set", "sweep.t=[0.5, 1.0]", "--seed", "9"];
    assert_eq!(doslab(dir.path(), &args), 0);
    let first = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    let cold = report(dir.path());
    assert_eq!(doslab(dir.path(), &args), 0);
    assert_eq!(report(dir.path()), cold);
    assert_eq!(fs::read_to_string(dir.path().join("out/report.csv")).unwrap(), first);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(meta["metadata"]["cache"]["hits"].as_u64(), Some(4));
    assert_eq!(meta["metadata"]["cache"]["misses"].as_u64(), Some(0));

    // A different seed is a different key.
    let reseeded = ["sweep", "--set", "sweep.hbar=[0.5, 0.25]", "--set", "sweep.t=[0.5, 1.0]", "--seed", "10"];
    assert_eq!(doslab(dir.path(), &reseeded), 0);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(meta["metadata"]["cache"]["hits"].as_u64(), Some(0));

    fs::write(dir.path().join("cache/entries/junk.json"), "not json").unwrap();
    assert_eq!(doslab(dir.path(), &["cache", "gc"]), 0);
    assert!(!dir.path().join("cache/entries/junk.json").exists());
    let manifest = fs::read_to_string(dir.path().join("cache/manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 8);
}

#[test]
fn ids_writes_one_curve_per_variant() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["ids", "--set", "ids.r=3.0", "--set", "ids.points=801", "--set", "ids.t=[1.0]"];
    assert_eq!(doslab(dir.path(), &args), 0);
    for name in ["empirical-counting", "surface-average-uniform", "surface-average-weighted"] {
        let csv = fs::read_to_string(dir.path().join(format!("out/curve_{name}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 802, "{name}");
    }
    let r = report(dir.path());
    assert_eq!(r["curves"][1]["label"].as_str(), Some("paper form"));
    assert_eq!(r["curves"][2]["label"].as_str(), Some("star-shaped form"));
}

#[test]
fn compare_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["compare", "--set", "compare.hbar=[0.5, 0.25]", "--no-cache"];
    assert_eq!(doslab(dir.path(), &args), 0);
    let r = report(dir.path());
    assert_eq!(r["measures_differ"], Value::Bool(true));
    let gap = r["oracle_gap"].as_f64().unwrap();
    assert!((gap - (0.5 * 2f64.ln() - 1.0 / PI)).abs() < 1e-3, "{gap}");
}

#[test]
fn overrides_on_both_sides_combine() {
    let cli = Cli::try_parse_from(["doslab", "--set", "seed=4", "sweep", "--set", "sweep.eta=0.2", "--threads", "1"]).unwrap();
    let cfg = doslab_cli::effective_config(&cli).unwrap();
    assert_eq!((cfg.seed, cfg.sweep.eta, cfg.threads), (4, 0.2, 1));
}

#[test]
fn shipped_config_is_the_default() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let cfg = doslab_cli::config::load(Some(&path), &[]).unwrap();
    assert_eq!(cfg, doslab_cli::config::ExperimentConfig::default());
}
