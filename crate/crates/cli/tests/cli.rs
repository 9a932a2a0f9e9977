use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ensemble_cli::{run_scenario, ScenarioConfig};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ensemble-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const COMMANDS: [&str; 6] = ["curve", "delta", "tails", "margins", "counterexamples", "synthetic-split"];

#[test]
fn squared_gaussian_curve_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let r = lab(&["curve", "--kmax", "10", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let golden = include_str!("golden/curve-squared-gaussian.csv");
    assert_eq!(read(&out, "curve.csv"), golden);
    let summary: serde_json::Value = serde_json::from_str(&read(&out, "summary.json")).unwrap();
    assert_eq!(summary["report"]["verdict"], "decreasing");
    assert_eq!(summary["strong_bound"]["all_satisfied"], true);
    assert!(!out.join("plot.svg").exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("split.json");
    fs::write(
        &cfg,
        r#"{"command": "synthetic-split", "items": {"generate": {"count": 12, "correct": 8}}, "kmax": 6, "reps": 1000}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let r = lab(&["synthetic-split", "--config", cfg.to_str().unwrap(), "--seed", "9", "--svg", "--out", out.to_str().unwrap()]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for name in ["error-overall.csv", "ce-correct.csv", "ce-incorrect.csv", "summary.json", "plot.svg"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
}

#[test]
fn seed_changes_mc_output() {
    let text = r#"{"command": "margins", "model": {"n_classes": 3, "score_distribution":
        {"family": "gaussian", "mean": [0.4, 0.0, 0.0], "cov": 1.0}}, "method": "mc", "kmax": 4, "reps": 2000}"#;
    let mut c = ScenarioConfig::from_json(text).unwrap();
    let first = run_scenario(&c).unwrap();
    assert_eq!(first.file("error.csv"), run_scenario(&c).unwrap().file("error.csv"));
    c.apply(&ensemble_cli::Overrides {
        seed: Some(1),
        ..Default::default()
    });
    assert_ne!(first.file("error.csv"), run_scenario(&c).unwrap().file("error.csv"));
}

#[test]
fn default_configs_round_trip() {
    for cmd in COMMANDS {
        let c = ScenarioConfig::default_for(cmd).unwrap();
        assert_eq!(c.command(), cmd);
        let back = ScenarioConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c, "{cmd}");
    }
}

#[test]
fn unknown_fields_are_rejected() {
    for text in [
        r#"{"command": "tails", "distribution": {"family": "bernoulli", "p": 0.3}, "epsilon": 0.1, "nmx": 10}"#,
        r#"{"command": "counterexamples", "colour": "red"}"#,
        r#"{"command": "synthetic-split", "items": {"generate": {"count": 5, "extra": 1}}}"#,
    ] {
        assert!(ScenarioConfig::from_json(text).is_err(), "{text}");
    }
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let bad = path("bad.json", r#"{"command": "tails", "bogus": 1}"#);
    assert_eq!(lab(&["tails", "--config", &bad, "--out", out]).status.code(), Some(2));

    let other = path("other.json", r#"{"command": "counterexamples"}"#);
    assert_eq!(lab(&["tails", "--config", &other, "--out", out]).status.code(), Some(2));

    let unsupported = path(
        "unsupported.json",
        r#"{"command": "curve", "loss": {"loss": "sigmoid", "label": 0, "scale": 0.5},
            "ensemble": {"source": {"distribution": {"family": "levy", "scale": 1.0}}}, "method": "exact"}"#,
    );
    let r = lab(&["curve", "--config", &unsupported, "--out", out]);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));

    let blocker = path("file", "");
    let r = lab(&["curve", "--kmax", "3", "--out", &format!("{blocker}/sub")]);
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn counterexamples_write_four_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cx");
    let r = lab(&["counterexamples", "--svg", "--out", out.to_str().unwrap()]);
    assert!(r.status.success());
    let summary: serde_json::Value = serde_json::from_str(&read(&out, "summary.json")).unwrap();
    for (name, verdict) in [
        ("condorcet-binomial", "non_monotone"),
        ("mass-restored", "eventually_decreasing"),
        ("levy", "increasing"),
        ("cauchy", "flat"),
    ] {
        assert!(read(&out, &format!("{name}.csv")).starts_with("K,value,std_err,method\n"));
        assert_eq!(summary["sequences"][name]["verdict"], verdict, "{name}");
    }
    assert!(read(&out, "plot.svg").starts_with("<svg"));
}

#[test]
fn tails_csv_schema() {
    let text = r#"{"command": "tails", "distribution": {"family": "gaussian", "mean": 0.0, "cov": 1.0}, "epsilon": 0.5, "nmax": 100}"#;
    let out = run_scenario(&ScenarioConfig::from_json(text).unwrap()).unwrap();
    let csv = out.file("tails.csv").unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,exact,asymptote,ratio");
    assert_eq!(lines.len(), 101);
    let last: Vec<f64> = lines[100].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 100.0);
    // Φ̄(5) against e^{−12.5}/(0.5√(200π))
    assert!((last[1] - 2.866515718791933e-7).abs() < 1e-18);
    assert!((last[3] - 1.0375).abs() < 1e-3);
}

#[test]
fn zero_variance_items_give_flat_curves() {
    let item = |m: f64| {
        format!(
            r#"{{"n_classes": 2, "score_distribution": {{"family": "gaussian", "mean": [{m}, 0.0], "cov": 0.0}}}}"#
        )
    };
    let text = format!(
        r#"{{"command": "synthetic-split", "items": {{"list": [{}, {}]}}, "kmax": 5, "reps": 200}}"#,
        item(0.5),
        item(-0.5)
    );
    let out = run_scenario(&ScenarioConfig::from_json(&text).unwrap()).unwrap();
    for name in ["error-overall", "error-correct", "error-incorrect", "ce-correct", "ce-incorrect"] {
        assert_eq!(out.summary["panels"][name]["verdict"], "flat", "{name}");
    }
}
