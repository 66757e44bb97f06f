use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use framekit::catalog::normalized_haar;
use framekit::cli::{ConstantArtifact, ExpandArtifact};
use framekit::frames::Element;
use framekit::verify::ReportBundle;
use tempfile::TempDir;

fn framekit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_framekit"))
        .args(args)
        .current_dir(dir)
        .env_remove("FRAMEKIT_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn expand(dir: &Path, args: &[&str]) -> ExpandArtifact {
    let out = framekit(dir, &[&["expand"], args].concat());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn tabulate_column(dir: &Path, args: &[&str], metric: &str) -> Vec<f64> {
    let out = framekit(dir, &[&["tabulate"], args].concat());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    reader
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[1] == metric)
        .map(|r| r[2].parse().unwrap())
        .collect()
}

#[test]
fn expand_examples() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("l.json"), "[[1, 5.0], [2, 7.0], [3, 11.0]]").unwrap();
    let a = expand(
        dir.path(),
        &["--frame", "l1-canonical", "--n", "3", "--input", "l.json"],
    );
    assert_eq!(a.coefficients, vec![5.0, 7.0, 11.0]);
    assert_eq!(a.residual, 0.0);

    let a = expand(
        dir.path(),
        &["--frame", "l1-canonical", "--n", "0", "--input", "l.json"],
    );
    assert!(a.coefficients.is_empty());
    assert_eq!(a.residual, 23.0);

    let h3 = Element::Grid(normalized_haar(3, 4).unwrap());
    fs::write(
        dir.path().join("h3.json"),
        serde_json::to_string(&h3).unwrap(),
    )
    .unwrap();
    let a = expand(
        dir.path(),
        &["--frame", "haar:p=2:J=4", "--n", "16", "--input", "h3.json"],
    );
    assert!(a.residual <= 1e-12);
    assert!(matches!(a.partial_sum, Element::Grid(_)));
}

#[test]
fn expand_writes_csv_file() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("l.json"), "[[2, -4.0]]").unwrap();
    let out = framekit(
        dir.path(),
        &[
            "expand",
            "--frame",
            "l1-canonical",
            "--n",
            "2",
            "--input",
            "l.json",
            "--format",
            "csv",
            "--out",
            "x.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("x.csv")).unwrap();
    assert_eq!(
        text,
        "metric,N,value\ncoefficient,1,0\ncoefficient,2,-4\nresidual,2,0\n"
    );
}

#[test]
fn malformed_inputs_exit_one_with_one_line() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("bad.json"),
        "{\"level\": 1, \"coefficients\": [1]}",
    )
    .unwrap();
    for args in [
        vec!["expand", "--frame", "haar:p=2:J=2", "--input", "bad.json"],
        vec!["expand", "--frame", "haar:p=0.5:J=2", "--n", "1"],
        vec!["expand", "--frame", "haar:p=2:J=2", "--n", "5"],
        vec![
            "constant",
            "--frame",
            "l1-canonical",
            "--n",
            "2",
            "--samples",
            "0",
        ],
        vec!["suite", "bogus"],
        vec!["frobnicate"],
        vec!["suite", "all", "--schedule", "4,2"],
    ] {
        let out = framekit(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = stderr(&out);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
    assert_eq!(framekit(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn constant_examples() {
    let dir = TempDir::new().unwrap();
    let constant = |label: &str, n: &str| -> ConstantArtifact {
        let out = framekit(
            dir.path(),
            &["constant", "--frame", label, "--n", n, "--samples", "100"],
        );
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        serde_json::from_slice(&out.stdout).unwrap()
    };
    assert_eq!(constant("l1-canonical", "10").estimated_constant, 1.0);
    let haar = constant("haar:p=2:J=6", "40");
    assert!((haar.estimated_constant - 1.0).abs() <= 1e-9);
    assert_eq!((haar.samples, haar.seed), (100, 42));
    assert_eq!(constant("zero:haar:p=3:J=3", "8").estimated_constant, 0.0);
}

#[test]
fn seed_precedence() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("run.conf"),
        "frame = haar:p=3:J=3\nn = 8\nsamples = 7\nseed = 5\n",
    )
    .unwrap();
    let seed_of = |args: &[&str], env: Option<&str>| -> u64 {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_framekit"));
        cmd.args(args)
            .current_dir(dir.path())
            .env_remove("FRAMEKIT_SEED");
        if let Some(v) = env {
            cmd.env("FRAMEKIT_SEED", v);
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let a: ConstantArtifact = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(a.samples, 7);
        a.seed
    };
    let bare = [
        "constant",
        "--frame",
        "haar:p=3:J=3",
        "--n",
        "8",
        "--samples",
        "7",
    ];
    assert_eq!(seed_of(&bare, None), 42);
    assert_eq!(seed_of(&bare, Some("9")), 9);
    assert_eq!(seed_of(&["constant", "--config", "run.conf"], Some("9")), 5);
    assert_eq!(
        seed_of(
            &["constant", "--config", "run.conf", "--seed", "3"],
            Some("9")
        ),
        3
    );
}

#[test]
fn james_on_l1_records_witness_and_succeeds() {
    let dir = TempDir::new().unwrap();
    let out = framekit(
        dir.path(),
        &[
            "suite",
            "james",
            "--frame",
            "l1-canonical",
            "--samples",
            "50",
            "--out",
            "rep",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let bundle: ReportBundle =
        serde_json::from_str(&fs::read_to_string(dir.path().join("rep/report.json")).unwrap())
            .unwrap();
    assert_eq!(bundle.reports.len(), 1);
    assert!(bundle.reports[0]
        .verdict
        .as_deref()
        .unwrap()
        .contains("witness found"));
    let csv = fs::read_to_string(dir.path().join("rep/report.csv")).unwrap();
    assert!(csv.starts_with("suite,frame,N,metric,value,pass\n"));
    assert!(dir.path().join("rep/timings.json").exists());
}

#[test]
fn failing_suite_exits_two() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("strict.conf"),
        "frame = haar:p=3:J=3\nsamples = 5\n",
    )
    .unwrap();
    let out = framekit(
        dir.path(),
        &[
            "suite",
            "unconditionality",
            "--config",
            "strict.conf",
            "--schedule",
            "2,4",
        ],
    );
    // no truncation up to 4 reconstructs level-3 inputs, so the suite is inconclusive
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = framekit(
        dir.path(),
        &["suite", "unconditionality", "--config", "strict.conf"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn tabulate_examples() {
    let dir = TempDir::new().unwrap();
    let residual = tabulate_column(
        dir.path(),
        &[
            "--frame",
            "haar:p=2:J=5",
            "--metric",
            "residual",
            "--schedule",
            "1,2,3,4,6,8,12,16,20,24,28,32",
        ],
        "residual",
    );
    assert_eq!(residual.len(), 12);
    assert!(residual.windows(2).all(|w| w[1] < w[0]), "{residual:?}");
    assert!(*residual.last().unwrap() <= 1e-10);

    let blocks = tabulate_column(
        dir.path(),
        &[
            "--frame",
            "haar:p=3:J=5",
            "--metric",
            "residual",
            "--schedule",
            "1,2,4,8,16,32",
        ],
        "residual",
    );
    assert!(blocks.windows(2).all(|w| w[1] <= w[0]), "{blocks:?}");

    let tail = tabulate_column(
        dir.path(),
        &[
            "--frame",
            "l1-canonical",
            "--metric",
            "tail",
            "--schedule",
            "1,4,16,64",
            "--samples",
            "20",
        ],
        "shrinking_tail[all-ones]",
    );
    assert_eq!(tail, vec![1.0; 4]);

    let out = framekit(
        dir.path(),
        &["tabulate", "--frame", "haar:p=2:J=4", "--schedule", ""],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "N,metric,value\n");
}
