use std::path::Path;
use std::process::{Command, Output};

use wcprox::formats;

fn wcprox(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcprox")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn small_solve_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = wcprox(dir.path(), &["solve", "--size", "32", "--max-iters", "20", "--out", "run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in
        ["restored.wct", "observation.wct", "trace.csv", "restored.pgm", "observation.pgm", "manifest.txt"]
    {
        assert!(dir.path().join("run").join(name).is_file(), "missing {name}");
    }
    let text = stdout(&out);
    assert!(text.contains("PSNR"), "{text}");
}

#[test]
fn super_resolution_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = wcprox(
        dir.path(),
        &[
            "solve",
            "--problem",
            "sr",
            "--scale",
            "2",
            "--kernel",
            "gaussian:0.7,5",
            "--size",
            "16",
            "--max-iters",
            "10",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("wcprox-out");
    let obs = formats::load_image(&run.join("observation.wct")).unwrap();
    let restored = formats::load_image(&run.join("restored.wct")).unwrap();
    assert_eq!((obs.shape().height, obs.shape().width), (8, 8));
    assert_eq!((restored.shape().height, restored.shape().width), (16, 16));
}

#[test]
fn weight_above_limit_is_rejected_with_limits() {
    let dir = tempfile::tempdir().unwrap();
    let out = wcprox(dir.path(), &["solve", "--size", "32", "--algo", "pnp-pgd", "--lambda", "10"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lambda"), "{err}");
    assert!(!dir.path().join("wcprox-out").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&wcprox(dir.path(), &["solve", "--algo", "newton"])), 1);
    assert_eq!(code(&wcprox(dir.path(), &["check", "no-such-property"])), 1);
    assert_eq!(code(&wcprox(dir.path(), &["solve", "--config", "missing.txt"])), 1);
    assert_eq!(code(&wcprox(dir.path(), &["frobnicate"])), 1);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "problem = deblur\nlamda = 2\n").unwrap();
    let out = wcprox(dir.path(), &["solve", "--config", "run.cfg"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("lamda"));
}

#[test]
fn halved_lipschitz_constant_fails_descent_lemma() {
    let dir = tempfile::tempdir().unwrap();
    let out = wcprox(dir.path(), &["check", "descent-lemma", "--lf-scale", "0.5", "--trials", "200"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("FAIL"));
    let ok = wcprox(dir.path(), &["check", "descent-lemma", "--trials", "200"]);
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
}

#[test]
fn witnesses_go_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = wcprox(
        dir.path(),
        &[
            "check",
            "three-points",
            "--m-scale",
            "0.25",
            "--trials",
            "2000",
            "--dims",
            "1",
            "--witnesses",
            "w.csv",
        ],
    );
    assert_eq!(code(&out), 3);
    let csv = std::fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert!(csv.lines().count() > 1, "{csv}");
}

#[test]
fn bounds_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = wcprox(dir.path(), &["bounds"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("1.500000") && text.contains("2.000000"), "{text}");

    let out = wcprox(dir.path(), &["bounds", "--m", "0", "--alpha", "1", "--tau", "1"]);
    assert!(stdout(&out).contains("requires lambda*L_f < 1.000000"), "{}", stdout(&out));
}

#[test]
fn bounds_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = wcprox(dir.path(), &["bounds", "--sweep", "gamma:0.25:1:4", "--csv", "sweep.csv"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5, "{csv}");
}

#[test]
fn curves_from_two_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (algo, out) in [("pgd", "a"), ("alpha-pgd", "b")] {
        let run = wcprox(
            dir.path(),
            &[
                "solve",
                "--size",
                "32",
                "--max-iters",
                "15",
                "--algo",
                algo,
                "--regularizer",
                "induced",
                "--out",
                out,
            ],
        );
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    }
    let out = wcprox(dir.path(), &["curves", "a/trace.csv", "b/trace.csv", "--out", "plots"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let plots = dir.path().join("plots");
    for name in ["curve1.dat", "curve2.dat", "comparison.dat", "curves.gp"] {
        assert!(plots.join(name).is_file(), "missing {name}");
    }
    let cmp = std::fs::read_to_string(plots.join("comparison.dat")).unwrap();
    assert!(cmp.starts_with("# k F[a] F[b]"), "{cmp}");
}

#[test]
fn curves_reject_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    assert_eq!(code(&wcprox(dir.path(), &["curves", "empty.csv"])), 1);
}
