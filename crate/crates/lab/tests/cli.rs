//! The binary end to end: files written, verdicts, exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

use cascade_lab::commands::{SpectrumReport, SweepReport, ThresholdReport, Verdict};
use cascade_lab::tables::{read_branch, read_heatmap, read_trajectory};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cascade-lab"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn conf(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str], out: &Path) -> Run {
    let o = bin()
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs");
    Run {
        code: o.status.code().expect("exit code"),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json<T: serde::de::DeserializeOwned>(path: PathBuf) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_conf(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.conf");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn spectrum_of_the_path_reports_critical_attention() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["spectrum", "--graph", s(&data("p3.txt"))], dir.path());
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("u_a = 0.414213562373"), "{}", r.stdout);
    let rep: SpectrumReport = json(dir.path().join("spectrum.json"));
    // path graph eigenvalues are 2 cos(k pi / (n + 1))
    let lmax = 2.0 * (std::f64::consts::PI / 4.0).cos();
    assert!((rep.agreement.eigenvalue - lmax).abs() < 1e-12);
    assert!((rep.agreement.critical_attention.unwrap() - 1.0 / (1.0 + lmax)).abs() < 1e-12);
    assert!((rep.disagreement.critical_attention.unwrap() - 1.0 / (1.0 + lmax)).abs() < 1e-12);
    assert!(rep.warnings.is_empty());
}

#[test]
fn complete_graph_refuses_disagreement_centrality() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["spectrum", "--graph", s(&data("k4.txt"))], dir.path());
    assert_eq!(r.code, 0);
    assert!(r.stderr.contains("multiplicity 3"), "{}", r.stderr);
    let rep: SpectrumReport = json(dir.path().join("spectrum.json"));
    assert_eq!(rep.disagreement.multiplicity, 3);
    assert!(rep.disagreement.centrality.is_none());
    assert!(rep.agreement.centrality.is_some());
    assert!((rep.agreement.critical_attention.unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn malformed_inputs_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("bad.txt");
    std::fs::write(&g, "N 3 undirected\n0 1\n1 2 3\n").unwrap();
    let r = run(&["spectrum", "--graph", s(&g)], dir.path());
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("bad.txt:3:"), "{}", r.stderr);

    let c = write_conf(dir.path(), "[model]\ndamping = 1\nspeed = 3\n");
    let r = run(
        &["simulate", "--graph", s(&data("p3.txt")), "--config", s(&c)],
        dir.path(),
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("run.conf:3:"), "{}", r.stderr);

    let r = run(&["simulate"], dir.path());
    assert_eq!(r.code, 2, "missing graph");
    let r = run(&["nonsense"], dir.path());
    assert_eq!(r.code, 2);
    let r = run(
        &["spectrum", "--graph", s(&dir.path().join("missing.txt"))],
        dir.path(),
    );
    assert_eq!(r.code, 2);
}

#[test]
fn numerical_failure_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    // no cascade below a tiny bracket
    let c = write_conf(
        dir.path(),
        "[attention]\nthreshold = 0.1\n[threshold]\nbracket_hi = 1e-5\nfold_check = false\n",
    );
    let r = run(
        &[
            "threshold",
            "--graph",
            s(&data("p3.txt")),
            "--config",
            s(&c),
        ],
        dir.path(),
    );
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(r.stderr.contains("no cascade"), "{}", r.stderr);
}

#[test]
fn simulate_agreement_and_disagreement_cascades() {
    for (file, class) in [
        ("cascade_agreement.conf", "agreement"),
        ("cascade_disagreement.conf", "disagreement"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let r = run(
            &["simulate", "--config", s(&conf(file)), "--seed", "3"],
            dir.path(),
        );
        assert_eq!(r.code, 0, "{}", r.stderr);
        let v: Verdict = json(dir.path().join("verdict.json"));
        assert!(v.cascaded, "{file}");
        assert_eq!(v.classification, class);
        let traj = read_trajectory(std::fs::File::open(dir.path().join("trajectory.csv")).unwrap())
            .unwrap();
        let (t, last) = traj.last().unwrap();
        assert_eq!(t, 50.0);
        assert_eq!(last.x.as_slice(), v.final_state.x.as_slice());
    }
}

#[test]
fn zero_input_stays_neutral() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_conf(dir.path(), "[integrator]\nt_end = 200\n");
    let r = run(
        &["simulate", "--graph", s(&data("p3.txt")), "--config", s(&c)],
        dir.path(),
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Verdict = json(dir.path().join("verdict.json"));
    assert!(!v.cascaded);
    assert_eq!(v.classification, "none");
    assert!(v.final_state.x.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn t_end_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        &[
            "simulate",
            "--config",
            s(&conf("cascade_agreement.conf")),
            "--seed",
            "3",
            "--t-end",
            "7.5",
        ],
        dir.path(),
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Verdict = json(dir.path().join("verdict.json"));
    assert_eq!(v.final_time, 7.5);
    let r = run(
        &[
            "simulate",
            "--config",
            s(&conf("cascade_agreement.conf")),
            "--t-end",
            "-1",
        ],
        dir.path(),
    );
    assert_eq!(r.code, 2);
}

#[test]
fn bifurcation_diagrams() {
    // symmetric input: two mirrored branches off a branch point
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        &[
            "bifurcate",
            "--config",
            s(&conf("unfolding_symmetric.conf")),
        ],
        dir.path(),
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let summary = std::fs::read_to_string(dir.path().join("branches.txt")).unwrap();
    assert_eq!(summary.matches("branch_point").count(), 1, "{summary}");
    let plus =
        read_branch(std::fs::File::open(dir.path().join("branch_bp0_plus.csv")).unwrap()).unwrap();
    let minus =
        read_branch(std::fs::File::open(dir.path().join("branch_bp0_minus.csv")).unwrap()).unwrap();
    assert!(plus.iter().all(|r| r.projection > 0.0));
    assert!(minus.iter().all(|r| r.projection < 0.0));
    let (a, b) = (plus.last().unwrap(), minus.last().unwrap());
    assert_eq!(a.parameter, b.parameter);
    assert!((a.projection + b.projection).abs() < 1e-8);

    // biased input: a smooth positive branch and a folded one
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        &["bifurcate", "--config", s(&conf("unfolding_biased.conf"))],
        dir.path(),
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let primary =
        read_branch(std::fs::File::open(dir.path().join("branch_primary.csv")).unwrap()).unwrap();
    assert!(primary.iter().all(|r| r.projection > 0.0));
    assert!(primary.windows(2).all(|w| w[1].parameter > w[0].parameter));
    let summary = std::fs::read_to_string(dir.path().join("branches.txt")).unwrap();
    assert!(
        summary.contains("branch mirrored") && summary.contains("fold param="),
        "{summary}"
    );

    // coupled continuation in the input magnitude folds
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        &["bifurcate", "--config", s(&conf("fold_in_input.conf"))],
        dir.path(),
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows =
        read_branch(std::fs::File::open(dir.path().join("branch_input.csv")).unwrap()).unwrap();
    assert!(rows[0].u.is_some());
    let summary = std::fs::read_to_string(dir.path().join("branches.txt")).unwrap();
    assert!(summary.contains("fold param="), "{summary}");
}

#[test]
fn threshold_brackets_the_cascade() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        &["threshold", "--config", s(&conf("threshold.conf"))],
        dir.path(),
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t: ThresholdReport = json(dir.path().join("threshold.json"));
    assert!(t.threshold > 0.0 && t.threshold <= 0.1);
    assert!(t.above.cascaded && !t.below.cascaded);
    assert!(t.bracket[1] - t.bracket[0] <= 1e-3 * t.bracket[1]);
    assert!((t.alignment - 1.0).abs() < 1e-12);
    let fold = t.fold.expect("fold within the bracket");
    assert!((fold - t.threshold).abs() < 0.05 * t.threshold);
}

#[test]
fn zero_magnitude_sweep_never_cascades() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_conf(
        dir.path(),
        "[attention]\nthreshold = 0.2\n[sweep]\nmagnitudes = 0\nruns_per_magnitude = 10\n",
    );
    let r = run(
        &["sweep", "--graph", s(&data("p3.txt")), "--config", s(&c)],
        dir.path(),
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let grid = read_heatmap(std::fs::File::open(dir.path().join("heatmap.csv")).unwrap()).unwrap();
    assert_eq!(grid.total_count(), 10);
    for b in 0..grid.alignment_bins {
        if let Some(f) = grid.no_cascade_fraction(b, 0) {
            assert_eq!(f, 1.0);
        }
    }
    assert!(r.stderr.contains("magnitude 1/1 done"), "{}", r.stderr);
}

#[test]
fn sweep_output_is_byte_identical_across_threads() {
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let r = run(
            &[
                "sweep",
                "--config",
                s(&conf("sweep_disagreement.conf")),
                "--seed",
                "21",
                "--threads",
                threads,
            ],
            dir.path(),
        );
        assert_eq!(r.code, 0, "{}", r.stderr);
        let heat = std::fs::read(dir.path().join("heatmap.csv")).unwrap();
        let runs = std::fs::read(dir.path().join("runs.csv")).unwrap();
        let rep: SweepReport = json(dir.path().join("sweep.json"));
        outputs.push((heat, runs, rep));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    assert_eq!(outputs[0].1, outputs[1].1);
    let rep = &outputs[0].2;
    assert_eq!(rep.regime, "disagreement");
    assert_eq!(rep.total_runs, 400);
    // a transition band: some runs cascade, zero input never does
    assert!(rep.cascaded_runs > 0 && rep.cascaded_runs < rep.total_runs);
    let grid = read_heatmap(outputs[0].0.as_slice()).unwrap();
    assert_eq!(grid.no_cascade_fraction(0, 0), Some(1.0));

    let dir = tempfile::tempdir().unwrap();
    let r = run(
        &[
            "sweep",
            "--config",
            s(&conf("sweep_disagreement.conf")),
            "--seed",
            "22",
            "--threads",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(r.code, 0);
    assert_ne!(
        std::fs::read(dir.path().join("runs.csv")).unwrap(),
        outputs[0].1,
        "seed matters"
    );
}
