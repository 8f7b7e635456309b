use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ldrl::model_io::write_model;
use ldrl_core::gridworld::{preset, to_mdp};

fn two_state() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models/two_state.json")
}

fn ldrl(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldrl"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = ldrl(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV file as strings.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let data = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, data)
}

fn col(data: &[Vec<String>], k: usize) -> Vec<f64> {
    data.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn solve_two_state_model() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["solve", "--model", two_state().to_str().unwrap(), "--beta", "1"],
        dir.path(),
    );
    let s = json(&dir.path().join("spectral.json"));
    assert!((s["theta"].as_f64().unwrap() - 0.379885).abs() < 1e-6);
    assert!((s["u"][0].as_f64().unwrap() - 1.46212).abs() < 1e-5);
    let d = json(&dir.path().join("driven.json"));
    assert!(d["identity_error"].as_f64().unwrap().abs() < 1e-12);
    let (header, data) = rows(&dir.path().join("steady_state.csv"));
    assert_eq!(header, ["state", "action", "probability"]);
    assert!((col(&data, 2)[0] - 0.731059).abs() < 1e-6);
    for f in ["policy.csv", "values.csv", "model.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert!(!dir.path().join("states.csv").exists());
}

#[test]
fn solve_smallest_maze() {
    let dir = tempfile::tempdir().unwrap();
    let maze = dir.path().join("sg.txt");
    std::fs::write(&maze, "SG\n").unwrap();
    let out = dir.path().join("out");
    ok(&["solve", "--maze", maze.to_str().unwrap(), "--beta", "2"], &out);
    let (_, data) = rows(&out.join("policy.csv"));
    assert_eq!(data.len(), 8);
    let (header, states) = rows(&out.join("states.csv"));
    assert_eq!(header, ["state", "row", "col", "cell"]);
    assert_eq!(states, [["0", "0", "0", "S"], ["1", "0", "1", "G"]]);
}

#[test]
fn compare_sweep_converges() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "compare",
            "--maze",
            "empty10",
            "--beta",
            "10",
            "--horizons",
            "20,50,100,150,200,290",
        ],
        dir.path(),
    );
    let (header, data) = rows(&dir.path().join("compare.csv"));
    assert_eq!(header, ["horizon", "rmsd", "max_abs", "pearson_r"]);
    let rmsd = col(&data, 1);
    assert!(rmsd.windows(2).all(|w| w[1] < w[0]), "{rmsd:?}");
    assert!(rmsd[5] < 1e-8);
    assert!(col(&data, 3)[5] >= 1.0 - 1e-10);
}

#[test]
fn dp_at_one_step_is_the_reward_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["dp", "--maze", "frozen4", "--horizon", "1"], dir.path());
    let (_, data) = rows(&dir.path().join("dp_values.csv"));
    let m = to_mdp(&preset("frozen4").unwrap(), 1.0).unwrap().model;
    assert_eq!(col(&data, 3), m.rewards());
}

#[test]
fn two_state_spectral_values_are_exact_at_two_steps() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["compare", "--model", two_state().to_str().unwrap(), "--horizon", "2"],
        dir.path(),
    );
    let (_, data) = rows(&dir.path().join("compare.csv"));
    assert!(col(&data, 1)[0] <= 1e-12);
}

#[test]
fn model_file_matches_maze() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("frozen4.json");
    write_model(&model, &to_mdp(&preset("frozen4").unwrap(), 3.0).unwrap().model).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["solve", "--model", model.to_str().unwrap(), "--horizon", "50"], &a);
    ok(&["solve", "--maze", "frozen4", "--beta", "3", "--horizon", "50"], &b);
    for f in ["spectral.json", "driven.json", "policy.csv", "values.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn simulate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let model = two_state();
    ok(
        &[
            "simulate",
            "--model",
            model.to_str().unwrap(),
            "--horizon",
            "100",
            "--trajectories",
            "500",
        ],
        dir.path(),
    );
    let (header, data) = rows(&dir.path().join("occupation.csv"));
    assert_eq!(header, ["state", "action", "frequency"]);
    let f = col(&data, 2);
    // 50 000 independent draws: σ ≈ 0.002.
    assert!((f[0] - 0.731).abs() < 0.01 && (f[1] - 0.269).abs() < 0.01, "{f:?}");
    let (header, data) = rows(&dir.path().join("marginals.csv"));
    assert_eq!(header, ["t", "state", "action", "probability"]);
    assert_eq!(data.len(), 200);
    let (header, data) = rows(&dir.path().join("sweep.csv"));
    assert_eq!(header, ["beta", "energy_rate", "kl_rate", "theta"]);
    assert!((col(&data, 3)[0] - 0.379885).abs() < 1e-6);

    let prior = dir.path().join("prior");
    ok(
        &[
            "simulate",
            "--maze",
            "frozen4",
            "--beta",
            "2",
            "--kernel",
            "prior",
            "--trajectories",
            "50",
        ],
        &prior,
    );
    let (_, data) = rows(&prior.join("empirical.csv"));
    assert_eq!(data[0][0], "prior");
    assert_eq!(col(&data, 5)[0], 0.0);
}

#[test]
fn commands_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str, args: &[&str]| {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_ldrl"))
            .args(args)
            .arg("--out")
            .arg(&out)
            .env("LDRL_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        out
    };
    let sim = [
        "simulate",
        "--maze",
        "ring6",
        "--beta",
        "3",
        "--horizon",
        "60",
        "--trajectories",
        "64",
        "--seed",
        "9",
    ];
    let learn = [
        "learn",
        "--maze",
        "frozen4",
        "--beta",
        "2",
        "--horizon",
        "50",
        "--episodes",
        "20",
        "--replicas",
        "4",
    ];
    for (args, files) in [
        (
            &sim[..],
            &["marginals.csv", "occupation.csv", "empirical.csv", "sweep.csv"][..],
        ),
        (
            &learn[..],
            &["learn_history.csv", "policy.csv", "learn_summary.json"][..],
        ),
    ] {
        let a = run(&format!("{}-1", args[0]), "1", args);
        let b = run(&format!("{}-4", args[0]), "4", args);
        let c = run(&format!("{}-4b", args[0]), "4", args);
        for f in files {
            let x = std::fs::read(a.join(f)).unwrap();
            assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
            assert_eq!(x, std::fs::read(c.join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn learn_reports_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(
        &[
            "learn",
            "--maze",
            "frozen4",
            "--beta",
            "2",
            "--horizon",
            "100",
            "--episodes",
            "5",
            "--replicas",
            "3",
        ],
        dir.path(),
    );
    assert!(stdout.contains("not met"), "{stdout}");
    let s = json(&dir.path().join("learn_summary.json"));
    assert_eq!(s["converged"], false);
    assert_eq!(s["replicas"].as_array().unwrap().len(), 3);
    let (header, data) = rows(&dir.path().join("learn_history.csv"));
    assert_eq!(header, ["replica", "step", "theta_est", "mean_return"]);
    // 500 steps logged every 5, plus step 0, per replica.
    assert_eq!(data.len(), 3 * 101);
}

#[test]
fn sweep_keeps_beta_order() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["sweep", "--maze", "pillars7", "--beta-list", "8,0.5,2"], dir.path());
    let (_, data) = rows(&dir.path().join("sweep.csv"));
    assert_eq!(col(&data, 0), [8.0, 0.5, 2.0]);
    let (e, kl, theta) = (col(&data, 1), col(&data, 2), col(&data, 3));
    for i in 0..3 {
        assert!((theta[i] - e[i] - kl[i] / col(&data, 0)[i]).abs() < 1e-10);
    }
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.txt"), "S.\n.G\n").unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{"maze": "m.txt", "beta": 4, "horizon": 30, "solver": {"tol": 1e-11}, "simulate": {"trajectories": 10}}"#,
    )
    .unwrap();
    ok(
        &["solve", "--config", cfg.to_str().unwrap(), "--beta", "1.5"],
        dir.path(),
    );
    assert_eq!(json(&dir.path().join("spectral.json"))["beta"], 1.5);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"maze": "frozen4", "bta": 2}"#).unwrap();
    let out = dir.path().join("bad");
    let o = ldrl(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let e = json(&out.join("error.json"));
    assert_eq!(e["kind"], "config");
    assert!(e["message"].as_str().unwrap().contains("bta"));

    let o = ldrl(
        &["solve", "--model", "/no/such/model.json"],
        &dir.path().join("missing"),
    );
    assert_eq!(o.status.code(), Some(2));

    let out = dir.path().join("open");
    let o = ldrl(&["solve", "--maze", "frozen4", "--cyclic", "false"], &out);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(&out.join("error.json"))["kind"], "numeric");

    let o = Command::new(env!("CARGO_BIN_EXE_ldrl"))
        .args(["sweep", "--maze", "frozen4", "--out"])
        .arg(dir.path().join("threads"))
        .env("LDRL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
