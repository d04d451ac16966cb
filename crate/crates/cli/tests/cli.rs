use std::fs;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

fn itpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itpp")).args(args).output().unwrap()
}

fn itpp_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itpp"))
        .args(args)
        .env(key, value)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

/// Coefficient rows of a checkpoint, without the metadata header.
fn checkpoint_rows(p: &Path) -> String {
    read(p).split("\n---\n").nth(1).unwrap().to_string()
}

fn summary_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

#[test]
fn trajectory_schema_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = itpp(&[
        "run-itpp",
        "--n",
        "4",
        "--tau_final",
        "0.4",
        "--observables",
        "1 ZIII; 1 XIII",
        "--squared_estimator",
        "on",
        "--out_dir",
        path(&out),
    ]);
    ok(&o);
    let csv = read(&out.join("trajectory.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# itpp-trajectory v1 tau_convention=beta"));
    let columns = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        columns,
        "tau,energy,rel_error,n_terms,purity,wall_time_s,obs_1,obs_2,energy_2tau"
    );
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][..6], ["0", "0", "1", "1", "1", "0"]);
    for r in &rows {
        assert_eq!(r.len(), 9);
        assert_eq!(r[5], "0");
    }
    let last = rows.last().unwrap();
    assert_eq!(last[0], "0.4");
    let summary = read(&out.join("summary.txt"));
    assert_eq!(summary, String::from_utf8(o.stdout).unwrap());
    assert_eq!(summary_value(&summary, "status"), "ok");
    assert_eq!(summary_value(&summary, "reference_source"), "ed");
    assert_eq!(summary_value(&summary, "final_energy"), last[1]);
    assert_eq!(summary_value(&summary, "final_n_terms"), last[3]);
    assert_eq!(summary_value(&summary, "steps_completed"), "10");
    assert!(summary_value(&summary, "runtime_s").parse::<f64>().unwrap() >= 0.0);
}

#[test]
fn per_gate_sampling_adds_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = itpp(&[
        "run-itpp",
        "--n",
        "3",
        "--tau_final",
        "0.08",
        "--sample",
        "gate",
        "--out_dir",
        path(dir.path()),
    ]);
    ok(&o);
    let csv = read(&dir.path().join("trajectory.csv"));
    let taus: Vec<f64> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    // 5 gates per step: 1 initial row + 2 steps x 5 samples
    assert_eq!(taus.len(), 11);
    assert!(taus.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(taus[5], 0.04);
    assert_eq!(taus[10], 0.08);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        "[model]\nn = 6\nh = 1.0\n\n[schedule]\ndelta_tau = 0.05\ntau_final = 0.5\n\n[truncation]\npolicy = threshold=2^-10\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    ok(&itpp(&["run-itpp", "--config", path(&conf), "--n", "4", "--out_dir", path(&out)]));
    let summary = read(&out.join("summary.txt"));
    assert_eq!(summary_value(&summary, "model"), "tfim n=4 j=1 h=1");
    assert_eq!(summary_value(&summary, "policy"), "threshold=9.765625e-4");
    assert_eq!(summary_value(&summary, "delta_tau"), "0.05");
    assert_eq!(summary_value(&summary, "steps_completed"), "10");
    let echoed = read(&out.join("config.txt"));
    assert!(echoed.contains("n = 4\n") && echoed.contains("tau_final = 0.5\n"));

    fs::write(&conf, "[schedule]\nn = 4\n").unwrap();
    assert_eq!(itpp(&["run-itpp", "--config", path(&conf)]).status.code(), Some(2));
    fs::write(&conf, "[model]\ncolour = blue\n").unwrap();
    assert_eq!(itpp(&["run-itpp", "--config", path(&conf)]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["run-itpp", "--delta_tau", "0"],
        vec!["run-itpp", "--policy", "sometimes"],
        vec!["run-itpp", "--n", "1"],
        vec!["run-itpp", "--unknown", "1"],
        vec!["run-itpp", "--config", "/nonexistent/itpp.conf"],
        vec!["sweep", "--axis", "colour", "--values", "1"],
    ] {
        assert_eq!(itpp(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    // 9 qubits reach 48,620 terms, above the parallel cutoff
    for (k, threads) in ["1", "3", "1"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let o = itpp_env(
            &[
                "run-itpp",
                "--n",
                "9",
                "--tau_final",
                "0.4",
                "--checkpoint_every",
                "5",
                "--reference",
                "none",
                "--out_dir",
                path(&out),
            ],
            "RAYON_NUM_THREADS",
            threads,
        );
        ok(&o);
        outputs.push((read(&out.join("trajectory.csv")), checkpoint_rows(&out.join("checkpoint.txt"))));
    }
    assert!(outputs[0].1.lines().count() > 16384);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn resume_extends_a_run_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    let part = dir.path().join("part");
    let common = ["--n", "5", "--policy", "threshold=1e-6", "--observables", "1 ZZIII", "--checkpoint_every", "4"];
    let mut args = vec!["run-itpp", "--tau_final", "1", "--out_dir", path(&full)];
    args.extend(common);
    ok(&itpp(&args));
    let mut args = vec!["run-itpp", "--tau_final", "0.4", "--out_dir", path(&part)];
    args.extend(common);
    ok(&itpp(&args));
    let ck = part.join("checkpoint.txt");
    assert!(read(&ck).contains("meta.step = 10\n"));
    let o = itpp(&["resume", "--checkpoint", path(&ck), "--tau_final", "1"]);
    ok(&o);
    assert_eq!(read(&full.join("trajectory.csv")), read(&part.join("trajectory.csv")));
    assert_eq!(checkpoint_rows(&full.join("checkpoint.txt")), checkpoint_rows(&ck));
    let a = read(&full.join("summary.txt"));
    let b = read(&part.join("summary.txt"));
    for key in ["final_energy", "final_n_terms", "max_n_terms", "steps_completed", "trajectory_rows"] {
        assert_eq!(summary_value(&a, key), summary_value(&b, key), "{key}");
    }
    assert_eq!(summary_value(&b, "command"), "resume");
}

#[test]
fn resume_after_interruption_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    let cut = dir.path().join("cut");
    let args = |out: &Path| {
        vec![
            "run-itpp".to_string(),
            "--n".into(),
            "8".into(),
            "--tau_final".into(),
            "2".into(),
            "--checkpoint_every".into(),
            "5".into(),
            "--reference".into(),
            "none".into(),
            "--out_dir".into(),
            path(out).into(),
        ]
    };
    ok(&Command::new(env!("CARGO_BIN_EXE_itpp")).args(args(&full)).output().unwrap());

    let mut child = Command::new(env!("CARGO_BIN_EXE_itpp"))
        .args(args(&cut))
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let ck = cut.join("checkpoint.txt");
    let start = Instant::now();
    while !ck.exists() && start.elapsed() < Duration::from_secs(120) {
        std::thread::sleep(Duration::from_millis(5));
    }
    child.kill().ok();
    child.wait().unwrap();
    assert!(ck.exists());
    ok(&itpp(&["resume", "--checkpoint", path(&ck)]));
    assert_eq!(read(&full.join("trajectory.csv")), read(&cut.join("trajectory.csv")));
    assert_eq!(checkpoint_rows(&full.join("checkpoint.txt")), checkpoint_rows(&ck));
}

#[test]
fn trace_collapse_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = itpp(&["run-itpp", "--n", "3", "--trace_epsilon", "10", "--out_dir", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let csv = read(&dir.path().join("trajectory.csv"));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 1);
    let summary = read(&dir.path().join("summary.txt"));
    assert!(summary_value(&summary, "status").starts_with("failed"));
    assert_eq!(summary_value(&summary, "trajectory_rows"), "1");
}

#[test]
fn exact_writes_both_dense_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let o = itpp(&["exact", "--n", "4", "--tau_final", "1", "--observables", "1 ZZII", "--out_dir", path(dir.path())]);
    ok(&o);
    ok(&itpp(&["run-itpp", "--n", "4", "--tau_final", "1", "--observables", "1 ZZII", "--out_dir", path(&dir.path().join("itpp"))]));
    let columns = |p: &Path| read(p).lines().find(|l| !l.starts_with('#')).unwrap().to_string();
    let itpp_cols = columns(&dir.path().join("itpp/trajectory.csv"));
    let rows = |p: &Path| -> Vec<Vec<f64>> {
        read(p)
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(|f| f.parse().unwrap_or(f64::NAN)).collect())
            .collect()
    };
    let itpp_rows = rows(&dir.path().join("itpp/trajectory.csv"));
    for file in ["exact_ite.csv", "dense_trotter.csv"] {
        assert_eq!(columns(&dir.path().join(file)), itpp_cols);
        assert_eq!(rows(&dir.path().join(file)).len(), 26);
    }
    // the Pauli propagation reproduces the dense Trotter product
    for (a, b) in itpp_rows.iter().zip(rows(&dir.path().join("dense_trotter.csv"))) {
        assert_eq!(a[0], b[0]);
        assert!((a[1] - b[1]).abs() <= 1e-10 * b[1].abs().max(1e-300) + 1e-15, "{a:?} vs {b:?}");
        assert!((a[6] - b[6]).abs() <= 1e-10);
    }
    let exact = rows(&dir.path().join("exact_ite.csv"));
    assert!((exact[25][1] - itpp_rows[25][1]).abs() < 1e-2);
}

#[test]
fn exact_single_spin_from_term_file() {
    let dir = tempfile::tempdir().unwrap();
    let terms = dir.path().join("h.txt");
    fs::write(&terms, "# one spin in a field\n-1 Z\n").unwrap();
    let o = itpp(&[
        "exact",
        "--model",
        "file",
        "--term_file",
        path(&terms),
        "--delta_tau",
        "0.1",
        "--tau_final",
        "2",
        "--out_dir",
        path(dir.path()),
    ]);
    ok(&o);
    let csv = read(&dir.path().join("exact_ite.csv"));
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    for r in &rows {
        assert!((r[1] + r[0].tanh()).abs() < 1e-14, "{r:?}");
    }
    let summary = read(&dir.path().join("summary.txt"));
    assert_eq!(summary_value(&summary, "reference_source"), "ed");
    assert_eq!(summary_value(&summary, "reference_energy"), "-1");
}

#[test]
fn exact_refuses_large_systems() {
    let o = itpp(&["exact", "--n", "15", "--tau_final", "0.04"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("guard"));
    let o = itpp(&["exact", "--n", "6", "--max_dense_qubits", "5", "--tau_final", "0.04"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bdg_energies() {
    let o = itpp(&["bdg", "--n", "5", "--j", "0", "--h", "1"]);
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    let e: f64 = text.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!((e + 5.0).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e0.csv");
    let o = itpp(&["bdg", "--n", "2,12,50", "--csv", path(&csv)]);
    ok(&o);
    let table = read(&csv);
    assert_eq!(table, String::from_utf8(o.stdout).unwrap());
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "n,J,h,E0");
    assert_eq!(lines.len(), 4);
    let e2: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    // two sites: E0 = -sqrt(J^2 + 4h^2)
    assert!((e2 + 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(itpp(&["bdg", "--n", "1"]).status.code(), Some(2));
}

#[test]
fn sweep_records_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let o = itpp(&[
        "sweep",
        "--axis",
        "threshold",
        "--values",
        "2^-7,bogus,1e-4",
        "--n",
        "4",
        "--tau_final",
        "0.4",
        "--out_dir",
        path(dir.path()),
    ]);
    ok(&o);
    let table = read(&dir.path().join("sweep.csv"));
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][2], "ok");
    assert!(rows[1][2].starts_with("failed"));
    assert_eq!(rows[2][2], "ok");
    let n0: usize = rows[0][6].parse().unwrap();
    let n2: usize = rows[2][6].parse().unwrap();
    assert!(n0 < n2);
    assert!(dir.path().join("threshold_0/trajectory.csv").exists());

    let o = itpp(&["sweep", "--axis", "n", "--values", "3,4", "--tau_final", "0.2", "--out_dir", path(&dir.path().join("n"))]);
    ok(&o);
    let table = read(&dir.path().join("n/sweep.csv"));
    assert_eq!(table.lines().count(), 3);

    for values in ["", " , "] {
        let o = itpp(&["sweep", "--axis", "fixed_k", "--values", values]);
        assert_eq!(o.status.code(), Some(2));
    }
}
