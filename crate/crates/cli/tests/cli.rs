use std::path::Path;
use std::process::{Command, Output};

fn rmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmt-edge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "empty.toml", "");
    let out = rmt(&["run", "--config", &c]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");
    assert_eq!(rmt(&["run"]).status.code(), Some(2));
    assert_eq!(rmt(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let odd = config(
        dir.path(),
        "odd.toml",
        "kind = \"kernel-convergence\"\nladder = [65]\n",
    );
    assert_eq!(rmt(&["run", "--config", &odd]).status.code(), Some(2));
    let wide = config(
        dir.path(),
        "wide.toml",
        "kind = \"tw-tables\"\n[s_grid]\nmin = -11.0\nmax = 0.0\nstep = 1.0\n",
    );
    assert_eq!(rmt(&["run", "--config", &wide]).status.code(), Some(2));
}

#[test]
fn module_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "bad.toml",
        "kind = \"equilibrium\"\n[potential]\nbuiltin = \"nope\"\n",
    );
    let out = rmt(&["run", "--config", &c, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "computation");
}

#[test]
fn tw_tables_and_resolution_drift() {
    let dir = tempfile::tempdir().unwrap();
    let body = "kind = \"tw-tables\"\n[s_grid]\nmin = -3.0\nmax = 1.0\nstep = 1.0\n";
    let c = config(dir.path(), "tw.toml", body);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |out: &Path, g: &str| {
        rmt(&[
            "run",
            "--config",
            &c,
            "--out",
            out.to_str().unwrap(),
            "--resolution",
            g,
        ])
    };
    assert_eq!(run(&a, "32").status.code(), Some(0));
    assert_eq!(run(&b, "64").status.code(), Some(0));

    let csv = std::fs::read_to_string(a.join("tw-tables.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "s,F1,F2,resolution,est_error");
    assert_eq!(csv.lines().count(), 6);
    let meta = json(&a.join("tw-tables.json"));
    assert_eq!(meta["kind"], "tw-tables");
    assert_eq!(meta["all_passed"], true);
    assert!(meta["timings"]["total"].as_f64().unwrap() >= 0.0);

    let (pa, pb) = (a.join("tw-tables.csv"), b.join("tw-tables.csv"));
    let out = rmt(&[
        "diff",
        pa.to_str().unwrap(),
        pb.to_str().unwrap(),
        "--columns",
        "F1,F2",
        "--tolerance",
        "1e-6",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["max_drift"].as_f64().unwrap() <= 1e-6);

    let same = rmt(&["diff", pa.to_str().unwrap(), pa.to_str().unwrap()]);
    let summary: serde_json::Value = serde_json::from_slice(&same.stdout).unwrap();
    assert_eq!(summary["max_drift"].as_f64().unwrap(), 0.0);
}

#[test]
fn diff_across_potentials_and_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    let q = dir.path().join("q");
    let c = config(
        dir.path(),
        "q.toml",
        "kind = \"equilibrium\"\n[potential]\nbuiltin = \"quartic12\"\n",
    );
    assert_eq!(
        rmt(&["run", "--kind", "equilibrium", "--out", g.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        rmt(&["run", "--config", &c, "--out", q.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let (pg, pq) = (g.join("equilibrium.csv"), q.join("equilibrium.csv"));
    let out = rmt(&["diff", pg.to_str().unwrap(), pq.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["max_drift"].as_f64().unwrap() > 0.01);
    assert_eq!(
        summary["columns"][0]["max_abs_drift"].as_f64().unwrap(),
        0.0
    );
    let strict = rmt(&[
        "diff",
        pg.to_str().unwrap(),
        pq.to_str().unwrap(),
        "--tolerance",
        "1e-6",
    ]);
    assert_eq!(strict.status.code(), Some(1));

    let meta = json(&q.join("equilibrium.json"));
    let gamma = meta["extra"]["gamma"].as_f64().unwrap();
    assert!((gamma - 2f64.powf(2.0 / 3.0)).abs() < 1e-8);

    // schema mismatch: an equilibrium table against a tw table
    let tw = dir.path().join("tw");
    let tc = config(
        dir.path(),
        "tw.toml",
        "kind = \"tw-tables\"\nresolution = 24\n[s_grid]\nmin = 0.0\nmax = 1.0\nstep = 1.0\n",
    );
    assert_eq!(
        rmt(&["run", "--config", &tc, "--out", tw.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let pt = tw.join("tw-tables.csv");
    let out = rmt(&["diff", pg.to_str().unwrap(), pt.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn monte_carlo_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let body = "kind = \"monte-carlo\"\nladder = [20]\nbeta = 2\nresolution = 24\n\
                [monte_carlo]\ndraws = 200\nks_tolerance = 1.0\n\
                [s_grid]\nmin = -4.0\nmax = 2.0\nstep = 0.5\n";
    let c = config(dir.path(), "mc.toml", body);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let r = rmt(&[
            "run",
            "--config",
            &c,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "11",
        ]);
        assert_eq!(r.status.code(), Some(0));
    }
    for f in ["monte-carlo.csv", "monte-carlo.batch"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let other = dir.path().join("c");
    rmt(&[
        "run",
        "--config",
        &c,
        "--out",
        other.to_str().unwrap(),
        "--seed",
        "12",
    ]);
    assert_ne!(
        std::fs::read(a.join("monte-carlo.batch")).unwrap(),
        std::fs::read(other.join("monte-carlo.batch")).unwrap()
    );
}

#[test]
fn kernel_convergence_columns_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let out = rmt(&[
        "run",
        "--kind",
        "kernel-convergence",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let csv = std::fs::read_to_string(dir.path().join("kernel-convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "n,sup_S,sup_D,sup_I,condition");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2][1] <= 0.05, "terminal sup S {}", rows[2][1]);
}

#[test]
fn toeplitz_and_recurrence_reports() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "t.toml",
        "kind = \"toeplitz-residuals\"\nladder = [32, 64]\n[potential]\nbuiltin = \"quartic12\"\n",
    );
    let out = rmt(&["run", "--config", &c, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let csv = std::fs::read_to_string(dir.path().join("toeplitz-residuals.csv")).unwrap();
    assert!(csv.starts_with("n,m,residual,fitted_rate"));
    let c = config(
        dir.path(),
        "r.toml",
        "kind = \"recurrence\"\nladder = [40, 80]\n",
    );
    let out = rmt(&["run", "--config", &c, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}
