use std::path::Path;
use std::process::{Command, Output};

fn twinxfer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinxfer")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Comment lines, then the CSV body.
fn split_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let (comments, body): (Vec<&str>, Vec<&str>) = text.lines().partition(|l| l.starts_with('#'));
    let rows = body.iter().map(|l| l.split(',').map(str::to_owned).collect()).collect();
    (comments.into_iter().map(str::to_owned).collect(), rows)
}

#[test]
fn run_writes_documented_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let res = twinxfer(&["run", "--points", "100000", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));

    let (comments, rows) = split_csv(&out.join("report.csv"));
    assert!(comments[0].starts_with("# twinxfer "));
    assert!(comments.iter().any(|l| l == "# seed = 3"));
    assert!(comments.iter().any(|l| l == "# n_points = 100000"));
    assert_eq!(rows[0][0], "selection");
    assert_eq!(rows[1][0], "conditioned");
    assert_eq!(rows[2][0], "unconditioned");
    assert_eq!(rows[2][4], "100000");
    let oracle: f64 = rows[1][7].parse().unwrap();
    assert!((oracle - 3.995).abs() < 1e-3);

    let (_, scatter) = split_csv(&out.join("scatter_unconditioned.csv"));
    assert_eq!(scatter[0], ["event", "i1", "i2"]);
    assert_eq!(scatter.len() - 1, 20_000);
    let (_, scatter) = split_csv(&out.join("scatter_conditioned.csv"));
    assert_eq!(scatter.len() - 1, rows[1][4].parse::<usize>().unwrap());

    let (_, hist) = split_csv(&out.join("histogram_conditioned.csv"));
    assert_eq!(hist[0], ["bin_low_delta", "bin_high_delta", "count", "probability"]);
    let total: u64 = hist[1..].iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    assert_eq!(total.to_string(), rows[1][4]);
    let width: f64 = hist[1][1].parse::<f64>().unwrap() - hist[1][0].parse::<f64>().unwrap();
    assert!((width - 0.1).abs() < 1e-12);
}

#[test]
fn sweep_records_failed_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        "n_points = 20000\n[sweep]\nparameter = \"bandwidth_delta\"\nmin = 0.001\nmax = 1.0\nsteps = 4\nscale = \"log\"\n",
    );
    let out = tmp.path().join("sweep");
    let res = twinxfer(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let (_, rows) = split_csv(&out.join("sweep.csv"));
    assert_eq!(rows[0].len(), 9);
    assert_eq!(rows[0][0], "axis_value");
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[1][1], "NaN");
    assert!(!rows[1][8].is_empty());
    assert!(rows[4][8].is_empty());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = out.to_str().unwrap();

    let typo = write(tmp.path(), "typo.toml", "[pair1]\nsqueezing = 7.0\n");
    let res = twinxfer(&["run", "--config", &typo, "--out", o]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("squeezing"));

    let bad = write(tmp.path(), "bad.toml", "[pair1]\nefficiency = 1.5\n");
    assert_eq!(code(&twinxfer(&["run", "--config", &bad, "--out", o])), 2);

    assert_eq!(code(&twinxfer(&["run", "--points", "10", "--out", o])), 3);
    assert_eq!(code(&twinxfer(&["run", "--config", "/nonexistent/cfg.toml", "--out", o])), 4);

    let blocker = write(tmp.path(), "file", "");
    assert_eq!(code(&twinxfer(&["run", "--points", "100000", "--out", &format!("{blocker}/sub")])), 4);

    assert_eq!(code(&twinxfer(&["sweep", "--out", o])), 2);
    assert_eq!(code(&twinxfer(&["run", "--engine", "optical"])), 2);
}

#[test]
fn fock_transfer_file() {
    let tmp = tempfile::tempdir().unwrap();
    let p1 = write(tmp.path(), "p1.csv", "# pair 1\nn_signal,n_idler,probability\n0,0,0.25\n1,1,0.25\n2,2,0.5\n");
    let p2 = write(tmp.path(), "p2.csv", "n_signal,n_idler,probability\n1,1,0.5\n2,2,0.5\n");
    let out = tmp.path().join("f");
    let res = twinxfer(&["fock", &p1, &p2, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let (comments, rows) = split_csv(&out.join("fock_transfer.csv"));
    assert!(comments.iter().any(|l| l == "# acceptance_probability 0.375"));
    assert_eq!(rows[0], ["n_idler1", "n_idler2", "probability"]);
    let p = |a: &str, b: &str| rows.iter().find(|r| r[0] == a && r[1] == b).unwrap()[2].parse::<f64>().unwrap();
    assert!((p("1", "1") - 1.0 / 3.0).abs() < 1e-15);
    assert!((p("2", "2") - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(p("1", "2"), 0.0);
    assert_eq!(p("0", "0"), 0.0);

    let broken = write(tmp.path(), "b.csv", "n_signal,n_idler,probability\n0,zero,1\n");
    assert_eq!(code(&twinxfer(&["fock", &p1, &broken, "--out", out.to_str().unwrap()])), 4);
}

#[test]
fn selftest_passes() {
    let res = twinxfer(&["selftest", "--seed", "5"]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(code(&res), 0, "{stdout}");
    assert!(!stdout.contains("FAIL"));
    assert!(stdout.lines().count() >= 8);
}

#[test]
fn rerun_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = ["a", "b"].map(|d| tmp.path().join(d));
    for d in &dirs {
        assert_eq!(code(&twinxfer(&["run", "--points", "50000", "--seed", "9", "--out", d.to_str().unwrap()])), 0);
    }
    for name in ["report.csv", "scatter_conditioned.csv", "histogram_unconditioned.csv"] {
        assert_eq!(std::fs::read(dirs[0].join(name)).unwrap(), std::fs::read(dirs[1].join(name)).unwrap());
    }
    let other = tmp.path().join("c");
    assert_eq!(code(&twinxfer(&["run", "--points", "50000", "--seed", "10", "--out", other.to_str().unwrap()])), 0);
    assert_ne!(std::fs::read(dirs[0].join("report.csv")).unwrap(), std::fs::read(other.join("report.csv")).unwrap());
}
