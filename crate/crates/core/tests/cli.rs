use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use schatten_lab::operators::OperatorMatrix;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schatten-lab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn dir_arg(d: &Path) -> String {
    d.to_str().unwrap().to_string()
}

#[test]
fn certify_pass_writes_reports() {
    let d = tempfile::tempdir().unwrap();
    let o = lab(&["--out", &dir_arg(d.path()), "certify", "E6"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().all(|l| l.starts_with("E6 PASS ")), "{text}");
    for f in ["E6_a2.csv", "E6_integral_growth.csv", "E6_checks.csv", "E6_summary.csv", "E6.meta.toml", "E6.config.toml"] {
        assert!(d.path().join(f).exists(), "{f} missing");
    }
    let a2 = fs::read_to_string(d.path().join("E6_a2.csv")).unwrap();
    assert!(a2.starts_with("case,numerator,denominator,ratio\n"));
    assert_eq!(a2.lines().count(), 5);
    let meta = fs::read_to_string(d.path().join("E6.meta.toml")).unwrap();
    assert!(meta.contains("passed = true") && meta.contains("config_sha256"));
}

#[test]
fn predicate_failure_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let o = lab(&["--out", &dir_arg(d.path()), "certify", "E7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("E7 FAIL weak Schatten / mixed bound"));
    assert!(fs::read_to_string(d.path().join("E7.meta.toml")).unwrap().contains("passed = false"));
}

#[test]
fn errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let out = dir_arg(d.path());
    let o = lab(&["--out", &out, "--j-max", "14", "certify", "E2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));

    let o = lab(&["--out", &out, "--weights", "pow:2/one", "certify", "E2"]);
    assert_ne!(o.status.code(), Some(0));

    let cfg = d.path().join("e3.toml");
    fs::write(&cfg, "experiment = \"E3\"\n").unwrap();
    let o = lab(&["--config", cfg.to_str().unwrap(), "certify", "E2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lab(&["--config", cfg.to_str().unwrap(), "report"]);
    assert_eq!(o.status.code(), Some(2));

    fs::write(&cfg, "experiment = \"E3\"\nbogus = 1\n").unwrap();
    let o = lab(&["--config", cfg.to_str().unwrap(), "certify", "E3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_flags_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("e8.toml");
    fs::write(&cfg, "experiment = \"E8\"\nseed = 7\n[scales]\nj_min = -1\nj_max = 7\n").unwrap();
    let out = d.path().join("r");
    let o = lab(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9", "certify", "E8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let written = fs::read_to_string(out.join("E8.config.toml")).unwrap();
    assert!(written.contains("seed = 9"));
    assert!(written.contains("j_max = 7"));
}

#[test]
fn spectrum_and_operator_outputs() {
    let d = tempfile::tempdir().unwrap();
    let common = ["--window=0,1", "--j-min", "0", "--j-max", "5", "--symbols", "haar:0:0:1", "--weights", "one/one"];
    let mut args = common.to_vec();
    args.extend(["spectrum", "--kind", "paraproduct"]);
    let o = lab(&args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,sigma"));
    let sigma: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!((sigma[0] - 1.0).abs() < 1e-12);
    assert!(sigma[1..].iter().all(|s| *s == 0.0));

    let out = dir_arg(d.path());
    let mut args = common.to_vec();
    args.extend(["--out", &out, "operator", "--kind", "commutator", "--format", "binary", "--file", "c.bin"]);
    assert_eq!(lab(&args).status.code(), Some(0));
    let (n, j_max, lo, hi, m) = OperatorMatrix::read_binary(fs::File::open(d.path().join("c.bin")).unwrap()).unwrap();
    assert_eq!((n, j_max, lo, hi), (32, 5, 0.0, 1.0));
    // H antisymmetric and M_b diagonal make [M_b, H] symmetric
    assert!((&m - m.transpose()).abs().max() < 1e-15);
    assert!(m.abs().max() > 0.0);

    let mut args = common.to_vec();
    args.extend(["--out", &out, "operator", "--kind", "paraproduct", "--format", "csv", "--file", "p.csv"]);
    assert_eq!(lab(&args).status.code(), Some(0));
    let csv = fs::read_to_string(d.path().join("p.csv")).unwrap();
    assert_eq!(csv.lines().count(), 32);
    assert!(csv.lines().all(|l| l.split(',').count() == 32));
}

#[test]
fn besov_table() {
    let o = lab(&["--window=0,1", "--j-min", "0", "--j-max", "6", "--symbols", "sine:1", "--weights", "one/one", "besov"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("case,norm,value,error_estimate\n"));
    assert!(text.contains("dyadic-D0-"));
    assert!(text.contains("continuous-p=2"));
}

#[test]
fn reruns_are_byte_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let o = Command::new(env!("CARGO_BIN_EXE_schatten-lab"))
            .current_dir(d.path())
            .args(["--out", "out", "certify", "E5"])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
    }
    let (a, b) = (dirs[0].path().join("out"), dirs[1].path().join("out"));
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 5);
    for n in names {
        assert!(fs::read(a.join(&n)).unwrap() == fs::read(b.join(&n)).unwrap(), "{n:?} differs");
    }
}
