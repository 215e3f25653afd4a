use std::path::Path;
use std::process::{Command, Output};

fn softpd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softpd")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

const PAIR: &str = "x1,label\n-1,1\n1,2\n";

// One point of cluster 2 sits inside cluster 1.
const OUTLIER: &str = "x1,x2,label\n0,0,1\n1,0,1\n0,1,1\n0.2,0.2,2\n10,10,2\n11,10,2\n10,11,2\n";

#[test]
fn separate_symmetric_pair() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "pair.csv", PAIR);
    let out = stdout(&softpd(&["separate", "--train", "pair.csv", "--free-sites"], dir.path()));
    assert!(out.contains("epsilon 1.000000"), "{out}");
    assert!(out.contains("separation strictly_separating"), "{out}");
    assert!(out.contains("separable with free sites true"), "{out}");
}

#[test]
fn libsvm_input_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "pair.csv", PAIR);
    write(dir.path(), "pair.txt", "+1 1:-1\n-1 1:1\n");
    let a = stdout(&softpd(&["separate", "--train", "pair.csv", "--json"], dir.path()));
    let b = stdout(&softpd(&["separate", "--train", "pair.txt", "--json"], dir.path()));
    // Numeric labels sort ascending, so -1 becomes cluster 1 at x = 1.
    assert!(a.contains("\"epsilon\":1.000000"));
    assert!(b.contains("\"epsilon\":1.000000"));
}

#[test]
fn outliers_reports_intruding_point() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "o.csv", OUTLIER);
    let hard = stdout(&softpd(&["separate", "--train", "o.csv", "--json"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&hard).unwrap();
    assert!(v["epsilon"].as_f64().unwrap() < 0.0);
    let out = stdout(&softpd(&["outliers", "--train", "o.csv", "--t", "2", "--json"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["outliers"], serde_json::json!([4]));
    assert!(v["epsilon"].as_f64().unwrap() > 0.0);
}

#[test]
fn threshold_json_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "o.csv", OUTLIER);
    let args = ["threshold", "--train", "o.csv", "--json"];
    let a = stdout(&softpd(&args, dir.path()));
    let b = stdout(&softpd(&args, dir.path()));
    assert_eq!(a, b);
    let cold = stdout(&softpd(&["threshold", "--train", "o.csv", "--json", "--cold"], dir.path()));
    let (va, vc): (serde_json::Value, serde_json::Value) = (serde_json::from_str(&a).unwrap(), serde_json::from_str(&cold).unwrap());
    // With two clusters a budget of one error cannot move the margin.
    assert_eq!(va["t_min"], serde_json::json!(2));
    assert_eq!(va["t_min"], vc["t_min"]);
    assert_eq!(va["t_max"], serde_json::json!(7));
}

#[test]
fn model_round_trip_through_classify() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "o.csv", OUTLIER);
    stdout(&softpd(&["soft", "--train", "o.csv", "--t", "2", "--model", "m.json"], dir.path()));
    write(dir.path(), "q.csv", "x1,x2\n0.2,0.1\n10.5,10.2\n");
    let out = stdout(&softpd(&["classify", "--model", "m.json", "--input", "q.csv"], dir.path()));
    assert_eq!(out, "1\n2\n");
}

#[test]
fn plot_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "o.csv", OUTLIER);
    stdout(&softpd(&["plot", "--train", "o.csv", "--t", "2", "--out", "p.svg"], dir.path()));
    let svg = std::fs::read_to_string(dir.path().join("p.svg")).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert_eq!(svg.matches("class=\"site\"").count(), 2);
    assert!(svg.contains("class=\"boundary\""));
}

#[test]
fn generate_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&softpd(&["generate", "--n", "24", "--k", "3", "--seed", "9", "--out", "g.csv"], dir.path()));
    let again = stdout(&softpd(&["generate", "--n", "24", "--k", "3", "--seed", "9"], dir.path()));
    assert_eq!(std::fs::read_to_string(dir.path().join("g.csv")).unwrap(), again);
    let out = stdout(&softpd(&["eval", "--train", "g.csv", "--test", "g.csv", "--json"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["total"], serde_json::json!(24));
}

#[test]
fn mps_export() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "pair.csv", PAIR);
    stdout(&softpd(&["separate", "--train", "pair.csv", "--mps", "p.mps"], dir.path()));
    let mps = std::fs::read_to_string(dir.path().join("p.mps")).unwrap();
    assert!(mps.lines().any(|l| l.starts_with("NAME")));
    assert!(mps.contains("ENDATA"));
}

#[test]
fn errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "pair.csv", PAIR);
    write(dir.path(), "bad.txt", "1 0:3\n");
    for args in [
        vec!["separate", "--train", "missing.csv"],
        vec!["separate", "--train", "bad.txt"],
        vec!["soft", "--train", "pair.csv", "--t", "0"],
        vec!["outliers", "--train", "pair.csv", "--t", "9"],
    ] {
        let o = softpd(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"), "{args:?}");
    }
}
