use std::fs;
use std::process::{Command, Output};

use wpgegen::wpt::WpTree;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpgegen")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn help_documents_units() {
    for sub in ["basis", "simulate", "acv", "score", "table1", "table2", "decay", "bench"] {
        let h = stdout(&[sub, "--help"]);
        assert!(h.contains("cycles per sample"), "{sub}");
        assert!(h.contains("--seed") && h.contains("--out"), "{sub}");
    }
}

#[test]
fn basis_json_and_picture() {
    let out = stdout(&["basis", "--nu", "1/12", "--J", "6"]);
    let json = out.lines().next().unwrap();
    let tree = WpTree::from_json(json).unwrap();
    assert_eq!(tree.leaf_count(), 7);
    assert!(out.contains("j=6"));
    let wavelet = stdout(&["basis", "--nu", "0", "--J", "4"]);
    assert_eq!(WpTree::from_json(wavelet.lines().next().unwrap()).unwrap(), WpTree::wavelet(4));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["basis", "--nu", "1/12", "--method", "whitcher", "--filter", "bl6"]).status.code(), Some(2));
    assert_eq!(run(&["basis", "--nu", "0.6"]).status.code(), Some(1));
    assert_eq!(run(&["basis", "--nu", "1/12", "--filter", "db99"]).status.code(), Some(1));
    assert_eq!(run(&["score", "--factor", "0.4,1/12", "--J", "11"]).status.code(), Some(1));
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn cw_methods_need_the_model() {
    assert_eq!(run(&["basis", "--nu", "1/12", "--method", "cw-indicator"]).status.code(), Some(1));
    let a = stdout(&["basis", "--factor", "0.3,1/12", "--method", "cw-indicator", "--J", "6"]);
    let b = stdout(&["basis", "--factor", "0.3,1/12", "--method", "ours", "--J", "6"]);
    assert_eq!(a.lines().next(), b.lines().next());
}

#[test]
fn table1_subset_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t1.csv");
    let p = path.to_str().unwrap();
    stdout(&["table1", "--process", "1", "--family", "daubechies", "--out", p]);
    let csv = fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).filter(|l| l.contains(",ours,")).collect();
    assert_eq!(rows.len(), 5);
    let s10: f64 = rows[4].split(',').nth(7).unwrap().parse().unwrap();
    assert!((s10 / 308.2 - 1.0).abs() < 0.1);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t1.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "table1");
    assert_eq!(manifest["seed"], 0);
}

#[test]
fn spline_whitcher_cells_are_empty() {
    let csv = stdout(&["table1", "--process", "2", "--family", "battle-lemarie"]);
    for line in csv.lines().filter(|l| l.contains(",whitcher,")) {
        let f: Vec<&str> = line.split(',').collect();
        assert!(f[4].is_empty() && f[7].is_empty(), "{line}");
    }
}

#[test]
fn table2_smoke_is_reproducible() {
    let args = ["table2", "--process", "2", "--family", "daubechies", "--replicates", "1", "--seed", "9"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    assert!(a.lines().any(|l| l.contains(",hosking,")));
    assert_eq!(a.lines().count(), 1 + 1 + 10);
}

#[test]
fn simulate_is_seeded() {
    let args = ["simulate", "--factor", "0.3,1/12", "--J", "5", "--replicates", "2", "--seed", "4"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    assert_eq!(a.lines().count(), 1 + 64);
    let mut other = args.to_vec();
    other[8] = "5";
    assert_ne!(a, stdout(&other));
    let h = stdout(&["simulate", "--factor", "0.3,1/12", "--J", "5", "--method", "hosking"]);
    assert_eq!(h.lines().count(), 1 + 32);
}

#[test]
fn acv_and_filters_csv() {
    let acv = stdout(&["acv", "--factor", "0.2,0.25", "--max-lag", "4"]);
    let first: Vec<&str> = acv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[2], "1");
    let f = stdout(&["filters", "--filter", "db2"]);
    assert_eq!(f.lines().next(), Some("index,h,g"));
    assert_eq!(f.lines().count(), 1 + 6);
}

#[test]
fn decay_and_bench_run() {
    let d = stdout(&["decay", "--factor", "0.3,0.016", "--filter", "db1", "--J", "9", "--level", "1"]);
    assert!(d.lines().any(|l| l.starts_with("1,0,1,0,both_scaling")));
    let b = stdout(&["bench", "--j-min", "6", "--j-max", "6", "--repeats", "1"]);
    assert_eq!(b.lines().count(), 3);
}
