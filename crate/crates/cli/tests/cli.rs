use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gic-bounds")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

#[test]
fn sweep_all_bounds_has_expected_shape() {
    let o = run(&["sweep", "--p", "100", "--g2", "0.01:1.0:0.01", "--bounds", "all"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 100);
    assert_eq!(&header[..3], ["p", "g2", "alpha"]);
    assert_eq!(header.last().unwrap(), "regime");
    for col in ["r_sym_star", "cor1_rbar", "thm6", "kramer", "etw", "hk", "shk", "tdm", "tin", "best_upper"] {
        assert!(header.iter().any(|h| h == col), "{col}");
    }
    assert!(rows.iter().all(|r| r.len() == header.len()));
    let (bu, etw) = (header.iter().position(|h| h == "best_upper").unwrap(), header.iter().position(|h| h == "etw").unwrap());
    for r in &rows {
        assert!(r[bu].parse::<f64>().unwrap() <= r[etw].parse::<f64>().unwrap() + 1e-12);
    }
    assert!(!stdout(&o).contains('\r'));
}

#[test]
fn sweep_is_byte_identical_across_runs_and_thread_counts() {
    let args = ["sweep", "--p", "7", "--g2", "0.1:0.9:0.2", "--bounds", "thm3,thm5,best_upper"];
    let a = run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_gic-bounds")).args(args).env("GIC_BOUNDS_THREADS", "1").output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_alpha_axis_and_json_records() {
    let o = run(&["sweep", "--p", "1000", "--alpha", "0.5:1.0:0.005", "--bounds", "best_upper,underline_r", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 101);
    let keys: Vec<&String> = arr[0].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["p", "g2", "alpha", "best_upper", "underline_r", "regime"]);
    assert_eq!(arr[0]["alpha"], 0.5);
    assert_eq!(arr[100]["g2"], 1.0);
}

#[test]
fn snr_db_matches_power() {
    let a = run(&["sweep", "--snr-db", "20", "--g2", "0.3", "--bounds", "r_sym_star"]);
    let b = run(&["sweep", "--p", "100", "--g2", "0.3", "--bounds", "r_sym_star"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["sweep", "--p", "100", "--g2", "0.3", "--bounds", ""],
        vec!["sweep", "--p", "100", "--g2", "1:0:0.1"],
        vec!["sweep", "--p", "100", "--g2", "0:1:0"],
        vec!["sweep", "--p", "100", "--g2", "0.3", "--alpha", "0.5"],
        vec!["sweep", "--p", "100", "--g2", "0.3", "--bounds", "nope"],
        vec!["region", "--p", "7", "--g2", "0.2", "--regions", "nope"],
        vec!["region", "--p", "7", "--g2", "2"],
        vec!["verify", "--only", "nope"],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn region_sections_and_refinement() {
    let o = run(&["region", "--p", "7", "--g2", "0.2", "--points", "50"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["region", "R1", "R2"]);
    for name in ["etw", "outer1", "outer2", "tdm"] {
        assert_eq!(rows.iter().filter(|r| r[0] == name).count(), 51);
    }
    let fine = run(&["region", "--p", "7", "--g2", "0.2", "--points", "100", "--regions", "outer2"]);
    let coarse = run(&["region", "--p", "7", "--g2", "0.2", "--points", "50", "--regions", "outer2"]);
    let (_, f) = csv_rows(&stdout(&fine));
    let (_, c) = csv_rows(&stdout(&coarse));
    assert_eq!(f.len(), 101);
    for (i, row) in c.iter().enumerate() {
        for j in 1..3 {
            let (x, y): (f64, f64) = (row[j].parse().unwrap(), f[2 * i][j].parse().unwrap());
            assert!((x - y).abs() < 1e-6);
        }
    }
}

#[test]
fn outer2_tighter_than_etw_somewhere() {
    let o = run(&["region", "--p", "7", "--g2", "0.2", "--points", "200", "--regions", "etw,outer2"]);
    let (_, rows) = csv_rows(&stdout(&o));
    let pick = |n: &str| rows.iter().filter(|r| r[0] == n).map(|r| r[1].parse::<f64>().unwrap()).collect::<Vec<_>>();
    let (etw, o2) = (pick("etw"), pick("outer2"));
    assert_eq!(etw.len(), o2.len());
    assert!(etw.iter().zip(&o2).any(|(e, o)| o < &(e - 1e-6)));
}

#[test]
fn gap_table() {
    let o = run(&["gap", "--p", "100", "--g2", "0.1:1:0.3"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["p", "g2", "alpha", "regime", "delta", "ceiling", "ceiling_kind", "delta_inf"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][4], "");
    let last = &rows[3];
    assert_eq!(rows[1][3], "moderate");
    assert_eq!(last[3], "weak_non_moderate");
    assert!((last[4].parse::<f64>().unwrap() - 0.5 * (2.0 / 3f64.sqrt()).log2()).abs() < 1e-9);
}

#[test]
fn verify_subset_and_forced_failure() {
    let o = run(&["verify", "--only", "delta_inf"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["all_pass"], true);
    assert_eq!(v["entries"].as_array().unwrap().len(), 4);
    let z = run(&["verify", "--only", "delta_inf", "--tolerance", "zero"]);
    assert_eq!(z.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&z.stdout).unwrap();
    assert_eq!(v["all_pass"], false);
}
