use std::process::{Command, Output};

fn xnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xnet")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL: &[&str] = &[
    "simulate",
    "--scheme",
    "ljj3",
    "--phi",
    "0.5535743588970452",
    "--pdb",
    "6,10",
    "--target-errors",
    "40",
    "--seed",
    "5",
];

#[test]
fn simulate_writes_csv() {
    let o = xnet(SMALL);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# scheme=ljj3"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "p_db,trials,bit_errors,ber");
    assert_eq!(rows.len(), 3);
}

#[test]
fn simulate_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for w in ["1", "8"] {
        let path = dir.path().join(format!("w{w}.csv"));
        let mut args = SMALL.to_vec();
        args.extend(["--workers", w, "--reference", "--out", path.to_str().unwrap()]);
        assert_eq!(code(&xnet(&args)), 0);
        outs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn simulate_reads_json_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"scheme": "ljj2", "constellation": "qpsk", "p_db_list": [4.0], "target_bit_errors": 10, "seed": 3}"#,
    )
    .unwrap();
    let o = xnet(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("# scheme=ljj2"));

    std::fs::write(&cfg, r#"{"scheme": "ljj3", "bogus": 1}"#).unwrap();
    assert_eq!(code(&xnet(&["simulate", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&xnet(&["verify", "nonsense"])), 2);
    assert_eq!(code(&xnet(&["simulate", "--constellation", "32qam"])), 2);
    assert_eq!(code(&xnet(&["simulate", "--pdb", ""])), 2);
    assert_eq!(code(&xnet(&["frobnicate"])), 2);
    assert_eq!(code(&xnet(&["slope", "/nonexistent/curve.csv"])), 2);
    assert_eq!(code(&xnet(&["certify", "--grid", "0"])), 2);
}

#[test]
fn verify_suites_report_pass() {
    let o = xnet(&["verify", "cancellation", "--draws", "50"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
    let o = xnet(&["verify", "decoder-equivalence", "--draws", "100", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["checks"][0]["passed"], true);
}

#[test]
fn certificates_report_the_det_s_mismatch() {
    let o = xnet(&["certify", "--theta", "1.0"]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("det(R)=-2.000000000000"));
    assert!(text.contains("[FAIL]"));
}

#[test]
fn rank_search_verdicts() {
    let o = xnet(&["rank-search", "--phi", "0.5535743588970452", "--pairs", "200"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(code(&xnet(&["rank-search", "--theta", "0", "--expect", "fail"])), 0);
    assert_eq!(code(&xnet(&["rank-search", "--theta", "0"])), 1);
    assert_eq!(code(&xnet(&["rank-search", "--constellation", "16qam", "--limit", "1000"])), 2);
}

#[test]
fn slope_reads_emitted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    std::fs::write(
        &path,
        "# scheme=ljj3\n# constellation=qpsk\n# theta=0.785\n# phi=0\n# seed=0\n# bits_per_trial=1\n\
         p_db,trials,bit_errors,ber\n0,1000000,100000,0.1\n10,1000000,1000,0.001\n20,1000000,10,0.00001\n",
    )
    .unwrap();
    let o = xnet(&["slope", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let d: f64 = stdout(&o).trim().parse().unwrap();
    assert!((d - 2.0).abs() < 1e-9);
    assert_eq!(code(&xnet(&["slope", path.to_str().unwrap(), "--min", "2.5"])), 1);
}
