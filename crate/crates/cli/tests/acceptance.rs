//! End-to-end binary checks: the determinism criterion plus exit-code and
//! CSV-shape behavior.

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_addfield"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).expect("config written");
    path.to_str().expect("utf-8 path").to_owned()
}

const KOROBOV_GRID: &str = r#"{
    "model": {"family": "korobov_parametric", "c": 1.0, "tau": 0.5, "r": 0.5,
              "sigma_rule": {"kind": "log_affine", "s0": 2.0, "s1": 1.0}},
    "eps": [0.3, 0.5],
    "d_grid": {"start": 16, "end": 256, "count": 5, "spacing": "log"},
    "method": "all"
}"#;

#[test]
fn criterion_10_cli_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(dir.path(), "grid.json", KOROBOV_GRID);
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();

    let first = out("first.csv");
    let second = out("second.csv");
    let wide = out("wide.csv");
    for (path, threads) in [(&first, "1"), (&second, "1"), (&wide, "8")] {
        let output = run(&["compare", "--config", &config, "--out", path, "--threads", threads]);
        assert!(
            output.status.success(),
            "criterion 10 FAIL: run with {threads} threads exited {:?}: {}",
            output.status.code(),
            String::from_utf8_lossy(&output.stderr)
        );
    }

    let first_bytes = std::fs::read(&first).expect("first run output");
    let second_bytes = std::fs::read(&second).expect("second run output");
    let wide_bytes = std::fs::read(&wide).expect("wide run output");
    assert_eq!(
        first_bytes, second_bytes,
        "criterion 10 FAIL: two single-threaded runs differ"
    );
    assert_eq!(
        first_bytes, wide_bytes,
        "criterion 10 FAIL: thread counts 1 and 8 differ"
    );

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "criterion 10 FAIL: runtime {elapsed:.2?} exceeds 30 s"
    );
    println!(
        "criterion 10 CLI determinism: PASS ({} identical bytes x 3 runs, {elapsed:.2?})",
        first_bytes.len()
    );
}

#[test]
fn compare_emits_the_two_marginal_oracle_row() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "two.json",
        r#"{
            "model": {"family": "explicit_list",
                      "marginals": [{"lambda0": 1.0, "values": [0.5, 0.5]},
                                    {"lambda0": 0.5, "values": [0.25, 0.25]}]},
            "eps": 0.5,
            "d": 2
        }"#,
    );
    let output = run(&["compare", "--config", &config]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).expect("utf-8 csv");
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next(),
        Some("d,eps,n_exact,n_reduced,n_integral,asymptotic_prediction,ratio_exact_over_prediction,flag")
    );
    assert_eq!(lines.next(), Some("2,5.0000000000000000e-1,3,2,2,,,"));
    assert_eq!(lines.next(), None);
}

#[test]
fn accuracy_at_or_past_the_critical_threshold_flags_and_exits_regime() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "past.json",
        r#"{
            "model": {"family": "homogeneous", "marginals": [{"lambda0": 1.0, "values": [0.5, 0.5]}]},
            "eps": 0.9,
            "d": 1
        }"#,
    );
    let output = run(&["compare", "--config", &config]);
    assert_eq!(output.status.code(), Some(3), "all points out of regime exit 3");
    let stdout = String::from_utf8(output.stdout).expect("utf-8 csv");
    let row: Vec<&str> = stdout.lines().nth(1).expect("data row").split(',').collect();
    assert_eq!(row[2], "1", "exact count is 1 past the critical threshold");
    assert_eq!(row[3], "", "reduced count skipped");
    assert_eq!(row[4], "", "integral count skipped");
    assert_eq!(row[7], "regime:n=1");
}

#[test]
fn one_in_regime_point_keeps_the_run_successful() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "mixed.json",
        r#"{
            "model": {"family": "homogeneous", "marginals": [{"lambda0": 1.0, "values": [0.5, 0.5]}]},
            "eps": [0.5, 0.9],
            "d": 1
        }"#,
    );
    let output = run(&["compare", "--config", &config]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).expect("utf-8 csv");
    let flags: Vec<&str> = stdout
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(flags, vec!["", "regime:n=1"]);
}

#[test]
fn bounded_regime_is_flagged_but_counts_are_delivered() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "bounded.json",
        r#"{
            "model": {"family": "korobov_parametric", "c": 1.0, "tau": 1.5, "r": 0.0,
                      "sigma_rule": {"kind": "constant", "s0": 2.0}},
            "eps": 0.5,
            "d_grid": {"list": [10, 20]},
            "method": "asymptotic"
        }"#,
    );
    let output = run(&["compare", "--config", &config]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8(output.stdout).expect("utf-8 csv");
    for line in stdout.lines().skip(1) {
        let row: Vec<&str> = line.split(',').collect();
        assert!(!row[2].is_empty(), "exact count present: {line}");
        assert!(!row[3].is_empty(), "reduced count present: {line}");
        assert_eq!(row[5], "", "no prediction in the bounded regime: {line}");
        assert_eq!(row[7], "regime:bounded");
    }
}

#[test]
fn unknown_configuration_keys_exit_with_the_config_code() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "typo.json",
        r#"{
            "model": {"family": "homogeneous", "marginals": [{"lambda0": 1.0, "values": [0.5]}]},
            "eps": 0.5,
            "d": 1,
            "termcap": 100
        }"#,
    );
    let output = run(&["compare", "--config", &config]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("termcap"), "stderr names the unknown key: {stderr}");
}

#[test]
fn sigma_violations_name_the_marginal_index() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "sigma.json",
        r#"{
            "model": {"family": "korobov_parametric", "c": 1.0, "tau": 0.0, "r": 0.0,
                      "sigma_rule": {"kind": "affine", "s0": 1.5, "s1": -0.1}},
            "eps": 0.5,
            "d": 10
        }"#,
    );
    let output = run(&["curve", "--config", &config]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("j = 5"), "stderr names the index: {stderr}");
}

#[test]
fn degenerate_ratio_flags_every_point_and_exits_regime() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "degenerate.json",
        r#"{
            "model": {"family": "korobov_parametric", "c": 1.0, "tau": 0.5, "r": "inf",
                      "sigma_rule": {"kind": "constant", "s0": 2.0}},
            "eps": 0.5,
            "d_grid": {"list": [2, 4]}
        }"#,
    );
    let output = run(&["compare", "--config", &config]);
    assert_eq!(output.status.code(), Some(3));
    let stdout = String::from_utf8(output.stdout).expect("utf-8 csv");
    let rows: Vec<&str> = stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row.ends_with(",regime:degenerate"), "{row}");
    }
}

#[test]
fn curve_orders_rows_dimension_outer() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "curve.json",
        r#"{
            "model": {"family": "korobov_parametric", "c": 1.0, "tau": 0.0, "r": 0.0,
                      "sigma_rule": {"kind": "log_affine", "s0": 2.0, "s1": 1.0}},
            "eps": [0.3, 0.5],
            "d_grid": {"list": [4, 8]},
            "method": "integral"
        }"#,
    );
    let output = run(&["curve", "--config", &config]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).expect("utf-8 csv");
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "d,eps,method,n,terms_consumed,flag");
    assert_eq!(lines.len(), 5);
    let keys: Vec<(&str, &str)> = lines[1..]
        .iter()
        .map(|l| {
            let mut parts = l.split(',');
            (parts.next().unwrap(), parts.next().unwrap())
        })
        .collect();
    assert_eq!(
        keys,
        vec![
            ("4", "2.9999999999999999e-1"),
            ("4", "5.0000000000000000e-1"),
            ("8", "2.9999999999999999e-1"),
            ("8", "5.0000000000000000e-1"),
        ]
    );
    for line in &lines[1..] {
        assert_eq!(line.split(',').nth(2), Some("integral"));
    }
}

#[test]
fn spectrum_lists_the_constant_mode_first_on_ties() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "spectrum.json",
        r#"{
            "model": {"family": "homogeneous", "marginals": [{"lambda0": 1.0, "values": [0.5, 0.5]}]},
            "d": 2
        }"#,
    );
    let output = run(&["spectrum", "--config", &config, "--top", "5"]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).expect("utf-8 csv");
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(
        lines,
        vec![
            "rank,value,source",
            "1,2.0000000000000000e0,0",
            "2,5.0000000000000000e-1,1",
            "3,5.0000000000000000e-1,1",
            "4,5.0000000000000000e-1,2",
            "5,5.0000000000000000e-1,2",
        ]
    );
}

#[test]
fn single_point_subcommand_rejects_aggregate_methods() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "single.json",
        r#"{
            "model": {"family": "homogeneous", "marginals": [{"lambda0": 1.0, "values": [0.5, 0.5]}]},
            "eps": 0.5,
            "d": 4
        }"#,
    );
    let output = run(&["complexity", "--config", &config, "--method", "all"]);
    assert_eq!(output.status.code(), Some(2));

    let output = run(&["complexity", "--config", &config, "--method", "homogeneous"]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).expect("utf-8 csv");
    let row: Vec<&str> = stdout.lines().nth(1).expect("data row").split(',').collect();
    assert_eq!(row[3], "5", "hand-checked count at d=4, eps=0.5");
}
