// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use qudit_qkd_cli::report::{read_csv_config, read_csv_rows, CommandResult, Report, ThresholdRow, TrialRow};
use qudit_qkd_cli::CliConfig;

fn qudit_qkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qudit-qkd"))
        .args(args)
        .env_remove("QUDIT_QKD_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn thresholds_csv_matches_table() {
    let o = qudit_qkd(&["thresholds", "--p", "2", "--n", "1..4", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<ThresholdRow> = read_csv_rows(&text).unwrap();
    let got: Vec<(u32, &str, &str)> = rows
        .iter()
        .map(|r| (r.n_dim, r.e_sbmer_percent.as_str(), r.e_ber_percent.as_str()))
        .collect();
    assert_eq!(
        got,
        [
            (2, "27.64", "27.64"),
            (4, "43.31", "27.07"),
            (8, "60.44", "32.74"),
            (16, "75.34", "38.85")
        ]
    );
    let config = read_csv_config(&text).unwrap();
    assert_eq!(config.n.to_string(), "1..4");
    assert!(text.contains("# modulus GF(2^4)="));
}

#[test]
fn thresholds_json_keeps_full_precision() {
    let o = qudit_qkd(&["thresholds", "--p", "2", "--n", "2"]);
    let report: Report = serde_json::from_str(&stdout(&o)).unwrap();
    let CommandResult::Thresholds(rows) = &report.result else {
        panic!("wrong result kind")
    };
    assert_eq!(rows[0].e_sbmer_percent, "43.31");
    assert!((rows[0].values.e_sbmer - 0.43311).abs() < 1e-4);
}

#[test]
fn verify_reports_order_and_mub() {
    let o = qudit_qkd(&["verify", "--p", "2", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Report = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report.schema_version, 1);
    assert_eq!(report.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(report.fields[0].modulus_coefficients, [1, 1, 1]);
    let CommandResult::Verify(v) = &report.result else {
        panic!("wrong result kind")
    };
    assert_eq!(v.order, Some(5));
    assert!(v.mub && v.unitary && v.unitarity_residual < 1e-10);
}

#[test]
fn build_t_and_classes() {
    let o = qudit_qkd(&["build-t", "--p", "3", "--n", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Report = serde_json::from_str(&stdout(&o)).unwrap();
    let CommandResult::BuildT(b) = &report.result else {
        panic!("wrong result kind")
    };
    assert_eq!(b.matrix.len(), 3);
    let norm: f64 = b.matrix[0].iter().map(|[re, im]| re * re + im * im).sum();
    assert!((norm - 1.0).abs() < 1e-12);

    let o = qudit_qkd(&["classes", "--p", "2", "--n", "2", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| !l.starts_with('#')).count(), 1 + 16);
}

#[test]
fn simulate_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let mut texts = Vec::new();
    for _ in 0..2 {
        let o = qudit_qkd(&[
            "simulate", "--p", "2", "--n", "2", "--L", "100000", "--channel", "pauli-iid", "--qer", "0.1",
            "--seed", "7", "--trials", "2", "-o", path_str(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        texts.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    let text = texts.swap_remove(0);

    let report: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(report.seed, Some(7));
    let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
    assert_eq!(again, text);
    let CommandResult::Simulate(s) = &report.result else {
        panic!("wrong result kind")
    };
    assert_eq!(s.trials.len(), 2);
    assert_eq!(s.trials[0].modulus, report.fields[0].modulus);
    // no leftover temporary files
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn simulate_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trials.csv");
    let o = qudit_qkd(&[
        "simulate", "--p", "3", "--n", "1", "--L", "40000", "--channel", "intercept-resend", "--q", "1",
        "--abort-threshold", "0.2", "--seed", "3", "--trials", "3", "-o", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<TrialRow> = read_csv_rows(&text).unwrap();
    assert_eq!(rows.len(), 3);
    // an abort is a successful run
    assert!(rows.iter().all(|r| r.status == "aborted-estimation"));
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).unwrap();
    }
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    assert_eq!(String::from_utf8(w.into_inner().unwrap()).unwrap(), body);
    assert_eq!(read_csv_config(&text).unwrap().seed, Some(3));
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_qudit-qkd"));
        c.args(["simulate", "--p", "2", "--n", "1", "--L", "20000", "--channel", "noiseless", "--print-effective-config"]);
        match env {
            Some(v) => c.env("QUDIT_QKD_SEED", v),
            None => c.env_remove("QUDIT_QKD_SEED"),
        };
        c.output().unwrap()
    };
    let o = run(Some("42"));
    assert_eq!(o.status.code(), Some(0));
    let c: CliConfig = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(c.seed, Some(42));
    assert_eq!(run(None).status.code(), Some(3));
}

#[test]
fn effective_config_reloads_from_file() {
    let args = [
        "simulate", "--p", "2", "--n", "3", "--L", "50000", "--channel", "grouped-qubit", "--q", "0.4",
        "--seed", "9", "--print-effective-config",
    ];
    let o = qudit_qkd(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.json");
    std::fs::write(&file, stdout(&o)).unwrap();
    let o2 = qudit_qkd(&["simulate", "--config", path_str(&file), "--print-effective-config"]);
    assert_eq!(o2.status.code(), Some(0), "{}", stderr(&o2));
    assert_eq!(stdout(&o2), stdout(&o));
}

#[test]
fn toml_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    std::fs::write(
        &file,
        "p = 2\nn = 1\nseed = 5\nchannel = \"pauli-iid\"\nqer = 0.05\n[protocol]\nL = 30000\ncertificate = \"worst-case\"\n",
    )
    .unwrap();
    let o = qudit_qkd(&["simulate", "--config", path_str(&file), "--seed", "6", "--print-effective-config"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let c: CliConfig = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(c.seed, Some(6));
    assert_eq!(c.protocol.unwrap().particles, 30000);
}

#[test]
fn exit_codes() {
    let o = qudit_qkd(&["attack", "--p", "3", "--n", "1", "--q", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("grouped attack requires characteristic 2"));

    assert_eq!(qudit_qkd(&["verify", "--p", "2", "--n", "2", "--bogus"]).status.code(), Some(2));
    assert_eq!(qudit_qkd(&[]).status.code(), Some(2));
    assert_eq!(qudit_qkd(&["--help"]).status.code(), Some(0));
    assert_eq!(
        qudit_qkd(&["simulate", "--p", "2", "--n", "1", "--channel", "noiseless", "--qer", "0.1"]).status.code(),
        Some(2)
    );
    assert_eq!(qudit_qkd(&["verify", "--p", "6", "--n", "1"]).status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"p": 2, "n": 1, "colour": "red"}"#).unwrap();
    assert_eq!(qudit_qkd(&["verify", "--config", path_str(&bad)]).status.code(), Some(3));
    let missing = dir.path().join("missing.json");
    assert_eq!(qudit_qkd(&["verify", "--config", path_str(&missing)]).status.code(), Some(5));
    let unwritable = dir.path().join("no/such/dir/out.json");
    assert_eq!(
        qudit_qkd(&["verify", "--p", "2", "--n", "1", "-o", path_str(&unwritable)]).status.code(),
        Some(5)
    );
}

#[test]
fn attack_analysis_and_simulation() {
    let o = qudit_qkd(&["attack", "--p", "2", "--n", "4", "--q", "0.84"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Report = serde_json::from_str(&stdout(&o)).unwrap();
    let CommandResult::Attack(a) = &report.result else {
        panic!("wrong result kind")
    };
    assert!(a.analysis.q_in_interval && a.analysis.tolerated_at_16);
    assert!(a.simulation.is_none());

    let o = qudit_qkd(&[
        "attack", "--p", "2", "--n", "1", "--q", "0.84", "--L", "200000", "--test-count", "2000", "--trials", "2",
        "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Report = serde_json::from_str(&stdout(&o)).unwrap();
    let CommandResult::Attack(a) = &report.result else {
        panic!("wrong result kind")
    };
    assert_eq!(a.simulation.as_ref().unwrap().summary.aborted, 2);
}
