use std::io::Write;
use std::process::{Command, Output, Stdio};

fn spinal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinal"))
        .args(args)
        .output()
        .unwrap()
}

fn spinal_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_spinal"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_lines(o: &Output) -> Vec<serde_json::Value> {
    stdout(o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn eppf_values() {
    let o = spinal(&[
        "eppf",
        "--family",
        "pdstar",
        "--alpha",
        "0.75",
        "--theta",
        "-1",
        "--composition",
        "2,1",
    ]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o).trim(),
        r#"{"composition":[2,1],"value":0.253897113642450}"#
    );
    let swapped = spinal(&[
        "eppf",
        "--alpha",
        "0.75",
        "--theta",
        "-1",
        "--composition",
        "1,2",
    ]);
    assert_eq!(json_lines(&o)[0]["value"], json_lines(&swapped)[0]["value"]);
    let single = spinal(&["eppf", "--theta", "-1", "--composition", "1"]);
    assert_eq!(json_lines(&single)[0]["value"], "infinite");
    let csv = spinal(&[
        "eppf",
        "--family",
        "pd",
        "--alpha",
        "0.5",
        "--theta",
        "1",
        "--composition",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(stdout(&csv), "composition,value\n\"1\",1.00000000000000\n");
}

#[test]
fn exit_codes() {
    let domain = spinal(&["eppf", "--alpha", "1.5", "--composition", "2,1"]);
    assert_eq!(domain.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&domain.stderr).unwrap();
    assert_eq!(err["error"], "domain");
    assert_eq!(spinal(&["check", "nonsense"]).status.code(), Some(2));
    assert_eq!(spinal(&["law", "shape", "--n", "9"]).status.code(), Some(3));
    assert_eq!(
        spinal(&["check", "reroot", "--n", "5"]).status.code(),
        Some(0)
    );
    let fail = spinal(&["check", "reroot", "--theta", "-0.8", "--n", "4"]);
    assert_eq!(fail.status.code(), Some(1));
    assert_eq!(json_lines(&fail)[0]["status"], "fail");
    let expected = spinal(&[
        "check", "reroot", "--theta", "-0.8", "--n", "4", "--expect", "fail",
    ]);
    assert_eq!(expected.status.code(), Some(0));
}

#[test]
fn checks_report_fields() {
    for args in [
        &["check", "factor", "--theta", "-0.8"][..],
        &["check", "lemma15", "--nmax", "6"],
        &["check", "reversal", "--family", "brownian", "--n", "8"],
        &["check", "reconstruct", "--alpha", "0.6", "--nmax", "7"],
    ] {
        let o = spinal(args);
        assert!(o.status.success(), "{args:?}: {}", stdout(&o));
        for r in json_lines(&o) {
            for key in [
                "check",
                "parameters",
                "statistic",
                "threshold",
                "status",
                "runtime",
            ] {
                assert!(r.get(key).is_some(), "{key} missing from {r}");
            }
            assert_eq!(r["status"], "pass");
        }
    }
    let grid = spinal(&["check", "consistency", "--grid", "--nmax", "5"]);
    assert_eq!(grid.status.code(), Some(1));
    let rows = json_lines(&grid);
    assert!(rows.len() > 2);
    for r in &rows {
        let on_line = (r["parameters"]["theta"].as_f64().unwrap() + 1.0).abs() < 1e-12;
        assert_eq!(r["status"] == "pass", on_line, "{r}");
    }
    let factor = spinal(&["check", "factor", "--theta", "-0.8"]);
    let r = &json_lines(&factor)[0];
    assert_eq!(r["statistic"]["factor"]["law"], "pd");
    assert!((r["statistic"]["factor"]["theta"].as_f64().unwrap() + 0.05).abs() < 1e-12);
}

#[test]
fn law_tables() {
    let o = spinal(&[
        "law", "shape", "--n", "3", "--alpha", "0.75", "--theta", "-1",
    ]);
    let v = &json_lines(&o)[0];
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    assert!((entries[0]["p"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(entries[0]["key"]["children"].as_array().unwrap().len(), 3);
    for e in &entries[1..] {
        assert!((e["p"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    }
    for kind in ["shape", "coarse", "fine", "composition"] {
        let o = spinal(&["law", kind, "--n", "4", "--family", "brownian"]);
        let total = json_lines(&o)[0]["total"].as_f64().unwrap();
        assert!((total - 1.0).abs() < 1e-9);
    }
    let coarse = spinal(&["law", "coarse", "--n", "4"]);
    assert!(json_lines(&coarse)[0]["max_deviation"].as_f64().unwrap() < 1e-12);
    let csv = spinal(&["law", "composition", "--n", "3", "--format", "csv"]);
    assert!(stdout(&csv).starts_with("key,p\n"));
}

#[test]
fn sampling_is_deterministic() {
    let base = [
        "sample-tree",
        "--n",
        "6",
        "--samples",
        "300",
        "--seed",
        "42",
        "--theta",
        "-0.8",
    ];
    let a = spinal(&[&base[..], &["--workers", "1"]].concat());
    let b = spinal(&[&base[..], &["--workers", "4"]].concat());
    let c = spinal(&base);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let other = spinal(&[
        "sample-tree",
        "--n",
        "6",
        "--samples",
        "300",
        "--seed",
        "43",
        "--theta",
        "-0.8",
    ]);
    assert_ne!(a.stdout, other.stdout);
    let lines = json_lines(&a);
    assert_eq!(lines[0]["type"], "header");
    assert_eq!(lines[0]["seed"], 42);
    assert_eq!(lines.len(), 301);
}

#[test]
fn single_leaf_samples() {
    let o = spinal(&["sample-tree", "--n", "1", "--samples", "2"]);
    for r in &json_lines(&o)[1..] {
        assert_eq!(r["tree"], serde_json::json!({"block": [1], "children": []}));
    }
}

#[test]
fn sample_pd_partitions() {
    let o = spinal(&[
        "sample-pd",
        "--family",
        "pd",
        "--alpha",
        "0.5",
        "--theta",
        "0",
        "--n",
        "7",
        "--samples",
        "50",
    ]);
    assert!(o.status.success());
    for r in &json_lines(&o)[1..] {
        let n: usize = r["blocks"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| b.as_array().unwrap().len())
            .sum();
        assert_eq!(n, 7);
    }
    let splits = spinal(&["sample-pd", "--n", "5", "--samples", "50"]);
    for r in &json_lines(&splits)[1..] {
        assert!(r["blocks"].as_array().unwrap().len() >= 2);
    }
}

const FIGURE_TREE: &str = r#"{"block":[1,2,3,4,5,6,7,8,9],"children":[{"block":[2]},{"block":[4]},{"block":[5,6,9],"children":[{"block":[5]},{"block":[6,9],"children":[{"block":[6]},{"block":[9]}]}]},{"block":[1,3,7,8],"children":[{"block":[1]},{"block":[3,7,8],"children":[{"block":[3]},{"block":[7,8],"children":[{"block":[7]},{"block":[8]}]}]}]}]}"#;

#[test]
fn spinal_records() {
    let cherry = r#"{"block":[1,2],"children":[{"block":[1]},{"block":[2]}]}"#;
    let input = format!("{FIGURE_TREE}\n{cherry}\n");
    let o = spinal_stdin(&["spinal"], &input);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = json_lines(&o);
    assert_eq!(
        recs[0]["coarse_ordered"],
        serde_json::json!([[2, 4, 5, 6, 9], [3, 7, 8], [1]])
    );
    assert_eq!(
        recs[0]["coarse"],
        serde_json::json!([[1], [2, 4, 5, 6, 9], [3, 7, 8]])
    );
    assert_eq!(
        recs[0]["fine"],
        serde_json::json!([[1], [2], [3, 7, 8], [4], [5, 6, 9]])
    );
    assert_eq!(recs[0]["composition"], serde_json::json!([5, 3]));
    assert_eq!(recs[1]["coarse_ordered"], serde_json::json!([[2], [1]]));
    let again = spinal_stdin(&["spinal"], &input);
    assert_eq!(o.stdout, again.stdout);

    let bad = spinal_stdin(
        &["spinal"],
        &format!("{cherry}\n{{\"block\":[1,2],\"children\":[{{\"block\":[1]}}]}}\nnot json\n"),
    );
    assert_eq!(bad.status.code(), Some(2));
    let recs = json_lines(&bad);
    assert_eq!(recs.len(), 3);
    assert!(recs[0].get("error").is_none());
    assert!(recs[1].get("error").is_some() && recs[2].get("error").is_some());
}

#[test]
fn sampled_trees_pipe_into_spinal() {
    let sample = spinal(&["sample-tree", "--n", "5", "--samples", "20"]);
    let o = spinal_stdin(&["spinal"], &stdout(&sample));
    assert!(o.status.success());
    let recs = json_lines(&o);
    assert_eq!(recs.len(), 20);
    for r in recs {
        assert_eq!(
            r["coarse_ordered"].as_array().unwrap().last().unwrap(),
            &serde_json::json!([1])
        );
    }
}

#[test]
fn reconstructed_table_round_trips_through_table_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.json");
    let path = path.to_str().unwrap();
    let o = spinal(&[
        "reconstruct",
        "--alpha",
        "0.75",
        "--theta",
        "-1",
        "--nmax",
        "6",
        "--out",
        path,
    ]);
    assert!(o.status.success());
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(written["table"]["n_max"], 6);
    let direct = spinal(&["law", "shape", "--n", "4"]);
    let via_table = spinal(&[
        "law", "shape", "--n", "4", "--family", "table", "--table", path,
    ]);
    let a = &json_lines(&direct)[0]["entries"];
    let b = &json_lines(&via_table)[0]["entries"];
    for (x, y) in a.as_array().unwrap().iter().zip(b.as_array().unwrap()) {
        assert!((x["p"].as_f64().unwrap() - y["p"].as_f64().unwrap()).abs() < 1e-9);
    }
    let lemma = spinal(&[
        "check", "lemma15", "--family", "table", "--table", path, "--nmax", "6",
    ]);
    assert_eq!(lemma.status.code(), Some(0));
    let over = spinal(&[
        "sample-tree",
        "--family",
        "table",
        "--table",
        path,
        "--n",
        "7",
    ]);
    assert_eq!(over.status.code(), Some(3));
}
