use std::io::Write;
use std::process::{Command, Output};

use nap_core::filter::Constraint;
use nap_core::snapshot::Snapshot;
use serde_json::Value;

fn nap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json report")
}

fn scenario(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn is_rational(s: &str) -> bool {
    let s = s.strip_prefix('-').unwrap_or(s);
    match s.split_once('/') {
        Some((p, q)) => {
            !p.is_empty() && !q.is_empty() && p.bytes().chain(q.bytes()).all(|b| b.is_ascii_digit())
        }
        None => false,
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&nap(&["--help"])), 0);
    assert_eq!(code(&nap(&["--version"])), 0);
}

#[test]
fn unknown_flag_is_a_validation_error() {
    assert_eq!(code(&nap(&["query", "--event", "Even", "--bogus"])), 2);
}

#[test]
fn malformed_class_is_a_validation_error() {
    let o = nap(&["query", "--event", "Evn("]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));
}

#[test]
fn mismatched_universe_flags_are_rejected() {
    assert_eq!(
        code(&nap(&[
            "query",
            "--universe",
            "hf",
            "--omega-bound",
            "3",
            "--event",
            "Even"
        ])),
        2
    );
    assert_eq!(code(&nap(&["query", "--rank", "4", "--event", "Even"])), 2);
}

#[test]
fn values_are_exact_fractions() {
    let o = nap(&[
        "query",
        "--event",
        "Even",
        "--at",
        "[0,1,2,w]",
        "--at",
        "[0,2,4]",
        "--at",
        "[1,3]",
    ]);
    assert_eq!(code(&o), 0);
    let r = &json(&o)["records"][0];
    let values: Vec<&str> = r["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["value"].as_str().unwrap())
        .collect();
    assert_eq!(values, ["3/4", "1/1", "0/1"]);
    assert!(values.iter().all(|v| is_rational(v)));
}

#[test]
fn sampled_values_are_exact_fractions() {
    let o = nap(&[
        "query", "--event", "Even", "--given", "On", "--base", "ordinal", "--seed", "4",
    ]);
    assert_eq!(code(&o), 0);
    let values = json(&o)["records"][0]["values"].as_array().unwrap().clone();
    assert!(!values.is_empty());
    assert!(values
        .iter()
        .all(|p| is_rational(p["value"].as_str().unwrap())));
}

#[test]
fn report_fields_come_in_canonical_order() {
    let f = scenario(
        r#"
[universe]
mode = "ordinal"
bound = 3

[[query]]
kind = "probability"
event = "Odd"
at = ["[1,2]"]
expect = ["1/2"]
"#,
    );
    let o = nap(&["run", f.path().to_str().unwrap()]);
    let text = String::from_utf8(o.stdout).unwrap();
    let in_order = |keys: &[&str]| {
        let at: Vec<usize> = keys
            .iter()
            .map(|k| text.find(&format!("\"{k}\"")).unwrap())
            .collect();
        at.windows(2).all(|w| w[0] < w[1])
    };
    assert!(
        in_order(&["tool", "version", "command", "seed", "universe", "base", "records", "summary"]),
        "{text}"
    );
    assert!(
        in_order(&[
            "id",
            "kind",
            "inputs",
            "status",
            "germ",
            "values",
            "checks",
            "elapsed_us"
        ]),
        "{text}"
    );
}

#[test]
fn csv_has_one_row_per_record() {
    let o = nap(&["demo", "euclidean", "--out", "csv"]);
    assert_eq!(code(&o), 0);
    let mut rd = csv::Reader::from_reader(o.stdout.as_slice());
    let headers: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers[..3], ["id", "kind", "status"]);
    assert_eq!(headers.last().unwrap(), "elapsed_us");
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][2], "pass");
    assert_eq!(&rows[0][5], "forced");
    assert_eq!(&rows[0][6], "euclidean");
}

#[test]
fn demos_reach_their_verdicts() {
    for (demo, verdict) in [
        ("euclidean", "forced"),
        ("hume-failure", "forced"),
        ("translation-failure", "forced"),
        ("pn-iteration", "witnessed"),
    ] {
        let o = nap(&["demo", demo]);
        assert_eq!(
            code(&o),
            0,
            "{demo}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert_eq!(json(&o)["records"][0]["verdict"], verdict, "{demo}");
    }
}

#[test]
fn powerset_chain_counts_follow_the_relations() {
    let o = nap(&["demo", "powerset-chain"]);
    assert_eq!(code(&o), 0);
    let r = &json(&o)["records"][0];
    assert_eq!(r["note"], "witness counts 2, 5, 6, 6");
    let start = Snapshot::decode("[{#4},{#9}]").unwrap();
    let w = Snapshot::decode(r["witness"].as_str().unwrap()).unwrap();
    assert!(start.states().iter().all(|s| w.states().contains(s)));
}

#[test]
fn superregular_witness_round_trips() {
    let o = nap(&[
        "witness",
        "superreg",
        "--pair",
        "Even|NonOrd|3",
        "--pair",
        "Lim|V|2",
        "--pin",
        "5",
        "--pin",
        "w+1",
    ]);
    assert_eq!(code(&o), 0);
    let r = &json(&o)["records"][0];
    let w = Snapshot::decode(r["witness"].as_str().unwrap()).unwrap();
    for c in [
        "ratio(Even,NonOrd,3)",
        "ratio(Lim,V,2)",
        "fine(5)",
        "fine(w+1)",
    ] {
        assert!(
            Constraint::decode(c).unwrap().contains(&w).unwrap(),
            "{c} on {w}"
        );
    }
}

#[test]
fn ordinal_witness_round_trips() {
    let o = nap(&[
        "witness", "ordinal", "--k", "3", "--l", "3", "--m", "3", "--pair", "Lim|Odd", "--pin",
        "w+1",
    ]);
    assert_eq!(code(&o), 0);
    let r = &json(&o)["records"][0];
    let w = Snapshot::decode(r["witness"].as_str().unwrap()).unwrap();
    for c in ["ratio(Lim,Odd,3)", "interval(3)", "weight(3)", "fine(w+1)"] {
        assert!(
            Constraint::decode(c).unwrap().contains(&w).unwrap(),
            "{c} on {w}"
        );
    }
}

#[test]
fn failed_expectation_exits_one() {
    let f = scenario(
        r#"
[universe]
mode = "ordinal"
bound = 3

[[query]]
kind = "probability"
event = "Even"
at = ["[0,1]"]
expect = ["2/3"]
"#,
    );
    let o = nap(&["run", f.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["summary"]["failed"], 1);
}

#[test]
fn unknown_scenario_field_exits_two() {
    let f = scenario(
        r#"
[universe]
mode = "ordinal"
bound = 3
colour = "red"
"#,
    );
    let o = nap(&["run", f.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    assert_eq!(code(&nap(&["validate", f.path().to_str().unwrap()])), 2);
}

#[test]
fn unknown_query_field_exits_two() {
    let f = scenario(
        r#"
[universe]
mode = "ordinal"
bound = 3

[[query]]
kind = "compare"
lhs = "pr(id,Even)"
rel = "<"
rhs = "pr(id,Odd)"
tolerance = "1/100"
"#,
    );
    assert_eq!(code(&nap(&["run", f.path().to_str().unwrap()])), 2);
}

#[test]
fn bad_class_in_scenario_exits_two_before_running() {
    let f = scenario(
        r#"
[universe]
mode = "ordinal"
bound = 3

[[query]]
kind = "probability"
event = "Even"
at = ["[0]"]

[[query]]
kind = "probability"
event = "union(Even"
"#,
    );
    let o = nap(&["run", f.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
}

#[test]
fn desk_query_without_tiers_exits_two() {
    let f = scenario(
        r#"
[universe]
mode = "ordinal"
bound = 3

[[query]]
kind = "restriction"
"#,
    );
    assert_eq!(code(&nap(&["run", f.path().to_str().unwrap()])), 2);
}

#[test]
fn missing_scenario_file_exits_two() {
    assert_eq!(code(&nap(&["run", "/nonexistent/scenario.toml"])), 2);
}

#[test]
fn output_file_receives_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = nap(&["demo", "hume-failure", "--output", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(written["records"][0]["verdict"], "forced");
}

#[test]
fn audit_passes_on_a_small_budget() {
    let o = nap(&["audit", "--budget", "10", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&o);
    assert_eq!(report["summary"]["failed"], 0);
    assert_eq!(report["summary"]["errors"], 0);
    assert_eq!(code(&nap(&["audit", "--budget", "0"])), 2);
}

#[test]
fn lift_beyond_the_universe_is_a_query_error() {
    let f = scenario(
        r#"
[universe]
mode = "hf"
bound = 5

[[query]]
kind = "lift"
depth = 3
level = 4
"#,
    );
    let o = nap(&["run", f.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["records"][0]["status"], "error");
}
