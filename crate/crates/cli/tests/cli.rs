//! End-to-end checks of the `chardeg` binary: exit codes, exact stdout
//! payloads, stderr separation, and scan determinism across worker counts.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chardeg"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary starts");
    child
        .stdin
        .take()
        .expect("stdin handle")
        .write_all(input.as_bytes())
        .expect("stdin write");
    child.wait_with_output().expect("binary finishes")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

#[test]
fn decide_yes_prints_verdict_and_witness() {
    let out = run(&["decide", "15", "17"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout_of(&out),
        "YES\n{\"pairs\":[{\"block\":[3,5],\"b\":15,\"p\":2,\"f\":4}],\"d\":15,\"cofactor\":32}\n"
    );
    assert!(stderr_of(&out).is_empty());
}

#[test]
fn decide_no_exits_one() {
    let out = run(&["decide", "5", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_of(&out), "NO\n");
    assert!(stderr_of(&out).is_empty());
}

#[test]
fn decide_trivial_degree() {
    let out = run(&["decide", "1", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out), "YES\n{\"pairs\":[],\"d\":1,\"cofactor\":5}\n");
}

#[test]
fn hypothesis_violations_are_usage_errors() {
    let out = run(&["decide", "12", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout_of(&out).is_empty());
    assert!(stderr_of(&out).contains("not square-free"));

    let out = run(&["decide", "3", "3"]); // d + e = 6 shares the factor 3
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("share"));
}

#[test]
fn force_tags_the_verdict_and_warns_on_stderr() {
    let out = run(&["decide", "12", "5", "--force"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_of(&out), "NO[out-of-hypothesis: non-square-free-d]\n");
    assert!(stderr_of(&out).contains("warning"));

    // an in-hypothesis instance under --force stays untagged
    let out = run(&["decide", "3", "4", "--force"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).starts_with("YES\n"));
    assert!(stderr_of(&out).is_empty());
}

#[test]
fn witness_emits_only_the_document() {
    let out = run(&["witness", "6", "29"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout_of(&out),
        "{\"pairs\":[{\"block\":[2],\"b\":2,\"p\":5,\"f\":1},{\"block\":[3],\"b\":3,\"p\":7,\"f\":1}],\"d\":6,\"cofactor\":35}\n"
    );

    let out = run(&["witness", "5", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).is_empty());
    assert!(stderr_of(&out).contains("NO"));
}

#[test]
fn witness_round_trips_through_verify() {
    let witness = stdout_of(&run(&["witness", "15", "17"]));
    let out = run_stdin(&["verify"], &witness);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout_of(&out),
        "{\"well_formed\":true,\"partition\":true,\"congruences\":true,\"budget\":true,\"ok\":true}\n"
    );
}

#[test]
fn verify_rejects_a_corrupted_exponent() {
    // f dropped from 4 to 3: 2^3 = 8 is not 1 mod 15
    let doc = "{\"pairs\":[{\"block\":[3,5],\"b\":15,\"p\":2,\"f\":3}],\"d\":15,\"cofactor\":32}";
    let out = run_stdin(&["verify"], doc);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(
        stdout_of(&out),
        "{\"well_formed\":true,\"partition\":true,\"congruences\":false,\"budget\":true,\"ok\":false}\n"
    );
}

#[test]
fn verify_rejects_malformed_input_as_usage() {
    let out = run_stdin(&["verify"], "not json");
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout_of(&out).is_empty());
    assert!(stderr_of(&out).contains("error"));
}

#[test]
fn verify_reads_files_and_honors_force() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("witness.json");

    // in-hypothesis document from a file
    std::fs::write(&path, stdout_of(&run(&["witness", "3", "4"]))).unwrap();
    let out = run(&["verify", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    // same group order with the roles swapped violates coprimality
    let doc = "{\"pairs\":[],\"d\":1,\"cofactor\":21}";
    std::fs::write(&path, doc).unwrap();
    let ok = run(&["verify", "--file", path.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0)); // d = 1 is fine: coprime to everything

    let doc = "{\"pairs\":[],\"d\":6,\"cofactor\":4}";
    std::fs::write(&path, doc).unwrap();
    let strict = run(&["verify", "--file", path.to_str().unwrap()]);
    assert_eq!(strict.status.code(), Some(2));
    let forced = run(&["verify", "--file", path.to_str().unwrap(), "--force"]);
    // parses now, but the empty witness covers no prime of 6
    assert_eq!(forced.status.code(), Some(3));
    assert!(stderr_of(&forced).contains("warning"));
}

#[test]
fn construct_emits_blueprint_and_report() {
    let out = run(&["construct", "15", "17"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout_of(&out),
        "{\"pairs\":[{\"block\":[3,5],\"b\":15,\"p\":2,\"f\":4}],\"d\":15,\"cofactor\":32,\"abelian\":[2],\"degrees\":{\"1\":30,\"15\":2}}\n{\"order_matches\":true,\"sum_of_squares_matches\":true,\"congruences_hold\":true,\"degree_d_present\":true,\"all_ok\":true}\n"
    );

    let out = run(&["construct", "5", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).is_empty());
}

#[test]
fn scan_csv_document_is_exact() {
    let out = run(&["scan", "--e", "4..4", "--d-limit", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout_of(&out),
        "d,e,order,verdict,witness,bound_ok\n\
         1,4,5,YES,\"{\"\"pairs\"\":[],\"\"d\"\":1,\"\"cofactor\"\":5}\",true\n\
         3,4,21,YES,\"{\"\"pairs\"\":[{\"\"block\"\":[3],\"\"b\"\":3,\"\"p\"\":7,\"\"f\"\":1}],\"\"d\"\":3,\"\"cofactor\"\":7}\",true\n\
         5,4,45,NO,,true\n\
         7,4,77,NO,,true\n"
    );
}

#[test]
fn scan_single_value_range_and_jsonl() {
    let out = run(&["scan", "--e", "17", "--d-limit", "16", "--format", "jsonl"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.lines().all(|l| l.starts_with('{')));
    assert!(text.contains(
        "{\"d\":15,\"e\":17,\"order\":480,\"verdict\":\"YES\",\"witness\":{\"pairs\":[{\"block\":[3,5],\"b\":15,\"p\":2,\"f\":4}],\"d\":15,\"cofactor\":32},\"blueprint_ok\":true,\"bound_ok\":true,\"flags\":[]}"
    ));
}

#[test]
fn scan_worker_counts_agree_byte_for_byte() {
    let base = ["scan", "--e", "2..20", "--d-limit", "40"];
    let one = run(&[&base[..], &["--jobs", "1"]].concat());
    let eight = run(&[&base[..], &["--jobs", "8"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(stdout_of(&one), stdout_of(&eight));

    let mut jsonl = base.to_vec();
    jsonl.extend(["--format", "jsonl"]);
    let a = run(&[&jsonl[..], &["--jobs", "1"]].concat());
    let b = run(&[&jsonl[..], &["--jobs", "8"]].concat());
    assert_eq!(stdout_of(&a), stdout_of(&b));
}

#[test]
fn scan_jobs_env_var_is_honored() {
    let flagged = run(&["scan", "--e", "2..8", "--d-limit", "20", "--jobs", "2"]);
    let out = bin()
        .args(["scan", "--e", "2..8", "--d-limit", "20"])
        .env("CHARDEG_JOBS", "3")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out), stdout_of(&flagged));

    let bad = bin()
        .args(["scan", "--e", "2..8", "--d-limit", "20"])
        .env("CHARDEG_JOBS", "many")
        .output()
        .expect("binary runs");
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr_of(&bad).contains("CHARDEG_JOBS"));
}

#[test]
fn scan_writes_files_and_truncates() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("scan.csv");
    let out = run(&[
        "scan", "--e", "4..4", "--d-limit", "10", "--ceiling", "2", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).is_empty());
    let text = std::fs::read_to_string(&path).expect("scan file");
    assert_eq!(text.lines().count(), 4); // header, two records, marker
    assert!(text.ends_with("# truncated\n"));
}

#[test]
fn scan_cross_check_reports_clean() {
    let out = run(&["scan", "--e", "2..10", "--d-limit", "20", "--cross-check"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr_of(&out).contains("0 discrepancies"));
}

#[test]
fn scan_rejects_bad_ranges() {
    let out = run(&["scan", "--e", "9..2", "--d-limit", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("range"));

    let out = run(&["scan", "--e", "x..2", "--d-limit", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn factor_order_crt_documents() {
    let out = run(&["factor", "360"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout_of(&out),
        "{\"n\":360,\"factors\":[{\"p\":2,\"a\":3},{\"p\":3,\"a\":2},{\"p\":5,\"a\":1}]}\n"
    );

    let out = run(&["factor", "1"]);
    assert_eq!(stdout_of(&out), "{\"n\":1,\"factors\":[]}\n");

    let out = run(&["factor", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["order", "2", "15"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out), "{\"a\":2,\"m\":15,\"order\":4}\n");

    let out = run(&["order", "6", "15"]); // shares the factor 3
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("share a factor"));

    let out = run(&["crt", "--pair", "2,3", "--pair", "3,5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out), "{\"solution\":8,\"modulus\":15}\n");

    let out = run(&["crt", "--pair", "2,3", "--pair", "1,6"]);
    assert_eq!(out.status.code(), Some(2)); // moduli share the factor 3

    let out = run(&["crt", "--pair", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("--pair"));
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["decide", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["decide", "3", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["decide", "3", "-3"]); // d + e = 0
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn negative_e_is_reachable_under_force() {
    // d = 15, e = -7: order 120, cofactor 8 = 2^3 with 2^4 unavailable,
    // but 2^2 = 4 covers nothing; 15 needs 2^4. The verdict is NO.
    let out = run(&["decide", "15", "--", "-7"]);
    assert_eq!(out.status.code(), Some(2)); // e < 2 violates the hypotheses

    let forced = run(&["decide", "15", "--force", "--", "-7"]);
    assert_eq!(forced.status.code(), Some(1));
    assert_eq!(
        stdout_of(&forced),
        "NO[out-of-hypothesis: e-not-above-one]\n"
    );
}
