//! Bulk sweeps over `(d, e)` ranges, with CSV and JSONL emitters and an
//! oracle-backed cross-check. Work is split across threads by `e` slice;
//! slice results are reassembled in order, so the output is byte-identical
//! no matter how many workers run.

use crate::arith::{factor, is_square_free};
use crate::criterion::{
    decide, oracle_decide, witness_from_json, witness_to_json, Instance, OracleError,
};
use crate::group_model::{blueprint_from_witness, verify_blueprint};
use rayon::prelude::*;
use rayon::ThreadPoolBuilder;
use std::fmt::Write as _;

/// What to sweep. `e` runs over `e_min..=e_max` (negative values allowed as
/// long as `d + e >= 1`); `d` runs over the square-free values in
/// `1..=d_limit`. Rows violating the coprimality or `e > 1` hypotheses are
/// dropped unless the matching `include_*` flag is set, in which case they
/// appear tagged. `record_ceiling` caps the output length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanParams {
    pub e_min: i64,
    pub e_max: i64,
    pub d_limit: u64,
    pub include_non_coprime: bool,
    pub include_e_le_one: bool,
    pub record_ceiling: Option<usize>,
}

impl ScanParams {
    /// Range with both hypothesis filters on and no ceiling.
    pub fn new(e_min: i64, e_max: i64, d_limit: u64) -> Self {
        ScanParams {
            e_min,
            e_max,
            d_limit,
            include_non_coprime: false,
            include_e_le_one: false,
            record_ceiling: None,
        }
    }
}

/// One scanned instance. `witness_json` and `blueprint_ok` are present
/// exactly on YES rows; `bound_ok` is present for `e >= 2` and records
/// whether the order respects `e^3 * (e - 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanRecord {
    pub d: u128,
    pub e: i64,
    pub order: u128,
    pub yes: bool,
    pub witness_json: Option<String>,
    pub blueprint_ok: Option<bool>,
    pub bound_ok: Option<bool>,
    pub flags: Vec<&'static str>,
}

/// Scan result: records in (e, d) order, plus whether the ceiling cut them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanOutput {
    pub records: Vec<ScanRecord>,
    pub truncated: bool,
}

fn order_bound_holds(order: u128, e: i64) -> Option<bool> {
    if e < 2 {
        return None;
    }
    let e = e as u128;
    // e^3 * (e - 1); if that leaves 128 bits the order trivially fits under it
    let bound = e
        .checked_mul(e)
        .and_then(|s| s.checked_mul(e))
        .and_then(|c| c.checked_mul(e - 1));
    Some(match bound {
        Some(b) => order <= b,
        None => true,
    })
}

fn scan_slice(e: i64, square_free_d: &[u64], params: &ScanParams) -> Vec<ScanRecord> {
    let mut rows = Vec::new();
    for &d in square_free_d {
        let cofactor = d as i128 + e as i128;
        if cofactor < 1 {
            continue;
        }
        let d = d as u128;
        let instance = match Instance::new_forced(d, cofactor as u128) {
            Ok(i) => i,
            Err(_) => continue,
        };
        let flags = instance.flags().violations();
        let permitted = flags.iter().all(|&tag| match tag {
            "non-coprime" => params.include_non_coprime,
            "e-not-above-one" => params.include_e_le_one,
            _ => false,
        });
        if !permitted {
            continue;
        }
        let verdict = decide(&instance);
        let (witness_json, blueprint_ok) = match verdict.witness() {
            Some(w) => {
                let ok = blueprint_from_witness(&instance, w)
                    .map(|bp| verify_blueprint(&bp, &instance).all_ok())
                    .unwrap_or(false);
                (Some(witness_to_json(&instance, w)), Some(ok))
            }
            None => (None, None),
        };
        rows.push(ScanRecord {
            d,
            e,
            order: instance.order(),
            yes: verdict.is_yes(),
            witness_json,
            blueprint_ok,
            bound_ok: order_bound_holds(instance.order(), e),
            flags,
        });
    }
    rows
}

/// Run the sweep. `jobs` sets the worker count; `None` lets the runtime
/// pick. Output is identical for every `jobs` value.
pub fn scan(params: &ScanParams, jobs: Option<usize>) -> ScanOutput {
    let square_free_d: Vec<u64> = (1..=params.d_limit)
        .filter(|&d| {
            factor(d as u128)
                .map(|f| is_square_free(&f))
                .unwrap_or(false)
        })
        .collect();
    let slices: Vec<i64> = (params.e_min..=params.e_max).collect();
    let pool = ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .expect("worker pool");
    let per_slice: Vec<Vec<ScanRecord>> = pool.install(|| {
        slices
            .par_iter()
            .map(|&e| scan_slice(e, &square_free_d, params))
            .collect()
    });
    let ceiling = params.record_ceiling.unwrap_or(usize::MAX);
    let mut records = Vec::new();
    let mut truncated = false;
    'outer: for slice in per_slice {
        for row in slice {
            if records.len() >= ceiling {
                truncated = true;
                break 'outer;
            }
            records.push(row);
        }
    }
    ScanOutput { records, truncated }
}

/// CSV document with header `d,e,order,verdict,witness,bound_ok`. Rows kept
/// despite hypothesis violations carry the tags after the verdict, e.g.
/// `NO[non-coprime]`. A trailing `# truncated` line marks a cut scan.
pub fn write_csv(out: &ScanOutput) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["d", "e", "order", "verdict", "witness", "bound_ok"])
        .expect("in-memory write");
    for r in &out.records {
        let mut verdict = if r.yes { "YES".to_string() } else { "NO".to_string() };
        if !r.flags.is_empty() {
            let _ = write!(verdict, "[{}]", r.flags.join(","));
        }
        let bound = match r.bound_ok {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        w.write_record([
            r.d.to_string().as_str(),
            r.e.to_string().as_str(),
            r.order.to_string().as_str(),
            verdict.as_str(),
            r.witness_json.as_deref().unwrap_or(""),
            bound,
        ])
        .expect("in-memory write");
    }
    let mut text = String::from_utf8(w.into_inner().expect("in-memory flush"))
        .expect("csv output is utf-8");
    if out.truncated {
        text.push_str("# truncated\n");
    }
    text
}

fn opt_bool_json(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "true",
        Some(false) => "false",
        None => "null",
    }
}

/// JSONL document: one object per record, witness inlined as an object or
/// `null`, and a final `{"truncated":true}` line when the ceiling cut in.
pub fn write_jsonl(out: &ScanOutput) -> String {
    let mut text = String::new();
    for r in &out.records {
        let flags: Vec<String> = r.flags.iter().map(|t| format!("\"{t}\"")).collect();
        let _ = writeln!(
            text,
            "{{\"d\":{},\"e\":{},\"order\":{},\"verdict\":\"{}\",\"witness\":{},\"blueprint_ok\":{},\"bound_ok\":{},\"flags\":[{}]}}",
            r.d,
            r.e,
            r.order,
            if r.yes { "YES" } else { "NO" },
            r.witness_json.as_deref().unwrap_or("null"),
            opt_bool_json(r.blueprint_ok),
            opt_bool_json(r.bound_ok),
            flags.join(",")
        );
    }
    if out.truncated {
        text.push_str("{\"truncated\":true}\n");
    }
    text
}

/// How a record can disagree with an independent re-derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscrepancyKind {
    /// brute-force enumeration disagrees with the recorded verdict
    VerdictMismatch,
    /// recorded witness text does not parse back to the record's instance
    WitnessUnparseable,
    /// recorded witness parses but fails verification
    WitnessInvalid,
    /// blueprint rebuilt from the witness fails verification, or the
    /// recorded `blueprint_ok` disagrees with the rebuilt one
    BlueprintInvalid,
    /// the instance was too large for the enumeration budget
    OracleRefused,
}

/// One cross-check failure, tied to its record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    pub d: u128,
    pub e: i64,
    pub kind: DiscrepancyKind,
    pub detail: String,
}

/// Re-derive every record (order at most `order_ceiling`, when given) from
/// scratch: brute-force the verdict, reparse and reverify the witness, and
/// rebuild the blueprint. Returns all disagreements; empty means clean.
pub fn cross_check(records: &[ScanRecord], order_ceiling: Option<u128>) -> Vec<Discrepancy> {
    let mut out = Vec::new();
    for r in records {
        if let Some(ceiling) = order_ceiling {
            if r.order > ceiling {
                continue;
            }
        }
        let mut report = |kind, detail: String| {
            out.push(Discrepancy {
                d: r.d,
                e: r.e,
                kind,
                detail,
            });
        };
        let cofactor = r.order / r.d;
        let instance = match Instance::new_forced(r.d, cofactor) {
            Ok(i) => i,
            Err(err) => {
                report(DiscrepancyKind::VerdictMismatch, format!("instance rebuild failed: {err}"));
                continue;
            }
        };
        match oracle_decide(&instance) {
            Ok(yes) if yes != r.yes => {
                report(
                    DiscrepancyKind::VerdictMismatch,
                    format!("recorded {} but enumeration says {}", r.yes, yes),
                );
                continue;
            }
            Ok(_) => {}
            Err(OracleError::BudgetExceeded { estimate, budget }) => {
                report(
                    DiscrepancyKind::OracleRefused,
                    format!("estimated {estimate} assignments exceeds budget {budget}"),
                );
                continue;
            }
        }
        if !r.yes {
            continue;
        }
        let text = match r.witness_json.as_deref() {
            Some(t) => t,
            None => {
                report(DiscrepancyKind::WitnessUnparseable, "YES row without witness".into());
                continue;
            }
        };
        let (parsed_instance, witness) = match witness_from_json(text, true) {
            Ok(pair) => pair,
            Err(err) => {
                report(DiscrepancyKind::WitnessUnparseable, err.to_string());
                continue;
            }
        };
        if parsed_instance.d() != r.d || parsed_instance.order() != r.order {
            report(
                DiscrepancyKind::WitnessUnparseable,
                "witness document names a different instance".into(),
            );
            continue;
        }
        let checked = crate::criterion::check_witness(&parsed_instance, &witness);
        if !checked.ok() {
            report(DiscrepancyKind::WitnessInvalid, checked.failures().join(", "));
            continue;
        }
        let rebuilt_ok = blueprint_from_witness(&parsed_instance, &witness)
            .map(|bp| verify_blueprint(&bp, &parsed_instance).all_ok())
            .unwrap_or(false);
        if !rebuilt_ok {
            report(DiscrepancyKind::BlueprintInvalid, "rebuilt blueprint fails verification".into());
        } else if r.blueprint_ok != Some(true) {
            report(
                DiscrepancyKind::BlueprintInvalid,
                format!("recorded blueprint_ok={:?} but rebuild verifies", r.blueprint_ok),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scan() -> ScanOutput {
        scan(&ScanParams::new(4, 4, 10), Some(1))
    }

    #[test]
    fn slice_rows_match_hand_derivation() {
        let out = small_scan();
        assert!(!out.truncated);
        let summary: Vec<(u128, i64, u128, bool)> = out
            .records
            .iter()
            .map(|r| (r.d, r.e, r.order, r.yes))
            .collect();
        assert_eq!(
            summary,
            vec![
                (1, 4, 5, true),
                (3, 4, 21, true),
                (5, 4, 45, false),
                (7, 4, 77, false),
            ]
        );
        for r in &out.records {
            assert_eq!(r.bound_ok, Some(true));
            assert!(r.flags.is_empty());
            assert_eq!(r.witness_json.is_some(), r.yes);
            assert_eq!(r.blueprint_ok, if r.yes { Some(true) } else { None });
        }
    }

    #[test]
    fn scan_finds_the_degree_fifteen_instance() {
        let out = scan(&ScanParams::new(17, 17, 20), Some(1));
        let row = out
            .records
            .iter()
            .find(|r| r.d == 15)
            .expect("d = 15 present");
        assert_eq!(row.order, 480);
        assert!(row.yes);
        assert_eq!(row.bound_ok, Some(true));
        assert_eq!(row.blueprint_ok, Some(true));
        assert_eq!(
            row.witness_json.as_deref(),
            Some("{\"pairs\":[{\"block\":[3,5],\"b\":15,\"p\":2,\"f\":4}],\"d\":15,\"cofactor\":32}")
        );
    }

    #[test]
    fn zero_d_limit_scans_nothing() {
        let out = scan(&ScanParams::new(2, 50, 0), Some(1));
        assert!(out.records.is_empty());
        assert!(!out.truncated);
    }

    #[test]
    fn hypothesis_violations_are_opt_in_and_tagged() {
        // default filters drop each violating row
        let strict = scan(&ScanParams::new(0, 1, 6), Some(1));
        assert!(strict.records.is_empty());

        let mut params = ScanParams::new(0, 1, 6);
        params.include_non_coprime = true;
        params.include_e_le_one = true;
        let out = scan(&params, Some(1));
        assert!(!out.records.is_empty());
        // e = 0 makes every instance share its d with the cofactor
        let zero = out.records.iter().find(|r| r.d == 2 && r.e == 0).unwrap();
        assert_eq!(zero.flags, vec!["non-coprime", "e-not-above-one"]);
        // e = 1 keeps coprimality but stays under the size hypothesis
        let one = out.records.iter().find(|r| r.d == 2 && r.e == 1).unwrap();
        assert_eq!(one.flags, vec!["e-not-above-one"]);
        assert!(out.records.iter().all(|r| !r.flags.is_empty()));

        // opting into only one violation keeps doubly-violating rows out
        let mut partial = ScanParams::new(0, 1, 6);
        partial.include_e_le_one = true;
        let filtered = scan(&partial, Some(1));
        assert!(filtered.records.iter().all(|r| r.flags == vec!["e-not-above-one"]));
    }

    #[test]
    fn csv_layout_is_stable() {
        let text = write_csv(&small_scan());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "d,e,order,verdict,witness,bound_ok");
        assert_eq!(lines[3], "5,4,45,NO,,true");
        assert!(lines[1].starts_with("1,4,5,YES,"));
        assert!(lines[2].contains("\"\"block\"\":[3]"));
        assert!(!text.contains("# truncated"));
    }

    #[test]
    fn csv_tags_forced_rows() {
        let mut params = ScanParams::new(0, 0, 6);
        params.include_non_coprime = true;
        params.include_e_le_one = true;
        let text = write_csv(&scan(&params, Some(1)));
        assert!(text.contains("NO[non-coprime,e-not-above-one]"));
    }

    #[test]
    fn jsonl_layout_is_stable() {
        let text = write_jsonl(&small_scan());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(
            lines[0],
            "{\"d\":1,\"e\":4,\"order\":5,\"verdict\":\"YES\",\"witness\":{\"pairs\":[],\"d\":1,\"cofactor\":5},\"blueprint_ok\":true,\"bound_ok\":true,\"flags\":[]}"
        );
        assert_eq!(
            lines[2],
            "{\"d\":5,\"e\":4,\"order\":45,\"verdict\":\"NO\",\"witness\":null,\"blueprint_ok\":null,\"bound_ok\":true,\"flags\":[]}"
        );
        for line in lines {
            let value: serde_json::Value = serde_json::from_str(line).expect("well-formed line");
            assert!(value.get("d").is_some());
        }
    }

    #[test]
    fn record_ceiling_truncates_and_marks() {
        let mut params = ScanParams::new(4, 4, 10);
        params.record_ceiling = Some(2);
        let out = scan(&params, Some(1));
        assert_eq!(out.records.len(), 2);
        assert!(out.truncated);
        assert!(write_csv(&out).ends_with("# truncated\n"));
        assert!(write_jsonl(&out).ends_with("{\"truncated\":true}\n"));

        let mut roomy = ScanParams::new(4, 4, 10);
        roomy.record_ceiling = Some(100);
        assert!(!scan(&roomy, Some(1)).truncated);
    }

    #[test]
    fn cross_check_passes_an_honest_scan() {
        let out = scan(&ScanParams::new(2, 12, 30), Some(2));
        assert!(out.records.iter().any(|r| r.yes));
        assert_eq!(cross_check(&out.records, None), vec![]);
    }

    #[test]
    fn cross_check_catches_corruption() {
        let mut records = small_scan().records;

        // flip a NO verdict
        let i = records.iter().position(|r| r.d == 5).unwrap();
        records[i].yes = true;
        let found = cross_check(&records, None);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, DiscrepancyKind::VerdictMismatch);
        assert_eq!((found[0].d, found[0].e), (5, 4));
        records[i].yes = false;

        // corrupt a witness document
        let j = records.iter().position(|r| r.d == 3).unwrap();
        let good = records[j].witness_json.clone();
        records[j].witness_json = Some("{\"pairs\":".into());
        let found = cross_check(&records, None);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, DiscrepancyKind::WitnessUnparseable);
        records[j].witness_json = good;

        // misreport the blueprint check
        records[j].blueprint_ok = Some(false);
        let found = cross_check(&records, None);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, DiscrepancyKind::BlueprintInvalid);
    }

    #[test]
    fn cross_check_ceiling_skips_large_orders(){
        let mut records = small_scan().records;
        let i = records.iter().position(|r| r.d == 5).unwrap();
        records[i].yes = true; // order 45: above a ceiling of 40
        assert_eq!(cross_check(&records, Some(40)), vec![]);
        assert_eq!(cross_check(&records, Some(45)).len(), 1);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let params = ScanParams::new(2, 9, 25);
        let one = scan(&params, Some(1));
        let four = scan(&params, Some(4));
        assert_eq!(one, four);
        assert_eq!(write_csv(&one), write_csv(&four));
        assert_eq!(write_jsonl(&one), write_jsonl(&four));
    }
}
