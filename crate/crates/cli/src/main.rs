//! `chardeg`: decide degree-d character existence for solvable groups of
//! order `d * (d + e)`, emit and verify witnesses, realize YES answers as
//! explicit group constructions, and sweep ranges.
//!
//! Exit codes: 0 = YES / success, 1 = NO, 2 = usage or hypothesis error,
//! 3 = verification failure.

use chardeg::arith::{crt_solve, factor, multiplicative_order};
use chardeg::criterion::{
    check_witness, decide, witness_from_json, witness_to_json, Instance, Witness,
};
use chardeg::group_model::{
    blueprint_from_witness, blueprint_to_json, degrees_of_product, verify_blueprint_with_degrees,
};
use chardeg::scanner::{cross_check, scan, write_csv, write_jsonl, ScanParams};
use clap::{Parser, Subcommand, ValueEnum};
use std::io::Read;
use std::path::PathBuf;

const EXIT_YES: i32 = 0;
const EXIT_NO: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_VERIFY: i32 = 3;

#[derive(Parser)]
#[command(
    name = "chardeg",
    version,
    about = "Does a solvable group of order d*(d+e) have an irreducible character of degree d?"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print YES with a witness, or NO. Exit 0 on YES, 1 on NO.
    Decide {
        /// candidate degree; must be square-free and coprime to d+e
        d: u128,
        /// cofactor offset, so the group order is d*(d+e)
        e: i128,
        /// proceed despite hypothesis violations (tagged output)
        #[arg(long)]
        force: bool,
    },
    /// Print only the witness document for a YES instance. Exit 1 on NO.
    Witness {
        d: u128,
        e: i128,
        #[arg(long)]
        force: bool,
    },
    /// Realize a YES answer as a direct product of Frobenius and abelian
    /// blocks; print the blueprint and its verification report.
    Construct {
        d: u128,
        e: i128,
        #[arg(long)]
        force: bool,
    },
    /// Re-verify a witness document (from --file or stdin) clause by clause.
    /// Exit 3 if any clause fails.
    Verify {
        /// read the document from this file instead of stdin
        #[arg(long)]
        file: Option<PathBuf>,
        /// accept documents whose instance violates the hypotheses
        #[arg(long)]
        force: bool,
    },
    /// Sweep d = 1..=d-limit (square-free) across a range of e values.
    Scan {
        /// inclusive e range, e.g. "2..50" (or a single value)
        #[arg(long, value_name = "A..B")]
        e: String,
        /// largest d to try
        #[arg(long, value_name = "N")]
        d_limit: u64,
        /// output format
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// write the document here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// worker threads (default: CHARDEG_JOBS, then all cores)
        #[arg(long)]
        jobs: Option<usize>,
        /// keep rows where d shares a factor with d+e, tagged
        #[arg(long)]
        include_non_coprime: bool,
        /// keep rows with e <= 1, tagged
        #[arg(long)]
        include_e_le_one: bool,
        /// stop after this many records, marking the document truncated
        #[arg(long, value_name = "N")]
        ceiling: Option<usize>,
        /// re-derive every record by brute force afterwards; exit 3 on any
        /// disagreement
        #[arg(long)]
        cross_check: bool,
        /// only cross-check records with order at most this
        #[arg(long, value_name = "N", default_value_t = 20_000)]
        oracle_ceiling: u128,
    },
    /// Factor an integer. Prints a JSON document.
    Factor { n: u128 },
    /// Multiplicative order of a modulo m. Prints a JSON document.
    Order { a: u128, m: u128 },
    /// Solve simultaneous congruences x = r (mod m). Prints a JSON document.
    Crt {
        /// one congruence as "r,m"; repeat for a system
        #[arg(long = "pair", value_name = "R,M", required = true)]
        pairs: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

fn main() {
    std::process::exit(run(Cli::parse()));
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Decide { d, e, force } => cmd_decide(d, e, force),
        Command::Witness { d, e, force } => cmd_witness(d, e, force),
        Command::Construct { d, e, force } => cmd_construct(d, e, force),
        Command::Verify { file, force } => cmd_verify(file, force),
        Command::Scan {
            e,
            d_limit,
            format,
            out,
            jobs,
            include_non_coprime,
            include_e_le_one,
            ceiling,
            cross_check,
            oracle_ceiling,
        } => cmd_scan(
            &e,
            d_limit,
            format,
            out,
            jobs,
            include_non_coprime,
            include_e_le_one,
            ceiling,
            cross_check,
            oracle_ceiling,
        ),
        Command::Factor { n } => cmd_factor(n),
        Command::Order { a, m } => cmd_order(a, m),
        Command::Crt { pairs } => cmd_crt(&pairs),
    }
}

/// Build the instance for (d, e), enforcing or merely tagging the hypotheses.
/// Returns the instance and the verdict-line suffix for tagged rows.
fn build_instance(d: u128, e: i128, force: bool) -> Result<(Instance, String), String> {
    let d_signed = i128::try_from(d).map_err(|_| format!("d = {d} is too large"))?;
    let cofactor = d_signed
        .checked_add(e)
        .filter(|&c| c >= 1)
        .ok_or_else(|| format!("d + e = {d} + {e} must be at least 1"))?
        as u128;
    if force {
        let instance = Instance::new_forced(d, cofactor).map_err(|err| err.to_string())?;
        let tags = instance.flags().violations();
        let suffix = if tags.is_empty() {
            String::new()
        } else {
            eprintln!(
                "warning: hypotheses violated ({}); the answer is about the search criterion only",
                tags.join(",")
            );
            format!("[out-of-hypothesis: {}]", tags.join(","))
        };
        Ok((instance, suffix))
    } else {
        let instance = Instance::new(d, cofactor).map_err(|err| err.to_string())?;
        let tags = instance.flags().violations();
        if !tags.is_empty() {
            return Err(format!(
                "hypotheses violated ({}); pass --force to evaluate the criterion anyway",
                tags.join(",")
            ));
        }
        Ok((instance, String::new()))
    }
}

fn cmd_decide(d: u128, e: i128, force: bool) -> i32 {
    let (instance, suffix) = match build_instance(d, e, force) {
        Ok(pair) => pair,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    match decide(&instance).witness() {
        Some(w) => {
            println!("YES{suffix}");
            println!("{}", witness_to_json(&instance, w));
            EXIT_YES
        }
        None => {
            println!("NO{suffix}");
            EXIT_NO
        }
    }
}

fn cmd_witness(d: u128, e: i128, force: bool) -> i32 {
    let (instance, _) = match build_instance(d, e, force) {
        Ok(pair) => pair,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    match decide(&instance).witness() {
        Some(w) => {
            println!("{}", witness_to_json(&instance, w));
            EXIT_YES
        }
        None => {
            eprintln!("no witness: the verdict is NO");
            EXIT_NO
        }
    }
}

fn cmd_construct(d: u128, e: i128, force: bool) -> i32 {
    let (instance, _) = match build_instance(d, e, force) {
        Ok(pair) => pair,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let verdict = decide(&instance);
    let witness = match verdict.witness() {
        Some(w) => w,
        None => {
            eprintln!("nothing to construct: the verdict is NO");
            return EXIT_NO;
        }
    };
    let bp = match blueprint_from_witness(&instance, witness) {
        Ok(bp) => bp,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_VERIFY;
        }
    };
    let degrees = degrees_of_product(&bp);
    let report = verify_blueprint_with_degrees(&bp, &instance, &degrees);
    println!("{}", blueprint_to_json(&instance, witness, &bp, &degrees));
    println!("{}", report.to_json());
    if report.all_ok() {
        EXIT_YES
    } else {
        EXIT_VERIFY
    }
}

fn witness_check_json(instance: &Instance, w: &Witness) -> String {
    let c = check_witness(instance, w);
    format!(
        "{{\"well_formed\":{},\"partition\":{},\"congruences\":{},\"budget\":{},\"ok\":{}}}",
        c.well_formed,
        c.partition,
        c.congruences,
        c.budget,
        c.ok()
    )
}

fn cmd_verify(file: Option<PathBuf>, force: bool) -> i32 {
    let text = match read_input(file) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let (instance, witness) = match witness_from_json(&text, force) {
        Ok(pair) => pair,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
    };
    let tags = instance.flags().violations();
    if !tags.is_empty() {
        eprintln!("warning: hypotheses violated ({})", tags.join(","));
    }
    println!("{}", witness_check_json(&instance, &witness));
    if check_witness(&instance, &witness).ok() {
        EXIT_YES
    } else {
        EXIT_VERIFY
    }
}

fn read_input(file: Option<PathBuf>) -> Result<String, String> {
    match file {
        Some(path) => std::fs::read_to_string(&path)
            .map_err(|err| format!("cannot read {}: {err}", path.display())),
        None => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|err| format!("cannot read stdin: {err}"))?;
            Ok(text)
        }
    }
}

fn parse_e_range(text: &str) -> Result<(i64, i64), String> {
    let parse_end = |s: &str| {
        s.parse::<i64>()
            .map_err(|_| format!("'{s}' is not an integer"))
    };
    match text.split_once("..") {
        Some((a, b)) => {
            let (lo, hi) = (parse_end(a)?, parse_end(b)?);
            if lo > hi {
                return Err(format!("empty range {lo}..{hi}"));
            }
            Ok((lo, hi))
        }
        None => {
            let v = parse_end(text)?;
            Ok((v, v))
        }
    }
}

fn jobs_from_env(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("CHARDEG_JOBS") {
        Ok(raw) => raw
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("CHARDEG_JOBS='{raw}' is not a worker count")),
        Err(_) => Ok(None),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    e: &str,
    d_limit: u64,
    format: Format,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    include_non_coprime: bool,
    include_e_le_one: bool,
    ceiling: Option<usize>,
    do_cross_check: bool,
    oracle_ceiling: u128,
) -> i32 {
    let (e_min, e_max) = match parse_e_range(e) {
        Ok(range) => range,
        Err(msg) => {
            eprintln!("error: bad --e range: {msg}");
            return EXIT_USAGE;
        }
    };
    let jobs = match jobs_from_env(jobs) {
        Ok(j) => j,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let params = ScanParams {
        e_min,
        e_max,
        d_limit,
        include_non_coprime,
        include_e_le_one,
        record_ceiling: ceiling,
    };
    let output = scan(&params, jobs);
    let text = match format {
        Format::Csv => write_csv(&output),
        Format::Jsonl => write_jsonl(&output),
    };
    match out {
        Some(path) => {
            if let Err(err) = std::fs::write(&path, &text) {
                eprintln!("error: cannot write {}: {err}", path.display());
                return EXIT_USAGE;
            }
        }
        None => print!("{text}"),
    }
    if do_cross_check {
        let found = cross_check(&output.records, Some(oracle_ceiling));
        eprintln!(
            "cross-check: {} records, {} discrepancies",
            output.records.len(),
            found.len()
        );
        for item in &found {
            eprintln!(
                "cross-check: d={} e={} {:?}: {}",
                item.d, item.e, item.kind, item.detail
            );
        }
        if !found.is_empty() {
            return EXIT_VERIFY;
        }
    }
    EXIT_YES
}

fn cmd_factor(n: u128) -> i32 {
    match factor(n) {
        Ok(factorization) => {
            let parts: Vec<String> = factorization
                .entries()
                .iter()
                .map(|&(p, a)| format!("{{\"p\":{p},\"a\":{a}}}"))
                .collect();
            println!("{{\"n\":{n},\"factors\":[{}]}}", parts.join(","));
            EXIT_YES
        }
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_USAGE
        }
    }
}

fn cmd_order(a: u128, m: u128) -> i32 {
    match multiplicative_order(a, m) {
        Ok(order) => {
            println!("{{\"a\":{a},\"m\":{m},\"order\":{order}}}");
            EXIT_YES
        }
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_USAGE
        }
    }
}

fn cmd_crt(pairs: &[String]) -> i32 {
    let mut system = Vec::new();
    for raw in pairs {
        let parsed = raw.split_once(',').and_then(|(r, m)| {
            Some((r.trim().parse::<u128>().ok()?, m.trim().parse::<u128>().ok()?))
        });
        match parsed {
            Some(pair) => system.push(pair),
            None => {
                eprintln!("error: bad --pair '{raw}': expected \"residue,modulus\"");
                return EXIT_USAGE;
            }
        }
    }
    match crt_solve(&system) {
        Ok((solution, modulus)) => {
            println!("{{\"solution\":{solution},\"modulus\":{modulus}}}");
            EXIT_YES
        }
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_USAGE
        }
    }
}
