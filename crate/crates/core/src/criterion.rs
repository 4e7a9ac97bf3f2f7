//! The existence criterion. An [`Instance`] fixes a square-free degree `d`
//! and a coprime cofactor `d + e`; [`decide`] searches for a [`Witness`]: a
//! partition of `d`'s primes into blocks, each served by a prime power
//! `p^f = 1 (mod block product)` drawn from the cofactor's exponent budget.
//! [`oracle_decide`] answers the same question by brute force and shares none
//! of the search machinery, so the two can check each other.

use crate::arith::{
    factor, gcd, is_square_free, lcm, mod_pow, multiplicative_order, ArithError, Factorization,
};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("d must be at least 1")]
    ZeroD,
    #[error("cofactor must be at least 1")]
    ZeroCofactor,
    #[error("d = {d} is not square-free")]
    NotSquareFree { d: u128 },
    #[error("d and the cofactor share the factor {g}; they must be coprime")]
    NotCoprime { g: u128 },
    #[error("group order d * cofactor does not fit in 128 bits")]
    OrderOverflow,
}

/// Which structural hypotheses an instance satisfies. Strict construction
/// rejects the first two outright; `e_above_one` is only recorded, since the
/// search itself is meaningful either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypothesisFlags {
    /// `d` is a product of distinct primes
    pub square_free: bool,
    /// `gcd(d, d + e) = 1`
    pub coprime: bool,
    /// `e > 1`, i.e. the cofactor exceeds `d + 1`
    pub e_above_one: bool,
}

impl HypothesisFlags {
    pub fn all(&self) -> bool {
        self.square_free && self.coprime && self.e_above_one
    }

    /// Tags for everything violated, stable order.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.square_free {
            v.push("non-square-free-d");
        }
        if !self.coprime {
            v.push("non-coprime");
        }
        if !self.e_above_one {
            v.push("e-not-above-one");
        }
        v
    }
}

/// A problem instance: degree `d` (as its ascending prime list) and the
/// cofactor `d + e` (factored). The group order under discussion is
/// `d * cofactor`.
#[derive(Debug, Clone)]
pub struct Instance {
    d_primes: Vec<u128>,
    cofactor: Factorization,
    d: u128,
    cofactor_value: u128,
    order: u128,
    flags: HypothesisFlags,
}

impl Instance {
    /// Strict constructor: rejects non-square-free `d` and shared factors.
    /// `e <= 1` is allowed but flagged.
    pub fn new(d: u128, cofactor: u128) -> Result<Self, InstanceError> {
        Self::build(d, cofactor, false)
    }

    /// Permissive constructor for exploration outside the hypotheses: keeps
    /// every violation as a flag instead of rejecting. Repeated primes of a
    /// non-square-free `d` each get their own slot in the prime list.
    pub fn new_forced(d: u128, cofactor: u128) -> Result<Self, InstanceError> {
        Self::build(d, cofactor, true)
    }

    fn build(d: u128, cofactor: u128, force: bool) -> Result<Self, InstanceError> {
        if d == 0 {
            return Err(InstanceError::ZeroD);
        }
        if cofactor == 0 {
            return Err(InstanceError::ZeroCofactor);
        }
        let d_fact = factor(d).expect("d >= 1");
        let cof_fact = factor(cofactor).expect("cofactor >= 1");
        let square_free = is_square_free(&d_fact);
        let g = gcd(d, cofactor);
        let coprime = g == 1;
        if !force {
            if !square_free {
                return Err(InstanceError::NotSquareFree { d });
            }
            if !coprime {
                return Err(InstanceError::NotCoprime { g });
            }
        }
        let order = d.checked_mul(cofactor).ok_or(InstanceError::OrderOverflow)?;
        let e_above_one = cofactor > d && cofactor - d > 1;
        let mut d_primes = Vec::new();
        for &(p, a) in d_fact.entries() {
            for _ in 0..a {
                d_primes.push(p);
            }
        }
        Ok(Instance {
            d_primes,
            cofactor: cof_fact,
            d,
            cofactor_value: cofactor,
            order,
            flags: HypothesisFlags {
                square_free,
                coprime,
                e_above_one,
            },
        })
    }

    pub fn d(&self) -> u128 {
        self.d
    }

    /// Ascending primes of `d`, one slot per factor.
    pub fn d_primes(&self) -> &[u128] {
        &self.d_primes
    }

    pub fn cofactor_value(&self) -> u128 {
        self.cofactor_value
    }

    pub fn cofactor(&self) -> &Factorization {
        &self.cofactor
    }

    /// `d * cofactor`.
    pub fn order(&self) -> u128 {
        self.order
    }

    pub fn flags(&self) -> &HypothesisFlags {
        &self.flags
    }

    /// `e = cofactor - d` as signed decimal text (it can be negative).
    pub fn e_display(&self) -> String {
        if self.cofactor_value >= self.d {
            (self.cofactor_value - self.d).to_string()
        } else {
            format!("-{}", self.d - self.cofactor_value)
        }
    }

    /// Product of the block's primes. Indices must be distinct and in range.
    pub fn block_modulus(&self, block: &[usize]) -> u128 {
        block
            .iter()
            .map(|&j| self.d_primes[j])
            .try_fold(1u128, |acc, p| acc.checked_mul(p))
            .expect("distinct block indices keep the product within d")
    }
}

/// One witness pair: a block of prime slots (ascending indices into
/// `d_primes`) served by the prime power `prime^exponent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessPair {
    pub block: Vec<usize>,
    pub prime: u128,
    pub exponent: u128,
}

/// A full certificate: blocks partition the prime slots of `d`, and the
/// chosen prime powers respect the cofactor's exponent budget.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Witness {
    pub pairs: Vec<WitnessPair>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Yes(Witness),
    No,
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Yes(w) => Some(w),
            Verdict::No => None,
        }
    }
}

/// Least `f >= 1` with `p^f = 1` modulo the block's product: the lcm of the
/// orders of `p` modulo each block prime. The empty block gives 1. Falls back
/// to a direct order computation when the block repeats a prime (possible
/// only on forced, non-square-free instances).
///
/// Errors when `p` shares a factor with a block prime. Panics on an
/// out-of-range index.
pub fn minimal_exponent(p: u128, block: &[usize], instance: &Instance) -> Result<u128, ArithError> {
    let mut primes: Vec<u128> = block.iter().map(|&j| instance.d_primes[j]).collect();
    primes.sort_unstable();
    if primes.windows(2).any(|w| w[0] == w[1]) {
        return multiplicative_order(p, instance.block_modulus(block));
    }
    let mut f = 1u128;
    for &q in &primes {
        f = lcm(f, multiplicative_order(p, q)?)?;
    }
    Ok(f)
}

/// Clause-by-clause witness check. `ok()` is the conjunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WitnessCheck {
    /// blocks non-empty with ascending in-range indices, exponents >= 1
    pub well_formed: bool,
    /// blocks are disjoint and cover every prime slot of `d`
    pub partition: bool,
    /// `p^f = 1 (mod block product)` for every pair
    pub congruences: bool,
    /// per prime, the exponents drawn across pairs fit inside the cofactor
    pub budget: bool,
}

impl WitnessCheck {
    pub fn ok(&self) -> bool {
        self.well_formed && self.partition && self.congruences && self.budget
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.well_formed {
            v.push("well-formed");
        }
        if !self.partition {
            v.push("partition");
        }
        if !self.congruences {
            v.push("congruences");
        }
        if !self.budget {
            v.push("budget");
        }
        v
    }
}

/// Check every witness clause against the instance. Never errors: malformed
/// input just fails the relevant clause. The congruence clause is checked by
/// direct modular exponentiation, not via order computations, so it does not
/// share code with the search.
pub fn check_witness(instance: &Instance, w: &Witness) -> WitnessCheck {
    let m = instance.d_primes.len();
    let mut well_formed = true;
    for pair in &w.pairs {
        if pair.block.is_empty()
            || pair.exponent == 0
            || pair.block.iter().any(|&j| j >= m)
            || pair.block.windows(2).any(|x| x[0] >= x[1])
        {
            well_formed = false;
        }
    }

    let mut partition = well_formed;
    if partition {
        let mut seen = vec![false; m];
        for pair in &w.pairs {
            for &j in &pair.block {
                if seen[j] {
                    partition = false;
                }
                seen[j] = true;
            }
        }
        partition = partition && seen.iter().all(|&s| s);
    }

    let mut congruences = well_formed;
    if well_formed {
        for pair in &w.pairs {
            let b = instance.block_modulus(&pair.block);
            if mod_pow(pair.prime, pair.exponent, b) != Ok(1) {
                congruences = false;
            }
        }
    }

    let mut budget = true;
    let mut drawn: Vec<(u128, u128)> = Vec::new();
    for pair in &w.pairs {
        match drawn.iter_mut().find(|(p, _)| *p == pair.prime) {
            Some((_, total)) => match total.checked_add(pair.exponent) {
                Some(t) => *total = t,
                None => budget = false,
            },
            None => drawn.push((pair.prime, pair.exponent)),
        }
    }
    for (p, total) in drawn {
        if total > instance.cofactor.exponent_of(p) as u128 {
            budget = false;
        }
    }

    WitnessCheck {
        well_formed,
        partition,
        congruences,
        budget,
    }
}

/// True iff the witness certifies the instance.
pub fn verify_witness(instance: &Instance, w: &Witness) -> bool {
    check_witness(instance, w).ok()
}

/// Canonical witnesses in lexicographic order, at most `limit` of them.
///
/// Canonical means: blocks listed by ascending least index, block indices
/// ascending, and every exponent equal to [`minimal_exponent`] (any valid
/// exponent is a multiple of the minimal one, so using the minimum never
/// hurts the budget and loses no witnesses). The order compares the flattened
/// sequence (block list, then prime) pair by pair, so the first result is the
/// lexicographically least certificate and repeated runs agree byte for byte.
pub fn enumerate_witnesses(instance: &Instance, limit: usize) -> Vec<Witness> {
    if limit == 0 {
        return Vec::new();
    }
    let m = instance.d_primes.len();
    let primes: Vec<u128> = instance
        .cofactor
        .entries()
        .iter()
        .map(|&(p, _)| p)
        .collect();
    let budget: Vec<u128> = instance
        .cofactor
        .entries()
        .iter()
        .map(|&(_, a)| a as u128)
        .collect();
    let mut search = Search {
        instance,
        primes,
        budget,
        limit,
        out: Vec::new(),
        pairs: Vec::new(),
    };
    let all: Vec<usize> = (0..m).collect();
    search.assign(&all);
    search.out
}

struct Search<'a> {
    instance: &'a Instance,
    primes: Vec<u128>,
    budget: Vec<u128>,
    limit: usize,
    out: Vec<Witness>,
    pairs: Vec<WitnessPair>,
}

impl Search<'_> {
    /// Extend the partial witness over the given unassigned slots.
    fn assign(&mut self, unassigned: &[usize]) {
        if self.out.len() >= self.limit {
            return;
        }
        let Some((&lead, rest)) = unassigned.split_first() else {
            self.out.push(Witness {
                pairs: self.pairs.clone(),
            });
            return;
        };
        // the least unassigned slot must lead the next block
        self.grow_block(vec![lead], rest, 0);
    }

    /// Try the block as it stands, then every lex-later extension of it.
    fn grow_block(&mut self, block: Vec<usize>, pool: &[usize], start: usize) {
        if self.out.len() >= self.limit {
            return;
        }
        let leftover: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|j| !block.contains(j))
            .collect();
        self.serve_block(&block, &leftover);
        for i in start..pool.len() {
            let mut bigger = block.clone();
            bigger.push(pool[i]);
            self.grow_block(bigger, pool, i + 1);
        }
    }

    /// Pick a serving prime for the block (ascending, so emission order is
    /// lexicographic) and recurse on what remains.
    fn serve_block(&mut self, block: &[usize], leftover: &[usize]) {
        for pi in 0..self.primes.len() {
            if self.out.len() >= self.limit {
                return;
            }
            let p = self.primes[pi];
            let Ok(f) = minimal_exponent(p, block, self.instance) else {
                continue; // p shares a factor with the block (forced instances)
            };
            if f > self.budget[pi] {
                continue;
            }
            self.budget[pi] -= f;
            self.pairs.push(WitnessPair {
                block: block.to_vec(),
                prime: p,
                exponent: f,
            });
            self.assign(leftover);
            self.pairs.pop();
            self.budget[pi] += f;
        }
    }
}

/// Decide the instance. YES comes with the lexicographically least canonical
/// witness; `d = 1` is YES with the empty witness.
pub fn decide(instance: &Instance) -> Verdict {
    match enumerate_witnesses(instance, 1).pop() {
        Some(w) => Verdict::Yes(w),
        None => Verdict::No,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("brute-force space of about {estimate} assignments exceeds the budget of {budget}")]
    BudgetExceeded { estimate: u128, budget: u128 },
}

/// Default cap on brute-force assignments; far above anything the test
/// ranges need, far below anything that could hang a run.
pub const ORACLE_DEFAULT_BUDGET: u128 = 20_000_000;

/// Ground truth by exhaustion: every set partition of the prime slots
/// (restricted growth strings) crossed with every assignment of cofactor
/// prime powers to blocks, each candidate checked directly with `mod_pow`.
/// All exponents are tried, not just minimal ones, and nothing is shared with
/// [`decide`]'s search. Refuses outright - never truncates - when the space
/// exceeds the budget.
pub fn oracle_decide_with_budget(instance: &Instance, budget: u128) -> Result<bool, OracleError> {
    let m = instance.d_primes().len();
    // every prime power p^f dividing the cofactor, as (cap slot, p, f)
    let mut powers: Vec<(usize, u128, u128)> = Vec::new();
    let caps: Vec<u128> = instance
        .cofactor
        .entries()
        .iter()
        .map(|&(_, a)| a as u128)
        .collect();
    for (slot, &(p, a)) in instance.cofactor.entries().iter().enumerate() {
        for f in 1..=a {
            powers.push((slot, p, f as u128));
        }
    }
    let estimate = assignment_estimate(m, powers.len() as u128);
    if estimate > budget {
        return Err(OracleError::BudgetExceeded { estimate, budget });
    }

    let found = for_each_partition(m, |blocks| {
        if blocks.is_empty() {
            return true; // d = 1: nothing to serve
        }
        if powers.is_empty() {
            return false;
        }
        let moduli: Vec<u128> = blocks
            .iter()
            .map(|b| b.iter().map(|&j| instance.d_primes()[j]).product::<u128>())
            .collect();
        let k = blocks.len();
        let mut choice = vec![0usize; k];
        loop {
            let mut used = vec![0u128; caps.len()];
            let mut ok = true;
            for bi in 0..k {
                let (slot, p, f) = powers[choice[bi]];
                if mod_pow(p, f, moduli[bi]) != Ok(1) {
                    ok = false;
                    break;
                }
                used[slot] += f;
                if used[slot] > caps[slot] {
                    ok = false;
                    break;
                }
            }
            if ok {
                return true;
            }
            // advance the mixed-radix counter
            let mut pos = 0;
            loop {
                choice[pos] += 1;
                if choice[pos] < powers.len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
                if pos == k {
                    return false;
                }
            }
        }
    });
    Ok(found)
}

/// [`oracle_decide_with_budget`] at the default budget.
pub fn oracle_decide(instance: &Instance) -> Result<bool, OracleError> {
    oracle_decide_with_budget(instance, ORACLE_DEFAULT_BUDGET)
}

/// Saturating count of (partition, assignment) candidates: sum over k of
/// S(m, k) * D^k, with S the Stirling partition numbers.
fn assignment_estimate(m: usize, d_count: u128) -> u128 {
    if m == 0 {
        return 1;
    }
    let mut stirling = vec![vec![0u128; m + 1]; m + 1];
    stirling[0][0] = 1;
    for i in 1..=m {
        for k in 1..=i {
            stirling[i][k] = stirling[i - 1][k - 1]
                .saturating_add(stirling[i - 1][k].saturating_mul(k as u128));
        }
    }
    let mut total = 0u128;
    let mut dk = 1u128;
    for k in 1..=m {
        dk = dk.saturating_mul(d_count);
        total = total.saturating_add(stirling[m][k].saturating_mul(dk));
    }
    total.max(1)
}

/// Run `visit` on every set partition of `{0..m}`, blocks ordered by least
/// element, until it returns true. `m = 0` yields the empty partition.
fn for_each_partition(m: usize, mut visit: impl FnMut(&[Vec<usize>]) -> bool) -> bool {
    if m == 0 {
        return visit(&[]);
    }
    let mut rgs = vec![0usize; m];
    loop {
        let k = rgs.iter().copied().max().unwrap() + 1;
        let mut blocks = vec![Vec::new(); k];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i);
        }
        if visit(&blocks) {
            return true;
        }
        // next restricted growth string
        let mut i = m - 1;
        loop {
            if i == 0 {
                return false;
            }
            let prefix_max = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for v in rgs[i + 1..].iter_mut() {
                    *v = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

// --- canonical JSON document ---

/// Render the canonical witness document, e.g.
/// `{"pairs":[{"block":[3,5],"b":15,"p":2,"f":4}],"d":15,"cofactor":32}`.
/// Blocks list their primes (not slot indices); field order is fixed.
pub fn witness_to_json(instance: &Instance, w: &Witness) -> String {
    format!(
        "{{\"pairs\":[{}],\"d\":{},\"cofactor\":{}}}",
        pairs_json(instance, w),
        instance.d(),
        instance.cofactor_value()
    )
}

/// The `"pairs"` array body shared by witness and blueprint documents.
pub(crate) fn pairs_json(instance: &Instance, w: &Witness) -> String {
    w.pairs
        .iter()
        .map(|pair| {
            let primes: Vec<String> = pair
                .block
                .iter()
                .map(|&j| instance.d_primes()[j].to_string())
                .collect();
            format!(
                "{{\"block\":[{}],\"b\":{},\"p\":{},\"f\":{}}}",
                primes.join(","),
                instance.block_modulus(&pair.block),
                pair.prime,
                pair.exponent
            )
        })
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Error)]
pub enum WitnessParseError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("block prime {0} does not divide d")]
    UnknownBlockPrime(u128),
    #[error("pair lists b = {listed} but its block multiplies to {computed}")]
    InconsistentBlockProduct { listed: u128, computed: u128 },
}

#[derive(Deserialize)]
struct PairDoc {
    block: Vec<u128>,
    b: u128,
    p: u128,
    f: u128,
}

#[derive(Deserialize)]
struct WitnessDoc {
    pairs: Vec<PairDoc>,
    d: u128,
    cofactor: u128,
}

/// Parse a witness document back into an instance plus witness. With `force`
/// the embedded instance may violate the hypotheses (it is flagged, as usual);
/// without it such documents are rejected. The redundant `b` field must match
/// its block's product.
pub fn witness_from_json(text: &str, force: bool) -> Result<(Instance, Witness), WitnessParseError> {
    let doc: WitnessDoc = serde_json::from_str(text)?;
    let instance = if force {
        Instance::new_forced(doc.d, doc.cofactor)?
    } else {
        Instance::new(doc.d, doc.cofactor)?
    };
    let mut taken = vec![false; instance.d_primes().len()];
    let mut pairs = Vec::new();
    for pd in &doc.pairs {
        let mut block = Vec::new();
        for &q in &pd.block {
            // slots are distinguishable only on forced non-square-free d;
            // take the first free slot holding this prime
            let slot = instance
                .d_primes()
                .iter()
                .enumerate()
                .position(|(j, &p)| p == q && !taken[j])
                .ok_or(WitnessParseError::UnknownBlockPrime(q))?;
            taken[slot] = true;
            block.push(slot);
        }
        block.sort_unstable();
        let computed = instance.block_modulus(&block);
        if computed != pd.b {
            return Err(WitnessParseError::InconsistentBlockProduct {
                listed: pd.b,
                computed,
            });
        }
        pairs.push(WitnessPair {
            block,
            prime: pd.p,
            exponent: pd.f,
        });
    }
    Ok((instance, Witness { pairs }))
}
