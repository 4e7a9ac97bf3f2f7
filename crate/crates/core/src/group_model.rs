//! Symbolic realization of YES answers. A witness pair `(block, p, f)` turns
//! into a Frobenius block: the additive group of the field with `p^f`
//! elements, acted on by the order-`b` subgroup of its unit group (which
//! exists exactly when `p^f = 1 mod b`). Leftover cofactor prime powers ride
//! along as abelian blocks. The direct product of it all has order
//! `d * (d + e)`, and its character degrees are computed exactly: a single
//! Frobenius block contributes `b` linear characters plus `(q - 1) / b`
//! characters of degree `b`, and degrees of a direct product multiply.

use crate::arith::is_prime;
use crate::criterion::{check_witness, Instance, Witness};
use num_bigint::BigUint;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("complement order must be at least 2")]
    ComplementTooSmall,
    #[error("kernel parameter {0} is not prime")]
    KernelNotPrime(u128),
    #[error("kernel exponent must be at least 1")]
    ZeroKernelExponent,
    #[error("kernel order {p}^{f} = {q} is not 1 modulo the complement order {b}")]
    CongruenceFails { p: u128, f: u32, q: u128, b: u128 },
    #[error("order does not fit in 128 bits")]
    Overflow,
    #[error("witness fails verification: {reasons}")]
    WitnessRejected { reasons: String },
}

/// Frobenius group on the field with `kernel_prime^kernel_exponent` elements:
/// elementary abelian kernel of that order, cyclic complement of order
/// `complement_order` inside the unit group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrobeniusBlock {
    complement_order: u128,
    kernel_prime: u128,
    kernel_exponent: u32,
}

impl FrobeniusBlock {
    /// Validates `b >= 2`, `p` prime, `f >= 1`, `p^f` within width, and the
    /// existence condition `p^f = 1 (mod b)`.
    pub fn new(b: u128, p: u128, f: u32) -> Result<Self, ModelError> {
        if b < 2 {
            return Err(ModelError::ComplementTooSmall);
        }
        if !is_prime(p) {
            return Err(ModelError::KernelNotPrime(p));
        }
        if f == 0 {
            return Err(ModelError::ZeroKernelExponent);
        }
        let q = checked_pow(p, f).ok_or(ModelError::Overflow)?;
        if q % b != 1 {
            return Err(ModelError::CongruenceFails { p, f, q, b });
        }
        b.checked_mul(q).ok_or(ModelError::Overflow)?;
        Ok(FrobeniusBlock {
            complement_order: b,
            kernel_prime: p,
            kernel_exponent: f,
        })
    }

    pub fn complement_order(&self) -> u128 {
        self.complement_order
    }

    pub fn kernel_prime(&self) -> u128 {
        self.kernel_prime
    }

    pub fn kernel_exponent(&self) -> u32 {
        self.kernel_exponent
    }

    /// `p^f`, the field size.
    pub fn kernel_order(&self) -> u128 {
        checked_pow(self.kernel_prime, self.kernel_exponent).expect("validated at construction")
    }

    /// `b * p^f`.
    pub fn order(&self) -> u128 {
        self.complement_order
            .checked_mul(self.kernel_order())
            .expect("validated at construction")
    }
}

/// Abelian direct factor of prime-power order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbelianBlock {
    prime: u128,
    exponent: u32,
}

impl AbelianBlock {
    pub fn new(p: u128, a: u32) -> Result<Self, ModelError> {
        if !is_prime(p) {
            return Err(ModelError::KernelNotPrime(p));
        }
        if a == 0 {
            return Err(ModelError::ZeroKernelExponent);
        }
        checked_pow(p, a).ok_or(ModelError::Overflow)?;
        Ok(AbelianBlock {
            prime: p,
            exponent: a,
        })
    }

    pub fn prime(&self) -> u128 {
        self.prime
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn order(&self) -> u128 {
        checked_pow(self.prime, self.exponent).expect("validated at construction")
    }
}

fn checked_pow(p: u128, f: u32) -> Option<u128> {
    let mut acc = 1u128;
    for _ in 0..f {
        acc = acc.checked_mul(p)?;
    }
    Some(acc)
}

/// A direct product of Frobenius and abelian blocks. The empty blueprint is
/// the trivial group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupBlueprint {
    frobenius: Vec<FrobeniusBlock>,
    abelian: Vec<AbelianBlock>,
    order: u128,
}

impl GroupBlueprint {
    /// Validates that the product of all block orders fits in 128 bits.
    pub fn new(
        frobenius: Vec<FrobeniusBlock>,
        abelian: Vec<AbelianBlock>,
    ) -> Result<Self, ModelError> {
        let mut order = 1u128;
        for blk in &frobenius {
            order = order.checked_mul(blk.order()).ok_or(ModelError::Overflow)?;
        }
        for blk in &abelian {
            order = order.checked_mul(blk.order()).ok_or(ModelError::Overflow)?;
        }
        Ok(GroupBlueprint {
            frobenius,
            abelian,
            order,
        })
    }

    pub fn frobenius(&self) -> &[FrobeniusBlock] {
        &self.frobenius
    }

    pub fn abelian(&self) -> &[AbelianBlock] {
        &self.abelian
    }

    /// Product of all block orders.
    pub fn order(&self) -> u128 {
        self.order
    }
}

/// Character degrees with exact multiplicities. Degrees stay within `u128`;
/// multiplicities are unbounded because convolution multiplies them freely.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DegreeMultiset {
    entries: BTreeMap<u128, BigUint>,
}

impl DegreeMultiset {
    /// Degrees of the trivial group: one character, degree 1.
    pub fn unit() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(1u128, BigUint::from(1u32));
        DegreeMultiset { entries }
    }

    pub fn add(&mut self, degree: u128, multiplicity: BigUint) {
        if multiplicity != BigUint::from(0u32) {
            *self
                .entries
                .entry(degree)
                .or_insert_with(|| BigUint::from(0u32)) += multiplicity;
        }
    }

    /// Multiplicity of a degree, zero when absent.
    pub fn multiplicity(&self, degree: u128) -> BigUint {
        self.entries
            .get(&degree)
            .cloned()
            .unwrap_or_else(|| BigUint::from(0u32))
    }

    pub fn contains_degree(&self, degree: u128) -> bool {
        self.entries.contains_key(&degree)
    }

    /// Ascending `(degree, multiplicity)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (u128, &BigUint)> {
        self.entries.iter().map(|(&d, m)| (d, m))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Degrees of a direct product: every pairwise product of degrees, with
    /// multiplicities multiplied. Panics if a degree product leaves 128 bits,
    /// which cannot happen for blueprints validated by [`GroupBlueprint::new`].
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out: BTreeMap<u128, BigUint> = BTreeMap::new();
        for (&x, mx) in &self.entries {
            for (&y, my) in &other.entries {
                let degree = x.checked_mul(y).expect("degree within 128 bits");
                *out.entry(degree).or_insert_with(|| BigUint::from(0u32)) += mx * my;
            }
        }
        DegreeMultiset { entries: out }
    }

    /// Exact sum of `degree^2 * multiplicity` over all entries; equals the
    /// group order for the degrees of an actual group.
    pub fn sum_of_squares(&self) -> BigUint {
        let mut total = BigUint::from(0u32);
        for (&d, m) in &self.entries {
            total += BigUint::from(d) * BigUint::from(d) * m;
        }
        total
    }

    /// Map body in the canonical document form, e.g. `{"1":30,"15":2}`.
    /// Multiplicities are bare decimal numerals of arbitrary size.
    pub fn to_json(&self) -> String {
        let body: Vec<String> = self
            .entries
            .iter()
            .map(|(d, m)| format!("\"{d}\":{m}"))
            .collect();
        format!("{{{}}}", body.join(","))
    }
}

/// Degrees of one Frobenius block: `b` linear characters from the cyclic
/// quotient, and `(q - 1) / b` characters of degree `b` induced from the
/// nontrivial kernel characters (the complement permutes them freely).
pub fn block_degrees(blk: &FrobeniusBlock) -> DegreeMultiset {
    let b = blk.complement_order();
    let q = blk.kernel_order();
    let mut out = DegreeMultiset::default();
    out.add(1, BigUint::from(b));
    out.add(b, BigUint::from((q - 1) / b));
    out
}

/// Degrees of the whole blueprint: convolution over Frobenius blocks, then
/// abelian blocks contributing their order many linear characters each.
pub fn degrees_of_product(bp: &GroupBlueprint) -> DegreeMultiset {
    let mut acc = DegreeMultiset::unit();
    for blk in bp.frobenius() {
        acc = acc.convolve(&block_degrees(blk));
    }
    for blk in bp.abelian() {
        let mut linear = DegreeMultiset::default();
        linear.add(1, BigUint::from(blk.order()));
        acc = acc.convolve(&linear);
    }
    acc
}

/// Turn a verified witness into a blueprint: one Frobenius block per pair,
/// one abelian block per cofactor prime power left over after the pairs take
/// their share. Rejects witnesses that do not verify.
pub fn blueprint_from_witness(
    instance: &Instance,
    witness: &Witness,
) -> Result<GroupBlueprint, ModelError> {
    let checked = check_witness(instance, witness);
    if !checked.ok() {
        return Err(ModelError::WitnessRejected {
            reasons: checked.failures().join(", "),
        });
    }
    let mut frobenius = Vec::new();
    for pair in &witness.pairs {
        let b = instance.block_modulus(&pair.block);
        let f = u32::try_from(pair.exponent).map_err(|_| ModelError::Overflow)?;
        frobenius.push(FrobeniusBlock::new(b, pair.prime, f)?);
    }
    let mut abelian = Vec::new();
    for &(p, a) in instance.cofactor().entries() {
        let used: u128 = witness
            .pairs
            .iter()
            .filter(|pair| pair.prime == p)
            .map(|pair| pair.exponent)
            .sum();
        let rest = a - u32::try_from(used).expect("budget clause bounds the draw");
        if rest > 0 {
            abelian.push(AbelianBlock::new(p, rest)?);
        }
    }
    let bp = GroupBlueprint::new(frobenius, abelian)?;
    debug_assert_eq!(bp.order(), instance.order());
    Ok(bp)
}

/// Independent re-check of a blueprint against its instance, clause by
/// clause. Never errors; failures land in the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlueprintReport {
    /// blueprint order equals `d * cofactor`
    pub order_matches: bool,
    /// sum of squared degrees equals the order, exactly
    pub sum_of_squares_matches: bool,
    /// every Frobenius block satisfies `p^f = 1 (mod b)`
    pub congruences_hold: bool,
    /// `d` appears among the degrees
    pub degree_d_present: bool,
}

impl BlueprintReport {
    pub fn all_ok(&self) -> bool {
        self.order_matches
            && self.sum_of_squares_matches
            && self.congruences_hold
            && self.degree_d_present
    }

    pub fn to_json(&self) -> String {
        format!(
            "{{\"order_matches\":{},\"sum_of_squares_matches\":{},\"congruences_hold\":{},\"degree_d_present\":{},\"all_ok\":{}}}",
            self.order_matches,
            self.sum_of_squares_matches,
            self.congruences_hold,
            self.degree_d_present,
            self.all_ok()
        )
    }
}

/// Check the blueprint's order, degree identity, block congruences, and the
/// presence of degree `d`.
pub fn verify_blueprint(bp: &GroupBlueprint, instance: &Instance) -> BlueprintReport {
    let degrees = degrees_of_product(bp);
    verify_blueprint_with_degrees(bp, instance, &degrees)
}

/// [`verify_blueprint`] against an already-computed degree multiset (the
/// caller may want the degrees anyway; this avoids recomputing them).
pub fn verify_blueprint_with_degrees(
    bp: &GroupBlueprint,
    instance: &Instance,
    degrees: &DegreeMultiset,
) -> BlueprintReport {
    BlueprintReport {
        order_matches: bp.order() == instance.order(),
        sum_of_squares_matches: degrees.sum_of_squares() == BigUint::from(bp.order()),
        congruences_hold: bp
            .frobenius()
            .iter()
            .all(|blk| blk.kernel_order() % blk.complement_order() == 1),
        degree_d_present: degrees.contains_degree(instance.d()),
    }
}

/// Canonical blueprint document: the witness fields plus the abelian block
/// orders and the full degree map, e.g.
/// `{"pairs":[{"block":[3,5],"b":15,"p":2,"f":4}],"d":15,"cofactor":32,"abelian":[2],"degrees":{"1":30,"15":2}}`.
pub fn blueprint_to_json(
    instance: &Instance,
    witness: &Witness,
    bp: &GroupBlueprint,
    degrees: &DegreeMultiset,
) -> String {
    let abelian: Vec<String> = bp
        .abelian()
        .iter()
        .map(|blk| blk.order().to_string())
        .collect();
    format!(
        "{{\"pairs\":[{}],\"d\":{},\"cofactor\":{},\"abelian\":[{}],\"degrees\":{}}}",
        crate::criterion::pairs_json(instance, witness),
        instance.d(),
        instance.cofactor_value(),
        abelian.join(","),
        degrees.to_json()
    )
}
