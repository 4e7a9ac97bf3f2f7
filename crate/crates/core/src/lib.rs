//! Decide whether a solvable group of order `d * (d + e)` can carry an
//! irreducible character of degree `d` (for square-free `d` coprime to
//! `d + e`), emit a checkable witness when one exists, and realize every YES
//! answer as an explicit direct product of Frobenius and abelian blocks whose
//! character-degree multiset is computed and verified exactly.
//!
//! Module map:
//! - [`arith`]: integer kernel (factoring, modular powers, orders, CRT)
//! - [`criterion`]: instances, witnesses, the decision search, and an
//!   independent brute-force oracle
//! - [`group_model`]: symbolic group blueprints and exact degree bookkeeping
//! - [`scanner`]: deterministic parallel range sweeps with CSV/JSONL output

pub mod arith;
pub mod criterion;
pub mod group_model;
pub mod scanner;
