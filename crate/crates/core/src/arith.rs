//! Integer kernel: factorization, modular arithmetic, multiplicative orders,
//! and simultaneous congruences. Everything is exact on `u128`.

use thiserror::Error;

/// Trial division handles every factor below this; larger ones go to
/// Miller-Rabin plus Pollard rho.
const TRIAL_LIMIT: u128 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("modulus must be nonzero")]
    ZeroModulus,
    #[error("modulus must be at least 2")]
    ModulusTooSmall,
    #[error("{a} and {m} share a factor, so no multiplicative order exists")]
    NotCoprime { a: u128, m: u128 },
    #[error("moduli {a} and {b} share a factor; the system is not pairwise coprime")]
    ModuliNotCoprime { a: u128, b: u128 },
    #[error("result does not fit in 128 bits")]
    Overflow,
    #[error("zero has no prime factorization")]
    ZeroFactor,
    #[error("entries must be ascending primes with positive exponents")]
    MalformedFactorization,
}

/// Prime factorization held as ascending `(prime, exponent)` entries.
/// `factor(1)` yields the empty list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    entries: Vec<(u128, u32)>,
}

impl Factorization {
    /// Validate hand-built entries: ascending primes, exponents >= 1, and a
    /// product that fits in 128 bits.
    pub fn from_entries(entries: Vec<(u128, u32)>) -> Result<Self, ArithError> {
        let mut prev = 0u128;
        let mut value = 1u128;
        for &(p, a) in &entries {
            if p <= prev || a == 0 || !is_prime(p) {
                return Err(ArithError::MalformedFactorization);
            }
            prev = p;
            for _ in 0..a {
                value = value.checked_mul(p).ok_or(ArithError::Overflow)?;
            }
        }
        Ok(Factorization { entries })
    }

    pub fn entries(&self) -> &[(u128, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multiply the factorization back out.
    pub fn value(&self) -> u128 {
        let mut n = 1u128;
        for &(p, a) in &self.entries {
            for _ in 0..a {
                n = n.checked_mul(p).expect("factorization came from a u128");
            }
        }
        n
    }

    /// Exponent of `p`, zero when `p` does not divide the value.
    pub fn exponent_of(&self, p: u128) -> u32 {
        self.entries
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, a)| a)
    }
}

/// Greatest common divisor; `gcd(0, n) = n`.
pub const fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Least common multiple; errors when the result needs more than 128 bits.
pub fn lcm(a: u128, b: u128) -> Result<u128, ArithError> {
    if a == 0 || b == 0 {
        return Ok(0);
    }
    (a / gcd(a, b)).checked_mul(b).ok_or(ArithError::Overflow)
}

/// `(a + b) mod m`, correct even when the raw sum wraps `u128`.
pub fn add_mod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(m >= 1);
    let a = a % m;
    let b = b % m;
    let (s, overflow) = a.overflowing_add(b);
    if overflow || s >= m {
        s.wrapping_sub(m)
    } else {
        s
    }
}

fn sub_mod(a: u128, b: u128, m: u128) -> u128 {
    let b = b % m;
    add_mod(a, m - b, m)
}

/// `(a * b) mod m` for any `m >= 1`, using double-and-add when the plain
/// product would overflow.
pub fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(m >= 1);
    let mut a = a % m;
    let mut b = b % m;
    if let Some(p) = a.checked_mul(b) {
        return p % m;
    }
    if b > a {
        std::mem::swap(&mut a, &mut b);
    }
    let mut acc = 0u128;
    while b > 0 {
        if b & 1 == 1 {
            acc = add_mod(acc, a, m);
        }
        a = add_mod(a, a, m);
        b >>= 1;
    }
    acc
}

fn pow_mod(mut base: u128, mut exp: u128, m: u128) -> u128 {
    debug_assert!(m >= 1);
    if m == 1 {
        return 0;
    }
    let mut acc = 1u128;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// `base^exp mod modulus` by repeated squaring. Only `modulus = 0` is
/// rejected; `modulus = 1` gives 0 and `0^0` counts as 1.
pub fn mod_pow(base: u128, exp: u128, modulus: u128) -> Result<u128, ArithError> {
    if modulus == 0 {
        return Err(ArithError::ZeroModulus);
    }
    Ok(pow_mod(base, exp, modulus))
}

const SMALL_PRIMES: &[u128] = &[2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Witness set that makes Miller-Rabin exact for every n < 2^64.
const MR_BASES_64: &[u128] = &[2, 325, 9375, 28178, 450775, 9780504, 1795265022];

/// Fixed screening bases for wider inputs (the first 25 primes). Inputs in
/// this range are far beyond any value the rest of the crate produces.
const MR_BASES_WIDE: &[u128] = &[
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

fn strong_probable_prime(n: u128, base: u128) -> bool {
    let base = base % n;
    if base == 0 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let mut x = pow_mod(base, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Miller-Rabin primality: deterministic below 2^64, fixed-base screen above.
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let bases = if n < (1u128 << 64) {
        MR_BASES_64
    } else {
        MR_BASES_WIDE
    };
    bases.iter().all(|&b| strong_probable_prime(n, b))
}

/// One nontrivial factor of an odd composite, by Floyd cycle-finding on
/// x^2 + c. The deterministic sweep over c keeps runs reproducible.
fn pollard_rho(n: u128) -> u128 {
    debug_assert!(n % 2 == 1 && n > 1 && !is_prime(n));
    let mut c = 1u128;
    loop {
        let step = |x: u128| add_mod(mul_mod(x, x, n), c, n);
        let mut x = 2u128;
        let mut y = 2u128;
        let mut d = 1u128;
        while d == 1 {
            x = step(x);
            y = step(step(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

/// Prime factorization of `n >= 1`: trial division below 2^20, then
/// Miller-Rabin / Pollard rho on whatever survives.
pub fn factor(n: u128) -> Result<Factorization, ArithError> {
    if n == 0 {
        return Err(ArithError::ZeroFactor);
    }
    let mut rest = n;
    let mut primes: Vec<u128> = Vec::new();
    let mut d = 2u128;
    while d < TRIAL_LIMIT && d * d <= rest {
        while rest % d == 0 {
            primes.push(d);
            rest /= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        if d * d > rest {
            // no divisor up to its square root, so rest is prime
            primes.push(rest);
        } else {
            let mut stack = vec![rest];
            while let Some(m) = stack.pop() {
                if is_prime(m) {
                    primes.push(m);
                    continue;
                }
                let f = pollard_rho(m);
                stack.push(f);
                stack.push(m / f);
            }
        }
    }
    primes.sort_unstable();
    let mut entries: Vec<(u128, u32)> = Vec::new();
    for p in primes {
        match entries.last_mut() {
            Some((q, a)) if *q == p => *a += 1,
            _ => entries.push((p, 1)),
        }
    }
    Ok(Factorization { entries })
}

/// True when every prime appears exactly once.
pub fn is_square_free(f: &Factorization) -> bool {
    f.entries.iter().all(|&(_, a)| a == 1)
}

/// Least `f >= 1` with `a^f = 1 (mod m)`. Requires `m >= 2` and
/// `gcd(a, m) = 1`. Starts from Euler phi of `m` and strips every prime that
/// can be removed, so the cost is a few factorizations instead of a scan.
pub fn multiplicative_order(a: u128, m: u128) -> Result<u128, ArithError> {
    if m < 2 {
        return Err(ArithError::ModulusTooSmall);
    }
    let a = a % m;
    if gcd(a, m) != 1 {
        return Err(ArithError::NotCoprime { a, m });
    }
    let phi: u128 = factor(m)?
        .entries()
        .iter()
        .map(|&(p, k)| p.pow(k - 1) * (p - 1))
        .product();
    let mut t = phi;
    for &(q, _) in factor(phi)?.entries() {
        while t % q == 0 && pow_mod(a, t / q, m) == 1 {
            t /= q;
        }
    }
    Ok(t)
}

/// CRT systems keep their product modulus below this so the Bezout
/// coefficients in the inverse computation stay comfortably inside `i128`.
const CRT_PRODUCT_LIMIT: u128 = 1 << 126;

/// Inverse of `a` modulo `m` by the extended Euclidean algorithm.
/// Preconditions: `gcd(a, m) = 1` and `m < 2^126`.
fn mod_inverse(a: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1, "inputs must be coprime");
    let m = m as i128;
    let t = ((t0 % m) + m) % m;
    t as u128
}

/// Solve `x = r_i (mod n_i)` for pairwise coprime moduli. Returns the unique
/// `(x, N)` with `x < N = prod n_i`; the empty system yields `(0, 1)`.
/// Residues larger than their modulus are reduced first.
pub fn crt_solve(congruences: &[(u128, u128)]) -> Result<(u128, u128), ArithError> {
    for &(_, n) in congruences {
        if n == 0 {
            return Err(ArithError::ZeroModulus);
        }
    }
    for i in 0..congruences.len() {
        for j in i + 1..congruences.len() {
            let (a, b) = (congruences[i].1, congruences[j].1);
            if gcd(a, b) != 1 {
                return Err(ArithError::ModuliNotCoprime { a, b });
            }
        }
    }
    let (mut x, mut n) = (0u128, 1u128);
    for &(r2, n2) in congruences {
        let product = n.checked_mul(n2).ok_or(ArithError::Overflow)?;
        if product > CRT_PRODUCT_LIMIT {
            return Err(ArithError::Overflow);
        }
        // x' = x + n * t with t chosen so x' hits r2 mod n2
        let diff = sub_mod(r2, x, n2);
        let t = mul_mod(diff, mod_inverse(n % n2, n2), n2);
        x = add_mod(x, mul_mod(n, t, product), product);
        n = product;
    }
    Ok((x, n))
}
