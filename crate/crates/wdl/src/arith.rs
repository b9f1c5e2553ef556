//! Exact integer arithmetic at a prime p: valuations, unit parts, modular
//! arithmetic, and index computations in the multiplicative group F_q^×.
//!
//! All functions here are pure and operate on immutable values; they are safe
//! to call from any number of worker threads.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::fmt;

use crate::error::WdlError;

/// A p-adic valuation: a natural number, or Infinity (the valuation of 0).
///
/// Infinity absorbs addition and dominates min; it is a dedicated variant,
/// never a sentinel integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PAdicVal {
    Finite(u64),
    Infinity,
}

impl PAdicVal {
    pub fn is_finite(self) -> bool {
        matches!(self, PAdicVal::Finite(_))
    }

    /// The finite value, panicking on Infinity.
    pub fn finite(self) -> u64 {
        match self {
            PAdicVal::Finite(v) => v,
            PAdicVal::Infinity => panic!("PAdicVal::finite called on Infinity"),
        }
    }

    pub fn min(self, other: PAdicVal) -> PAdicVal {
        match (self, other) {
            (PAdicVal::Finite(a), PAdicVal::Finite(b)) => PAdicVal::Finite(a.min(b)),
            (PAdicVal::Finite(a), PAdicVal::Infinity) => PAdicVal::Finite(a),
            (PAdicVal::Infinity, b) => b,
        }
    }
}

impl std::ops::Add for PAdicVal {
    type Output = PAdicVal;
    fn add(self, rhs: PAdicVal) -> PAdicVal {
        match (self, rhs) {
            (PAdicVal::Finite(a), PAdicVal::Finite(b)) => PAdicVal::Finite(a + b),
            _ => PAdicVal::Infinity,
        }
    }
}

impl PartialOrd for PAdicVal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PAdicVal {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (PAdicVal::Finite(a), PAdicVal::Finite(b)) => a.cmp(b),
            (PAdicVal::Finite(_), PAdicVal::Infinity) => std::cmp::Ordering::Less,
            (PAdicVal::Infinity, PAdicVal::Finite(_)) => std::cmp::Ordering::Greater,
            (PAdicVal::Infinity, PAdicVal::Infinity) => std::cmp::Ordering::Equal,
        }
    }
}

impl fmt::Display for PAdicVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PAdicVal::Finite(v) => write!(f, "{v}"),
            PAdicVal::Infinity => write!(f, "oo"),
        }
    }
}

/// A signed valuation, as taken by nonzero rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignedVal {
    Finite(i64),
    Infinity,
}

impl SignedVal {
    pub fn finite(self) -> i64 {
        match self {
            SignedVal::Finite(v) => v,
            SignedVal::Infinity => panic!("SignedVal::finite called on Infinity"),
        }
    }
}

/// Deterministic primality test for u64 (trial division by 2, 3 and then
/// 6k±1 candidates; inputs in this crate stay below 2^32 where this is fast).
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    if n % 3 == 0 {
        return n == 3;
    }
    let mut d = 5u64;
    while d.checked_mul(d).map(|dd| dd <= n).unwrap_or(false) {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

fn require_prime(p: u64) -> Result<(), WdlError> {
    if is_prime_u64(p) {
        Ok(())
    } else {
        Err(WdlError::NotPrime(p))
    }
}

/// Exact p-adic valuation of an integer; Infinity for 0.
pub fn vp(p: u64, n: &BigInt) -> Result<PAdicVal, WdlError> {
    require_prime(p)?;
    Ok(vp_unchecked(p, n))
}

pub(crate) fn vp_unchecked(p: u64, n: &BigInt) -> PAdicVal {
    if n.is_zero() {
        return PAdicVal::Infinity;
    }
    let pb = BigInt::from(p);
    let mut v = 0u64;
    let mut cur = n.clone();
    loop {
        let (q, r) = num_integer::Integer::div_rem(&cur, &pb);
        if r.is_zero() {
            v += 1;
            cur = q;
        } else {
            return PAdicVal::Finite(v);
        }
    }
}

/// Shortcut for machine integers.
pub fn vp_u64(p: u64, n: u64) -> PAdicVal {
    if n == 0 {
        return PAdicVal::Infinity;
    }
    let mut v = 0;
    let mut n = n;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    PAdicVal::Finite(v)
}

/// Signed p-adic valuation of a rational: v_p(num) − v_p(den); Infinity for 0.
pub fn vp_rational(p: u64, x: &BigRational) -> Result<SignedVal, WdlError> {
    require_prime(p)?;
    if x.is_zero() {
        return Ok(SignedVal::Infinity);
    }
    let vn = vp_unchecked(p, x.numer()).finite() as i64;
    let vd = vp_unchecked(p, x.denom()).finite() as i64;
    Ok(SignedVal::Finite(vn - vd))
}

/// x^e mod m with u128 intermediates.
pub fn mod_pow(mut x: u64, mut e: u64, m: u64) -> u64 {
    assert!(m > 1);
    let mut acc: u128 = 1;
    let mut base: u128 = (x % m) as u128;
    let m128 = m as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m128;
        }
        base = base * base % m128;
        e >>= 1;
    }
    x = acc as u64;
    x
}

/// Modular inverse of x mod m (m prime), via Fermat.
pub fn mod_inv(x: u64, m: u64) -> Result<u64, WdlError> {
    if x % m == 0 {
        return Err(WdlError::NotAUnit { x, modulus: m });
    }
    Ok(mod_pow(x, m - 2, m))
}

fn bigint_mod_u64(n: &BigInt, m: u64) -> u64 {
    let r = n % BigInt::from(m);
    let r = if r.is_negative() { r + BigInt::from(m) } else { r };
    let (_, digits) = r.to_u64_digits();
    match digits.len() {
        0 => 0,
        1 => digits[0],
        _ => unreachable!("residue exceeds u64"),
    }
}

/// The unit part of x at q, reduced mod q: (x · q^{−v_q(x)}) mod q, an element
/// of F_q^×. Numerator and denominator unit parts are handled separately, the
/// denominator through a modular inverse.
pub fn unit_part_mod(q: u64, x: &BigRational) -> Result<u64, WdlError> {
    require_prime(q)?;
    if x.is_zero() {
        return Err(WdlError::ZeroHasNoUnitPart);
    }
    let qb = BigInt::from(q);
    let strip = |n: &BigInt| -> BigInt {
        let mut cur = n.clone();
        loop {
            let (quo, rem) = num_integer::Integer::div_rem(&cur, &qb);
            if rem.is_zero() {
                cur = quo;
            } else {
                return cur;
            }
        }
    };
    let nu = bigint_mod_u64(&strip(x.numer()), q);
    let du = bigint_mod_u64(&strip(x.denom()), q);
    let inv = mod_inv(du, q)?;
    Ok((nu as u128 * inv as u128 % q as u128) as u64)
}

/// Prime factorization of a u64 by trial division, as (prime, exponent) pairs.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    for p in std::iter::once(2u64).chain((3..).step_by(2)) {
        if p.checked_mul(p).map(|pp| pp > n).unwrap_or(true) {
            break;
        }
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Exact multiplicative order of x in F_q^×, from the factorization of q−1.
pub fn multiplicative_order(x: u64, q: u64) -> Result<u64, WdlError> {
    require_prime(q)?;
    let x = x % q;
    if x == 0 {
        return Err(WdlError::NotAUnit { x, modulus: q });
    }
    let mut ord = q - 1;
    for (r, _) in factor_u64(q - 1) {
        while ord % r == 0 && mod_pow(x, ord / r, q) == 1 {
            ord /= r;
        }
    }
    Ok(ord)
}

/// v_p of the index of ⟨x⟩ in F_q^×, i.e. v_p((q−1)/ord(x)).
pub fn fq_index_pval(x: u64, q: u64, p: u64) -> Result<u64, WdlError> {
    require_prime(p)?;
    let ord = multiplicative_order(x, q)?;
    Ok(vp_u64(p, (q - 1) / ord).finite())
}

/// Smallest primitive root g ≥ 2 modulo q, by the standard order test against
/// each prime factor of q−1.
pub fn primitive_root(q: u64) -> Result<u64, WdlError> {
    require_prime(q)?;
    if q == 2 {
        return Ok(1);
    }
    let factors = factor_u64(q - 1);
    'outer: for g in 2..q {
        for (r, _) in &factors {
            if mod_pow(g, (q - 1) / r, q) == 1 {
                continue 'outer;
            }
        }
        return Ok(g);
    }
    unreachable!("every prime has a primitive root")
}

/// Discrete log of x in the p-Sylow quotient of F_q^×: the image of log_g(x)
/// in Z/p^t where p^t || q−1. Pohlig–Hellman digit by digit.
fn dlog_p_part(x: u64, q: u64, p: u64) -> Result<u64, WdlError> {
    let t = vp_u64(p, q - 1).finite() as u32;
    if t == 0 {
        return Ok(0);
    }
    let pt = p.pow(t);
    let g = primitive_root(q)?;
    let cofactor = (q - 1) / pt;
    // gamma generates the cyclic subgroup of order p^t; h lies in it.
    let gamma = mod_pow(g, cofactor, q);
    let h = mod_pow(x % q, cofactor, q);
    // digits of L = log_gamma(h) base p, via projections to the order-p subgroup
    let omega = mod_pow(gamma, pt / p, q); // order p
    let mut log = 0u64;
    let gamma_inv = mod_inv(gamma, q)?;
    let mut cur = h;
    for k in 0..t {
        let probe = mod_pow(cur, pt / p.pow(k + 1), q);
        // find digit d with omega^d == probe (p is small in all uses here)
        let mut d = 0u64;
        let mut acc = 1u64;
        while acc != probe {
            acc = (acc as u128 * omega as u128 % q as u128) as u64;
            d += 1;
            if d >= p {
                return Err(WdlError::Internal("Pohlig-Hellman digit not found".into()));
            }
        }
        log += d * p.pow(k);
        // strip the digit: cur /= gamma^(d p^k)
        let strip = mod_pow(gamma_inv, d * p.pow(k), q);
        cur = (cur as u128 * strip as u128 % q as u128) as u64;
    }
    Ok(log)
}

/// v_p of the index of the subgroup generated by log_{q,p^k}(x) in Z/p^k,
/// where log_{q,p^k} is the projection F_q^× ↠ Z/p^k (requires p^k | q−1).
///
/// Agrees with min(k, fq_index_pval(x, q, p)).
pub fn subgroup_index_via_log(x: u64, q: u64, p: u64, k: u64) -> Result<u64, WdlError> {
    require_prime(p)?;
    require_prime(q)?;
    if x % q == 0 {
        return Err(WdlError::NotAUnit { x: x % q, modulus: q });
    }
    let t = vp_u64(p, q - 1).finite();
    if k > t {
        return Err(WdlError::InvalidInput(format!(
            "p^k = {p}^{k} does not divide q-1 = {}",
            q - 1
        )));
    }
    if k == 0 {
        return Ok(0);
    }
    let log_pt = dlog_p_part(x, q, p)?;
    let log_pk = log_pt % p.pow(k as u32);
    // index of <log_pk> in Z/p^k is p^min(k, v_p(log_pk))
    let v = match vp_u64(p, log_pk) {
        PAdicVal::Finite(v) => v.min(k),
        PAdicVal::Infinity => k,
    };
    Ok(v)
}
