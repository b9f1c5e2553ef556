//! Exact Weierstrass-curve machinery: standard invariants, global minimal
//! models (Laska–Kraus–Connell), reduction types at bad primes, point counts
//! over small prime fields, and a one-sided irreducibility certificate for
//! the mod-p representation.
//!
//! Only the good/multiplicative/additive trichotomy is implemented — no
//! Kodaira types or conductor exponents at additive primes. Semistable
//! curves have conductor = radical of the minimal discriminant, which is all
//! the defect scan needs; curves with additive reduction are excluded there.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{is_prime_u64, mod_pow, vp_unchecked, PAdicVal};
use crate::error::WdlError;

type Rat = BigRational;

/// An integral Weierstrass equation y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeierstrassCurve {
    pub a1: BigInt,
    pub a2: BigInt,
    pub a3: BigInt,
    pub a4: BigInt,
    pub a6: BigInt,
    pub label: Option<String>,
}

/// The b-, c-invariants, discriminant and j-invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invariants {
    pub b2: BigInt,
    pub b4: BigInt,
    pub b6: BigInt,
    pub b8: BigInt,
    pub c4: BigInt,
    pub c6: BigInt,
    pub disc: BigInt,
    pub j: Rat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    Good,
    MultiplicativeSplit,
    MultiplicativeNonsplit,
    Additive,
}

impl ReductionKind {
    pub fn is_multiplicative(self) -> bool {
        matches!(self, ReductionKind::MultiplicativeSplit | ReductionKind::MultiplicativeNonsplit)
    }
}

/// Reduction data at a prime q of a q-minimal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionInfo {
    pub q: u64,
    pub kind: ReductionKind,
    pub vq_delta_min: u64,
    pub vq_j: i64,
}

impl WeierstrassCurve {
    pub fn new(a: [i64; 5], label: Option<String>) -> Self {
        WeierstrassCurve {
            a1: BigInt::from(a[0]),
            a2: BigInt::from(a[1]),
            a3: BigInt::from(a[2]),
            a4: BigInt::from(a[3]),
            a6: BigInt::from(a[4]),
            label,
        }
    }

    pub fn from_bigints(a: [BigInt; 5], label: Option<String>) -> Self {
        let [a1, a2, a3, a4, a6] = a;
        WeierstrassCurve { a1, a2, a3, a4, a6, label }
    }

    /// Standard invariants; the identity 1728Δ = c4³ − c6² is asserted.
    pub fn invariants(&self) -> Result<Invariants, WdlError> {
        let (a1, a2, a3, a4, a6) = (&self.a1, &self.a2, &self.a3, &self.a4, &self.a6);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * (a2 * a6) - a1 * a3 * a4 + a2 * (a3 * a3) - a4 * a4;
        let c4 = &b2 * &b2 - 24 * &b4;
        let c6 = BigInt::from(36) * (&b2 * &b4) - (&b2 * &b2 * &b2) - BigInt::from(216) * &b6;
        let disc: BigInt = BigInt::from(9) * (&b2 * &b4 * &b6)
            - (&b2 * &b2 * &b8)
            - BigInt::from(8) * (&b4 * &b4 * &b4)
            - BigInt::from(27) * (&b6 * &b6);
        if disc.is_zero() {
            return Err(WdlError::SingularCurve);
        }
        debug_assert_eq!(BigInt::from(1728) * &disc, &c4 * &c4 * &c4 - &c6 * &c6);
        debug_assert_eq!(BigInt::from(4) * &b8, &b2 * &b6 - &b4 * &b4);
        let j = Rat::new(&c4 * &c4 * &c4, disc.clone());
        Ok(Invariants { b2, b4, b6, b8, c4, c6, disc, j })
    }

    /// Change of coordinates x = u²x' + r, y = u³y' + su²x' + t.
    /// Requires u ≠ 0; the result is integral when u, r, s, t are integers.
    pub fn transform(&self, u: &BigInt, r: &BigInt, s: &BigInt, t: &BigInt) -> WeierstrassCurve {
        let (a1, a2, a3, a4, a6) = (&self.a1, &self.a2, &self.a3, &self.a4, &self.a6);
        let na1 = a1 + 2 * s;
        let na2 = a2 - s * a1 + 3 * r - s * s;
        let na3 = a3 + r * a1 + 2 * t;
        let na4 = a4 - s * a3 + 2 * (r * a2) - (t + r * s) * a1 + 3 * (r * r) - 2 * (s * t);
        let na6 = a6 + r * a4 + r * r * a2 + r * r * r - t * a3 - t * t - r * t * a1;
        let u2 = u * u;
        let u3 = &u2 * u;
        let u4 = &u2 * &u2;
        let u6 = &u3 * &u3;
        WeierstrassCurve {
            a1: exact_div(&na1, u),
            a2: exact_div(&na2, &u2),
            a3: exact_div(&na3, &u3),
            a4: exact_div(&na4, &u4),
            a6: exact_div(&na6, &u6),
            label: self.label.clone(),
        }
    }

    /// A global minimal model, by the Laska–Kraus–Connell method: divide
    /// (c4, c6) by u⁴, u⁶ for the largest admissible u and rebuild a reduced
    /// equation (a1, a3 ∈ {0,1}, a2 ∈ {−1,0,1}).
    pub fn minimal_model(&self) -> Result<WeierstrassCurve, WdlError> {
        let inv = self.invariants()?;
        let (c4, c6) = (&inv.c4, &inv.c6);
        // primes that could divide u satisfy ℓ⁴ | c4 and ℓ⁶ | c6
        let mut candidates: Vec<(u64, u64)> = Vec::new();
        for l in small_primes_dividing_both(c4, c6) {
            let v4 = match vp_unchecked(l, c4) {
                PAdicVal::Finite(v) => Some(v / 4),
                PAdicVal::Infinity => None,
            };
            let v6 = match vp_unchecked(l, c6) {
                PAdicVal::Finite(v) => Some(v / 6),
                PAdicVal::Infinity => None,
            };
            let d = match (v4, v6) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!("c4 = c6 = 0 contradicts disc != 0"),
            };
            if d > 0 {
                candidates.push((l, d));
            }
        }
        let d2 = candidates.iter().find(|(l, _)| *l == 2).map(|&(_, d)| d).unwrap_or(0);
        let d3 = candidates.iter().find(|(l, _)| *l == 3).map(|&(_, d)| d).unwrap_or(0);
        let mut u_rest = BigInt::one();
        for &(l, d) in &candidates {
            if l != 2 && l != 3 {
                u_rest *= BigInt::from(l).pow(d as u32);
            }
        }
        // Kraus conditions live at 2 and 3; back off those exponents until an
        // integral equation exists (always true at e2 = e3 = 0)
        for e2 in (0..=d2).rev() {
            for e3 in (0..=d3).rev() {
                let u = &u_rest * BigInt::from(2).pow(e2 as u32) * BigInt::from(3).pow(e3 as u32);
                let u4 = u.pow(4);
                let u6 = u.pow(6);
                if !(c4 % &u4).is_zero() || !(c6 % &u6).is_zero() {
                    continue;
                }
                if let Some(mut curve) = curve_from_c4_c6(&(c4 / &u4), &(c6 / &u6)) {
                    curve.label = self.label.clone();
                    debug_assert_eq!(curve.invariants()?.j, inv.j);
                    return Ok(curve);
                }
            }
        }
        unreachable!("the original invariants always admit an integral model")
    }
}

fn exact_div(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!((a % b).is_zero(), "transformation left the integral model");
    a / b
}

/// Primes ℓ with ℓ⁴ | c4 (or c4 = 0) and ℓ⁶ | c6 (or c6 = 0); such ℓ are
/// bounded by |c4|^(1/4) respectively |c6|^(1/6), so trial division on the
/// gcd-like bound is exhaustive.
fn small_primes_dividing_both(c4: &BigInt, c6: &BigInt) -> Vec<u64> {
    let bound_from = |x: &BigInt, e: u32| -> Option<u64> {
        if x.is_zero() {
            return None;
        }
        let mag = x.magnitude();
        let bits = mag.bits();
        // 2^(bits/e) bounds |x|^(1/e) loosely from above
        Some(1u64 << (bits / e as u64 + 1).min(40))
    };
    let b = match (bound_from(c4, 4), bound_from(c6, 6)) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => return vec![],
    };
    let mut out = Vec::new();
    let mut l = 2u64;
    while l <= b {
        if is_prime_u64(l) {
            let lb = BigInt::from(l);
            let div4 = c4.is_zero() || (c4 % lb.pow(4)).is_zero();
            let div6 = c6.is_zero() || (c6 % lb.pow(6)).is_zero();
            if div4 && div6 {
                out.push(l);
            }
        }
        l += 1;
    }
    out
}

/// Rebuilds a reduced integral equation with the given invariants, if one
/// exists (the constructive form of Kraus's conditions).
fn curve_from_c4_c6(c4: &BigInt, c6: &BigInt) -> Option<WeierstrassCurve> {
    for a1 in 0i64..=1 {
        for a2 in -1i64..=1 {
            for a3 in 0i64..=1 {
                let a1b = BigInt::from(a1);
                let a2b = BigInt::from(a2);
                let a3b = BigInt::from(a3);
                let b2 = &a1b * &a1b + BigInt::from(4) * &a2b;
                let num_b4 = &b2 * &b2 - c4;
                if !(&num_b4 % BigInt::from(24)).is_zero() {
                    continue;
                }
                let b4 = num_b4 / BigInt::from(24);
                let num_a4 = &b4 - &a1b * &a3b;
                if !(&num_a4 % BigInt::from(2)).is_zero() {
                    continue;
                }
                let a4 = num_a4 / BigInt::from(2);
                let num_b6 = BigInt::from(36) * (&b2 * &b4) - (&b2 * &b2 * &b2) - c6;
                if !(&num_b6 % BigInt::from(216)).is_zero() {
                    continue;
                }
                let b6 = num_b6 / BigInt::from(216);
                let num_a6 = &b6 - &a3b * &a3b;
                if !(&num_a6 % BigInt::from(4)).is_zero() {
                    continue;
                }
                let a6 = num_a6 / BigInt::from(4);
                let curve = WeierstrassCurve {
                    a1: a1b,
                    a2: a2b,
                    a3: a3b,
                    a4,
                    a6,
                    label: None,
                };
                if let Ok(inv) = curve.invariants() {
                    if &inv.c4 == c4 && &inv.c6 == c6 {
                        return Some(curve);
                    }
                }
            }
        }
    }
    None
}

fn bigint_mod(x: &BigInt, q: u64) -> u64 {
    let r = x % BigInt::from(q);
    let r = if r.is_negative() { r + BigInt::from(q) } else { r };
    let (_, d) = r.to_u64_digits();
    d.first().copied().unwrap_or(0)
}

/// Legendre symbol of x mod odd prime q, as 0, 1 or −1.
fn legendre(x: u64, q: u64) -> i32 {
    let x = x % q;
    if x == 0 {
        return 0;
    }
    if mod_pow(x, (q - 1) / 2, q) == 1 {
        1
    } else {
        -1
    }
}

/// Reduction type at q of a model assumed minimal at q.
pub fn reduction_at(curve: &WeierstrassCurve, q: u64) -> Result<ReductionInfo, WdlError> {
    if !is_prime_u64(q) {
        return Err(WdlError::NotPrime(q));
    }
    let inv = curve.invariants()?;
    let v_disc = vp_unchecked(q, &inv.disc);
    let vq_delta_min = match v_disc {
        PAdicVal::Finite(v) => v,
        PAdicVal::Infinity => unreachable!(),
    };
    let vq_j = {
        let vn = vp_unchecked(q, inv.j.numer());
        match vn {
            PAdicVal::Finite(v) => {
                v as i64 - vp_unchecked(q, inv.j.denom()).finite() as i64
            }
            PAdicVal::Infinity => 0, // j = 0 has no pole; only the pole order matters below
        }
    };
    if vq_delta_min == 0 {
        return Ok(ReductionInfo { q, kind: ReductionKind::Good, vq_delta_min, vq_j });
    }
    let v_c4 = vp_unchecked(q, &inv.c4);
    if v_c4 == PAdicVal::Finite(0) {
        // node; split iff the tangent directions are rational
        let split = if q >= 5 {
            legendre(bigint_mod(&-&inv.c6, q), q) == 1
        } else {
            tangent_split(curve, q)?
        };
        debug_assert_eq!(vq_j, -(vq_delta_min as i64));
        let kind = if split {
            ReductionKind::MultiplicativeSplit
        } else {
            ReductionKind::MultiplicativeNonsplit
        };
        Ok(ReductionInfo { q, kind, vq_delta_min, vq_j })
    } else {
        Ok(ReductionInfo { q, kind: ReductionKind::Additive, vq_delta_min, vq_j })
    }
}

/// Split/nonsplit for q ∈ {2, 3} via the tangent cone at the singular point.
fn tangent_split(curve: &WeierstrassCurve, q: u64) -> Result<bool, WdlError> {
    let a1 = bigint_mod(&curve.a1, q);
    let a2 = bigint_mod(&curve.a2, q);
    let a3 = bigint_mod(&curve.a3, q);
    let a4 = bigint_mod(&curve.a4, q);
    let a6 = bigint_mod(&curve.a6, q);
    let f = |x: u64, y: u64| -> u64 {
        (y * y + a1 * x % q * y + a3 * y + q * q * 3
            - (x * x % q * x + a2 * x % q * x + a4 * x + a6) % q)
            % q
    };
    let fx = |x: u64, y: u64| -> u64 {
        (a1 * y + q * q * 3 - (3 * x % q * x + 2 * a2 % q * x + a4) % q) % q
    };
    let fy = |x: u64, y: u64| -> u64 { (2 * y + a1 * x + a3) % q };
    for x0 in 0..q {
        for y0 in 0..q {
            if f(x0, y0) == 0 && fx(x0, y0) == 0 && fy(x0, y0) == 0 {
                // tangent cone Y² + a1·XY − (3x0 + a2)·X²
                let c = (q * 4 - (3 * x0 + a2) % q) % q;
                if q == 2 {
                    // node forces a1 odd; roots of z² + z + c over F_2
                    return Ok(c % 2 == 0);
                }
                let disc = (a1 * a1 + 4 * ((3 * x0 + a2) % q)) % q;
                return Ok(legendre(disc, q) == 1);
            }
        }
    }
    Err(WdlError::Internal("no singular point found on a singular reduction".into()))
}

/// Trace of Frobenius a_ℓ = ℓ + 1 − #E(F_ℓ), by brute-force point count on
/// the minimal model. Requires good reduction at ℓ and ℓ ≤ 10^4; the Hasse
/// bound is asserted.
pub fn ap(curve: &WeierstrassCurve, ell: u64) -> Result<i64, WdlError> {
    if !is_prime_u64(ell) || ell > 10_000 {
        return Err(WdlError::InvalidInput(format!("ℓ = {ell} not a prime ≤ 10^4")));
    }
    let min = curve.minimal_model()?;
    let inv = min.invariants()?;
    if vp_unchecked(ell, &inv.disc) != PAdicVal::Finite(0) {
        return Err(WdlError::BadReduction(ell));
    }
    let a1 = bigint_mod(&min.a1, ell);
    let a2 = bigint_mod(&min.a2, ell);
    let a3 = bigint_mod(&min.a3, ell);
    let a4 = bigint_mod(&min.a4, ell);
    let a6 = bigint_mod(&min.a6, ell);
    let mut count: i64 = 1; // the point at infinity
    if ell == 2 {
        for x in 0..2u64 {
            for y in 0..2u64 {
                let lhs = (y * y + a1 * x * y + a3 * y) % 2;
                let rhs = (x * x * x + a2 * x * x + a4 * x + a6) % 2;
                if lhs == rhs {
                    count += 1;
                }
            }
        }
    } else {
        for x in 0..ell {
            // complete the square: roots of y² + (a1x + a3)y − g(x)
            let g = ((x * x % ell * x + a2 * x % ell * x + a4 * x + a6) % ell) as u128;
            let b = (a1 * x + a3) % ell;
            let disc = ((b as u128 * b as u128 + 4 * g) % ell as u128) as u64;
            count += match legendre(disc, ell) {
                0 => 1,
                1 => 2,
                _ => 0,
            };
        }
    }
    let a = ell as i64 + 1 - count;
    debug_assert!(a * a <= 4 * ell as i64, "Hasse bound");
    Ok(a)
}

/// Outcome of the one-sided irreducibility test for the mod-p representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrreducibilityCertificate {
    /// x² − a_ℓ·x + ℓ is irreducible over F_p; the representation is
    /// (absolutely) irreducible.
    CertifiedAt(u64),
    Undetermined,
}

/// Searches for the smallest good prime ℓ ≤ bound, ℓ ≠ p, whose Frobenius
/// characteristic polynomial is irreducible mod p. Curves left Undetermined
/// may still be irreducible; the certificate is one-sided.
pub fn irreducibility_certificate(
    curve: &WeierstrassCurve,
    p: u64,
    bound: u64,
) -> Result<IrreducibilityCertificate, WdlError> {
    if !is_prime_u64(p) || p == 2 {
        return Err(WdlError::InvalidInput(format!("p = {p} is not an odd prime")));
    }
    let min = curve.minimal_model()?;
    let inv = min.invariants()?;
    for ell in 2..=bound.min(10_000) {
        if !is_prime_u64(ell) || ell == p {
            continue;
        }
        if vp_unchecked(ell, &inv.disc) != PAdicVal::Finite(0) {
            continue;
        }
        let a = ap(&min, ell)?;
        let disc = a * a - 4 * ell as i64;
        let disc_mod = disc.rem_euclid(p as i64) as u64;
        if legendre(disc_mod, p) == -1 {
            return Ok(IrreducibilityCertificate::CertifiedAt(ell));
        }
    }
    Ok(IrreducibilityCertificate::Undetermined)
}
