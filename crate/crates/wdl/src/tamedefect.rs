//! Tame local invariants of a semistable elliptic curve at a multiplicative
//! prime, and the Wiles defect they sum to.
//!
//! At a prime q of multiplicative reduction the Tate period q_E has
//! v_q(q_E) = −v_q(j) > 0, and its unit part satisfies
//! q̃ ≡ j^{−1}·|j|_q^{−1} (mod q), so everything is computed from the
//! j-invariant — the period itself is never expanded q-adically. With
//!
//! * t_q = v_p(q − 1),
//! * m_q = v_p(v_q(q_E)),
//! * u_q = v_p of the index of ⟨q̃⟩ in F_q^×,
//! * k_q = min(m_q, t_q),
//!
//! the local invariant is n_q = min(t_q, m_q, u_q), equivalently the
//! logarithmic route v_p(index of ⟨log_{q,p^{k_q}}(q̃)⟩ in Z/p^{k_q}).
//! Level lowering at q is possible exactly when m_q > 0, and the Wiles
//! defect attached to a set Q of multiplicative primes is Σ_{q∈Q} 2·n_q.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{
    fq_index_pval, is_prime_u64, mod_inv, subgroup_index_via_log, unit_part_mod, vp_u64,
    vp_unchecked, PAdicVal,
};
use crate::elliptic::{
    irreducibility_certificate, reduction_at, IrreducibilityCertificate, ReductionKind,
    WeierstrassCurve,
};
use crate::error::WdlError;
use crate::localdef::DeformationPoint;

/// The tuple (q, p, v_q(q_E), t_q, m_q, u_q, k_q, n_q, q̃ mod q, split).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalTameInvariants {
    pub q: u64,
    pub p: u64,
    /// v_q of the Tate period, = −v_q(j).
    pub vq_tate: u64,
    pub t_q: u64,
    pub m_q: u64,
    pub u_q: u64,
    pub k_q: u64,
    pub n_q: u64,
    /// Unit part of the Tate period, reduced mod q.
    pub unit_part: u64,
    pub split: bool,
}

/// Default search bound for irreducibility certificates.
pub const DEFAULT_CERT_BOUND: u64 = 100;

/// Computes the tame invariants of E at a multiplicative prime q, for an odd
/// prime p with p ≠ q and p not dividing the conductor. Works on the minimal
/// model of E.
pub fn tame_invariants(
    curve: &WeierstrassCurve,
    q: u64,
    p: u64,
) -> Result<LocalTameInvariants, WdlError> {
    if !is_prime_u64(p) || p == 2 {
        return Err(WdlError::Precondition(format!("p = {p} is not an odd prime")));
    }
    if p == q {
        return Err(WdlError::Precondition("p = q".into()));
    }
    let min = curve.minimal_model()?;
    let inv = min.invariants()?;
    if vp_unchecked(p, &inv.disc) != PAdicVal::Finite(0) {
        return Err(WdlError::Precondition(format!(
            "p = {p} divides the minimal discriminant (bad reduction at p)"
        )));
    }
    let red = reduction_at(&min, q)?;
    if !red.kind.is_multiplicative() {
        return Err(WdlError::NotMultiplicative(q));
    }
    debug_assert_eq!(red.vq_j, -(red.vq_delta_min as i64));
    let vq_tate = red.vq_delta_min;
    // q̃ ≡ j^{−1}·|j|_q^{−1} (mod q): invert the unit part of j
    let j_unit = unit_part_mod(q, &inv.j)?;
    let unit_part = mod_inv(j_unit, q)?;
    let t_q = vp_u64(p, q - 1).finite();
    let m_q = vp_u64(p, vq_tate).finite();
    let k_q = m_q.min(t_q);
    let u_q = fq_index_pval(unit_part, q, p)?;
    let n_q = t_q.min(m_q).min(u_q);
    debug_assert!(n_q <= m_q && n_q <= t_q);
    Ok(LocalTameInvariants {
        q,
        p,
        vq_tate,
        t_q,
        m_q,
        u_q,
        k_q,
        n_q,
        unit_part,
        split: red.kind == ReductionKind::MultiplicativeSplit,
    })
}

/// n_q by the logarithmic route: the index of ⟨log_{q,p^{k_q}}(q̃)⟩ in
/// Z/p^{k_q}. Always equals `inv.n_q`.
pub fn nq_via_log(inv: &LocalTameInvariants) -> Result<u64, WdlError> {
    subgroup_index_via_log(inv.unit_part, inv.q, inv.p, inv.k_q)
}

/// A deformation point whose (m, n) match these invariants, connecting the
/// tame route to the explicit cotangent-lattice computation.
pub fn deformation_point_for(inv: &LocalTameInvariants) -> Result<DeformationPoint, WdlError> {
    let t = (inv.p as i64).pow(inv.m_q as u32);
    let s = (inv.p as i64).pow(inv.n_q as u32);
    DeformationPoint::new(inv.q, inv.p, s, t)
}

/// Factors the minimal discriminant of a semistable curve over its bad
/// primes. Errors if an unfactorable composite cofactor remains.
fn bad_primes(disc: &BigInt) -> Result<Vec<(u64, u64)>, WdlError> {
    let mut n = disc.magnitude().clone();
    let mut out: Vec<(u64, u64)> = Vec::new();
    let mut l = 2u64;
    while l < 1_000_000 {
        let lb = num_bigint::BigUint::from(l);
        if (&n % &lb).is_zero() {
            let mut e = 0u64;
            while (&n % &lb).is_zero() {
                n /= &lb;
                e += 1;
            }
            out.push((l, e));
        }
        if n.is_one() {
            break;
        }
        l += if l == 2 { 1 } else { 2 };
    }
    if !n.is_one() {
        use num_traits::ToPrimitive;
        match n.to_u64() {
            Some(q) if is_prime_u64(q) => out.push((q, 1)),
            _ => {
                return Err(WdlError::Precondition(
                    "minimal discriminant has an unfactorable cofactor".into(),
                ))
            }
        }
    }
    Ok(out)
}

/// Outcome of level lowering: the conductor of the mod-p representation and
/// the primes dropped from the level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoweredConductor {
    pub n_lowered: u64,
    pub dropped: Vec<u64>,
    pub certificate: IrreducibilityCertificate,
}

/// N(ρ̄) for a semistable curve of squarefree conductor: drop every
/// multiplicative prime q with p | v_q(q_E). Requires p coprime to the
/// conductor and a successful irreducibility certificate.
pub fn lowered_conductor(
    curve: &WeierstrassCurve,
    p: u64,
    cert_bound: u64,
) -> Result<LoweredConductor, WdlError> {
    let min = curve.minimal_model()?;
    let inv = min.invariants()?;
    let bad = bad_primes(&inv.disc)?;
    if bad.iter().any(|&(q, _)| q == p) {
        return Err(WdlError::Precondition(format!("p = {p} divides the conductor")));
    }
    let mut conductor: u64 = 1;
    for &(q, _) in &bad {
        let red = reduction_at(&min, q)?;
        if !red.kind.is_multiplicative() {
            return Err(WdlError::Precondition(format!(
                "additive reduction at {q}; conductor is not squarefree"
            )));
        }
        conductor = conductor
            .checked_mul(q)
            .ok_or_else(|| WdlError::InvalidInput("conductor overflows u64".into()))?;
    }
    let certificate = irreducibility_certificate(&min, p, cert_bound)?;
    if certificate == IrreducibilityCertificate::Undetermined {
        return Err(WdlError::Precondition(
            "irreducibility of the mod-p representation is not certified".into(),
        ));
    }
    let mut dropped = Vec::new();
    let mut n_lowered = conductor;
    for &(q, e) in &bad {
        if vp_u64(p, e) >= PAdicVal::Finite(1) {
            dropped.push(q);
            n_lowered /= q;
        }
    }
    Ok(LoweredConductor { n_lowered, dropped, certificate })
}

/// Applicability of the defect theorem's parity/coprimality alternatives.
/// Reported alongside the defect, never used to suppress it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Applicability {
    /// |Q| even and gcd(N(ρ̄), ∏Q) > 1.
    pub even_case: bool,
    /// |Q| odd and the complementary level N/∏Q exceeds 1.
    pub odd_case: bool,
    /// N(ρ̄) is divisible by at least two primes.
    pub two_prime_case: bool,
}

impl Applicability {
    pub fn any(&self) -> bool {
        self.even_case || self.odd_case || self.two_prime_case
    }
}

/// Σ_{q∈Q} 2·n_q together with the applicability report.
pub fn wiles_defect_for_q(
    curve: &WeierstrassCurve,
    q_set: &[u64],
    p: u64,
) -> Result<(BigRational, Applicability), WdlError> {
    if q_set.is_empty() {
        return Err(WdlError::Precondition("Q must be nonempty".into()));
    }
    let min = curve.minimal_model()?;
    let inv = min.invariants()?;
    let mut defect = 0u64;
    for &q in q_set {
        let ti = tame_invariants(&min, q, p)?;
        defect += 2 * ti.n_q;
    }
    // applicability data from the full bad-prime decomposition
    let bad = bad_primes(&inv.disc)?;
    let mut conductor = 1u64;
    let mut n_rho_bar = 1u64;
    let mut semistable = true;
    for &(q, e) in &bad {
        let red = reduction_at(&min, q)?;
        if !red.kind.is_multiplicative() {
            semistable = false;
            continue;
        }
        conductor = conductor.saturating_mul(q);
        if vp_u64(p, e) == PAdicVal::Finite(0) {
            n_rho_bar = n_rho_bar.saturating_mul(q);
        }
    }
    let prod_q: u64 = q_set.iter().product();
    let complement = if semistable { conductor / prod_q } else { 0 };
    let gcd_nq = num_integer::Integer::gcd(&n_rho_bar, &prod_q);
    let omega = crate::arith::factor_u64(n_rho_bar).len();
    let app = Applicability {
        even_case: q_set.len() % 2 == 0 && gcd_nq > 1,
        odd_case: q_set.len() % 2 == 1 && complement > 1,
        two_prime_case: omega >= 2,
    };
    Ok((BigRational::from(BigInt::from(defect)), app))
}
