//! Cotangent lattices of the framed, unipotent and Steinberg local
//! deformation rings at a generic Steinberg augmentation.
//!
//! The augmentation is parametrized by (q, p, s, t) with t ≠ 0: the universal
//! matrices are A = [[q+a, b+s],[c, 1−a−e]] and B = [[1+α, β+t],[γ, 1+δ]],
//! and the evaluated differentials of the relation ideals span three nested
//! rank-5 lattices Λ^fr ⊆ Λ^uni ⊆ Λ^St inside O^8 with coordinate order
//! (da, db, dc, de, dα, dβ, dγ, dδ). Relative cotangent spaces are the
//! lattice quotients, so their lengths come from `plattice::quotient_length`;
//! the closed forms are
//!
//! * framed/Steinberg:  m + v_p(q²−1) − 2n
//! * framed/unipotent:  v_p(q²−1) − n
//! * unipotent/Steinberg:  m − n
//!
//! with m = v_p(t) and n = v_p(gcd(s, t, q−1)). The raw evaluated
//! differentials are the source of truth; the eliminated 5-row bases (which
//! branch into two cases by whether (q−1) | s or s | (q−1) in Z_(p)) are a
//! secondary cross-check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{is_prime_u64, vp_u64, vp_unchecked, PAdicVal};
use crate::error::WdlError;
use crate::plattice::{self, PLattice};

type Rat = BigRational;

/// Ambient coordinate order for all lattices in this module.
pub const COORDINATES: [&str; 8] = ["da", "db", "dc", "de", "dalpha", "dbeta", "dgamma", "ddelta"];

/// A Steinberg augmentation datum (q, p, s, t), t ≠ 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeformationPoint {
    pub q: u64,
    pub p: u64,
    pub s: i64,
    pub t: i64,
}

impl DeformationPoint {
    pub fn new(q: u64, p: u64, s: i64, t: i64) -> Result<Self, WdlError> {
        if !is_prime_u64(q) {
            return Err(WdlError::InvalidPoint(format!("q = {q} is not prime")));
        }
        if !is_prime_u64(p) || p == 2 {
            return Err(WdlError::InvalidPoint(format!("p = {p} is not an odd prime")));
        }
        if p == q {
            return Err(WdlError::InvalidPoint("p = q".into()));
        }
        if t == 0 {
            return Err(WdlError::InvalidPoint(
                "t = 0: the augmentation must be ramified (generic)".into(),
            ));
        }
        let pt = DeformationPoint { q, p, s, t };
        debug_assert!(pt.n() <= pt.m() && pt.n() <= vp_u64(p, q - 1).finite());
        Ok(pt)
    }

    /// m = v_p(t), the paper's m_q for this parametrization.
    pub fn m(&self) -> u64 {
        vp_u64(self.p, self.t.unsigned_abs()).finite()
    }

    /// n = v_p(gcd(s, t, q−1)), the paper's n_q.
    pub fn n(&self) -> u64 {
        let g = gcd3(self.s.unsigned_abs(), self.t.unsigned_abs(), self.q - 1);
        vp_u64(self.p, g).finite()
    }

    pub fn ord_q2_minus_1(&self) -> u64 {
        let q = BigInt::from(self.q);
        vp_unchecked(self.p, &(&q * &q - BigInt::one())).finite()
    }
}

fn gcd3(a: u64, b: u64, c: u64) -> u64 {
    use num_integer::Integer;
    a.gcd(&b).gcd(&c)
}

/// The three nested rank-5 lattices.
#[derive(Debug, Clone)]
pub struct CotangentLattices {
    pub framed: PLattice,
    pub unipotent: PLattice,
    pub steinberg: PLattice,
}

/// Which relative cotangent space to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingPair {
    FramedUnipotent,
    UnipotentSteinberg,
    FramedSteinberg,
}

impl RingPair {
    pub const ALL: [RingPair; 3] = [
        RingPair::FramedUnipotent,
        RingPair::UnipotentSteinberg,
        RingPair::FramedSteinberg,
    ];
}

fn binom(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Builds the three lattices from the raw evaluated differentials.
pub fn build_lattices(pt: &DeformationPoint) -> Result<CotangentLattices, WdlError> {
    let q = BigInt::from(pt.q);
    let s = BigInt::from(pt.s);
    let t = BigInt::from(pt.t);
    let z = BigInt::zero;
    let c2 = binom(pt.q, 2);
    let c3 = binom(pt.q, 3);
    let one = BigInt::one;

    // dr_1 = (1−q)da − s·dc − q·de,  dr_2 = dα + dδ − t·dγ
    let r1 = vec![one() - &q, z(), -&s, -&q, z(), z(), z(), z()];
    let r2 = vec![z(), z(), z(), z(), one(), z(), -&t, one()];
    // dr_3..dr_6: entries of d(AB − B^qA) evaluated at the augmentation
    let r3 = vec![
        z(),
        z(),
        -&q * &t,
        z(),
        -(&q * &q - &q),
        z(),
        &s - &q * &t * &c2,
        z(),
    ];
    let r4 = vec![
        (one() + &q) * &t,
        z(),
        z(),
        &q * &t,
        -(&q * &s) - &t * &c2,
        z(),
        -(&s * &t * &c2) - &t * &t * &c3,
        &s - &t * &c2,
    ];
    let r5 = vec![z(), z(), z(), z(), z(), z(), -(&q * &q - one()), z()];
    let r6 = vec![z(), z(), t.clone(), z(), z(), z(), -(&q * &s) - &t * &c2, -(&q - one())];
    let framed = PLattice::new(pt.p, 8, vec![r1.clone(), r2.clone(), r3, r4, r5, r6])?;

    // the six 2×2 minors of [[0, t, q−1, s], [dγ, dδ, dc, −da−de]]
    let m12 = vec![z(), z(), z(), z(), z(), z(), -&t, z()];
    let m13 = vec![z(), z(), z(), z(), z(), z(), -(&q - one()), z()];
    let m14 = vec![z(), z(), z(), z(), z(), z(), -&s, z()];
    let m23 = vec![z(), z(), t.clone(), z(), z(), z(), z(), -(&q - one())];
    let m24 = vec![-&t, z(), z(), -&t, z(), z(), z(), -&s];
    let m34 = vec![-(&q - one()), z(), -&s, -(&q - one()), z(), z(), z(), z()];
    // dr_7 = dα + dδ, dr_8 = de
    let r7 = vec![z(), z(), z(), z(), one(), z(), z(), one()];
    let r8 = vec![z(), z(), z(), one(), z(), z(), z(), z()];

    // unipotent: determinant rows, the four inner minors, dα+dδ, and
    // d((β+t)e) = t·de; d(αe) and d(γe) evaluate to zero
    let u9 = vec![z(), z(), z(), t.clone(), z(), z(), z(), z()];
    let zero_row = vec![z(), z(), z(), z(), z(), z(), z(), z()];
    let unipotent = PLattice::new(
        pt.p,
        8,
        vec![
            r1,
            r2,
            m13.clone(),
            m14.clone(),
            m23.clone(),
            m24.clone(),
            r7.clone(),
            zero_row.clone(),
            u9,
            zero_row,
        ],
    )?;

    let steinberg = PLattice::new(pt.p, 8, vec![m12, m13, m14, m23, m24, m34, r7, r8])?;

    Ok(CotangentLattices { framed, unipotent, steinberg })
}

/// The eliminated 5-row bases from Gauss elimination over O, for
/// cross-checking `build_lattices`. The Steinberg basis splits into
/// case I ((q−1) | s in Z_(p)) and case II (s | (q−1)).
pub fn eliminated_bases(pt: &DeformationPoint) -> Result<CotangentLattices, WdlError> {
    let p = pt.p;
    let qi = BigInt::from(pt.q);
    let s = BigInt::from(pt.s);
    let t = BigInt::from(pt.t);
    let f = BigInt::from(gcd3(pt.s.unsigned_abs(), pt.t.unsigned_abs(), pt.q - 1));
    let zeta = -(&qi * &s) - &t * binom(pt.q, 2);
    let xi = -(&qi * &s * &s) - &s * &t - &t * &t * binom(pt.q + 1, 3);
    let z = Rat::zero;
    let one = Rat::one;
    let r = |x: &BigInt| Rat::from(x.clone());

    let framed = PLattice::from_rational_rows(
        p,
        8,
        &[
            vec![r(&(&qi - BigInt::one())), z(), r(&s), r(&qi), z(), z(), z(), z()],
            vec![z(), z(), z(), z(), one(), z(), r(&-&t), one()],
            vec![z(), z(), z(), z(), z(), z(), r(&(&qi * &qi - BigInt::one())), z()],
            vec![z(), z(), r(&t), z(), z(), z(), r(&zeta), r(&(BigInt::one() - &qi))],
            vec![r(&(&t * BigInt::from(2))), z(), z(), z(), z(), z(), r(&xi), r(&(&s * BigInt::from(2)))],
        ],
    )?;

    let unipotent = PLattice::from_rational_rows(
        p,
        8,
        &[
            vec![r(&(&qi - BigInt::one())), z(), r(&s), r(&qi), z(), z(), z(), z()],
            vec![z(), z(), z(), z(), one(), z(), z(), one()],
            vec![z(), z(), z(), z(), z(), z(), r(&f), z()],
            vec![z(), z(), r(&t), z(), z(), z(), z(), r(&(BigInt::one() - &qi))],
            vec![r(&t), z(), z(), z(), z(), z(), z(), r(&s)],
        ],
    )?;

    let v_qm1 = vp_u64(p, pt.q - 1).finite();
    let v_s = vp_u64(p, pt.s.unsigned_abs());
    let case_one = match v_s {
        PAdicVal::Infinity => true, // s = 0
        PAdicVal::Finite(v) => v_qm1 <= v,
    };
    let head = [
        vec![z(), z(), z(), one(), z(), z(), z(), z()],
        vec![z(), z(), z(), z(), one(), z(), z(), one()],
        vec![z(), z(), z(), z(), z(), z(), r(&f), z()],
    ];
    let steinberg = if case_one {
        let fs_over_qm1 = Rat::new(&f * &s, &qi - BigInt::one());
        PLattice::from_rational_rows(
            p,
            8,
            &[
                head[0].clone(),
                head[1].clone(),
                head[2].clone(),
                vec![z(), z(), r(&t), z(), z(), z(), z(), r(&(BigInt::one() - &qi))],
                vec![r(&f), z(), fs_over_qm1, z(), z(), z(), z(), z()],
            ],
        )?
    } else {
        let fqm1_over_s = Rat::new(&f * (&qi - BigInt::one()), s.clone());
        PLattice::from_rational_rows(
            p,
            8,
            &[
                head[0].clone(),
                head[1].clone(),
                head[2].clone(),
                vec![fqm1_over_s, z(), r(&f), z(), z(), z(), z(), z()],
                vec![r(&t), z(), z(), z(), z(), z(), z(), r(&s)],
            ],
        )?
    };

    Ok(CotangentLattices { framed, unipotent, steinberg })
}

/// Relative cotangent length via the lattice quotient Λ^sup / Λ^sub.
pub fn relative_length_lattice(
    pt: &DeformationPoint,
    pair: RingPair,
) -> Result<PAdicVal, WdlError> {
    let lats = build_lattices(pt)?;
    let (sub, sup) = match pair {
        RingPair::FramedUnipotent => (&lats.framed, &lats.unipotent),
        RingPair::UnipotentSteinberg => (&lats.unipotent, &lats.steinberg),
        RingPair::FramedSteinberg => (&lats.framed, &lats.steinberg),
    };
    plattice::quotient_length(sub, sup)
}

/// Relative cotangent length by the closed forms.
pub fn relative_length_closed_form(
    pt: &DeformationPoint,
    pair: RingPair,
) -> Result<PAdicVal, WdlError> {
    let m = pt.m();
    let n = pt.n();
    let v = pt.ord_q2_minus_1();
    let len = match pair {
        RingPair::FramedUnipotent => v - n,
        RingPair::UnipotentSteinberg => m - n,
        RingPair::FramedSteinberg => m + v - 2 * n,
    };
    Ok(PAdicVal::Finite(len))
}

/// 2×2 matrices over Q, as row-major arrays.
pub type Mat2 = [[Rat; 2]; 2];

fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Rat::zero(), Rat::zero()], [Rat::zero(), Rat::zero()]];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
        }
    }
    out
}

fn mat2_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Rat::zero(), Rat::zero()], [Rat::zero(), Rat::zero()]];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = &a[i][j] - &b[i][j];
        }
    }
    out
}

fn mat2_eye() -> Mat2 {
    [[Rat::one(), Rat::zero()], [Rat::zero(), Rat::one()]]
}

fn mat2_is_zero(a: &Mat2) -> bool {
    a.iter().all(|row| row.iter().all(|x| x.is_zero()))
}

fn mat2_scale(a: &Mat2, c: &Rat) -> Mat2 {
    let mut out = [[Rat::zero(), Rat::zero()], [Rat::zero(), Rat::zero()]];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = &a[i][j] * c;
        }
    }
    out
}

fn mat2_add(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Rat::zero(), Rat::zero()], [Rat::zero(), Rat::zero()]];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = &a[i][j] + &b[i][j];
        }
    }
    out
}

fn mat2_pow(a: &Mat2, mut e: u64) -> Mat2 {
    let mut base = a.clone();
    let mut acc = mat2_eye();
    while e > 0 {
        if e & 1 == 1 {
            acc = mat2_mul(&acc, &base);
        }
        base = mat2_mul(&base, &base);
        e >>= 1;
    }
    acc
}

fn trace(a: &Mat2) -> Rat {
    &a[0][0] + &a[1][1]
}

fn det2(a: &Mat2) -> Rat {
    &a[0][0] * &a[1][1] - &a[0][1] * &a[1][0]
}

/// Checks both sides of the equivalence AB = B^q·A ⟺ (B−I)(A−I) = 0,
/// for char polys χ_A = (T−q)(T−1) and χ_B = (T−1)². B^q is computed as
/// I + q(B−I), valid since (B−I)² = 0, and cross-checked by
/// square-and-multiply.
pub fn shotton_equivalence_check(a: &Mat2, b: &Mat2, q: u64) -> Result<(bool, bool), WdlError> {
    if q < 2 {
        return Err(WdlError::InvalidInput("q must be at least 2".into()));
    }
    let qr = Rat::from(BigInt::from(q));
    if trace(a) != &qr + Rat::one() || det2(a) != qr {
        return Err(WdlError::CharPolyPrecondition(
            "char poly of A must be (T−q)(T−1)".into(),
        ));
    }
    if trace(b) != Rat::from(BigInt::from(2)) || det2(b) != Rat::one() {
        return Err(WdlError::CharPolyPrecondition(
            "char poly of B must be (T−1)²".into(),
        ));
    }
    let n = mat2_sub(b, &mat2_eye());
    debug_assert!(mat2_is_zero(&mat2_mul(&n, &n)), "(B−I)² = 0 by Cayley–Hamilton");
    let b_pow_q = mat2_add(&mat2_eye(), &mat2_scale(&n, &qr));
    debug_assert_eq!(mat2_pow(b, q), b_pow_q);
    let lhs = mat2_mul(a, b) == mat2_mul(&b_pow_q, a);
    let a_minus_i = mat2_sub(a, &mat2_eye());
    let rhs = mat2_is_zero(&mat2_mul(&n, &a_minus_i));
    Ok((lhs, rhs))
}

/// The three sums over a set of points: the cotangent-space change
/// Σ(m_q + v_p(q²−1) − 2n_q), the η-change exponent Σ(m_q + v_p(q²−1)),
/// and the defect Σ 2n_q. The defect is always the difference of the
/// other two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DefectDecomposition {
    pub cotangent_change: u64,
    pub eta_change: u64,
    pub defect: u64,
}

pub fn defect_decomposition(points: &[DeformationPoint]) -> DefectDecomposition {
    let mut cot = 0;
    let mut eta = 0;
    let mut defect = 0;
    for pt in points {
        let m = pt.m();
        let n = pt.n();
        let v = pt.ord_q2_minus_1();
        cot += m + v - 2 * n;
        eta += m + v;
        defect += 2 * n;
    }
    DefectDecomposition { cotangent_change: cot, eta_change: eta, defect }
}
