//! Lattices over Z_(p), the integers localized at p: spans, saturations,
//! kernels, membership, and lengths of lattice quotients.
//!
//! A `PLattice` is the Z_(p)-span of finitely many integer row vectors inside
//! Z_(p)^n. Rationals with denominator prime to p are units here, so pivoting
//! in all eliminations is by minimal p-valuation; row operations with
//! p-integral coefficients preserve the span exactly.
//!
//! Quotient lengths are read off from valuations of maximal minors (the
//! elementary divisor theorem): g_ρ(L) is the minimal p-valuation over all
//! ρ×ρ minors of a generator matrix, and ℓ(L'/L) = g_ρ(L) − g_ρ(L') for
//! L ⊆ L' of common rank ρ. A full local Smith reduction with tracked column
//! operations is also implemented; it backs `saturate` and serves as an
//! independent cross-check for the minor route.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{vp_unchecked, PAdicVal};
use crate::error::WdlError;

type Rat = BigRational;

/// A finitely generated Z_(p)-submodule of Z_(p)^n, given by integer
/// generator rows (possibly redundant or zero).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLattice {
    pub prime: u64,
    pub ambient: usize,
    pub gens: Vec<Vec<BigInt>>,
}

fn rat_vp(p: u64, x: &Rat) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let vn = match vp_unchecked(p, x.numer()) {
        PAdicVal::Finite(v) => v as i64,
        PAdicVal::Infinity => unreachable!(),
    };
    let vd = match vp_unchecked(p, x.denom()) {
        PAdicVal::Finite(v) => v as i64,
        PAdicVal::Infinity => unreachable!(),
    };
    Some(vn - vd)
}

/// Echelon basis of the Z_(p)-span of `rows`, with pivot columns.
///
/// Row operations use coefficients of nonnegative valuation only (the pivot
/// in each column is an entry of minimal valuation among the active rows),
/// so the span over Z_(p) is preserved exactly, not just up to saturation.
fn local_echelon(p: u64, rows: &[Vec<Rat>]) -> (Vec<Vec<Rat>>, Vec<usize>) {
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    let ncols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut pivots = Vec::new();
    let mut next_row = 0usize;
    for col in 0..ncols {
        // pick the active row whose entry in this column has minimal valuation
        let mut best: Option<(usize, i64)> = None;
        for (i, row) in m.iter().enumerate().skip(next_row) {
            if let Some(v) = rat_vp(p, &row[col]) {
                if best.map(|(_, bv)| v < bv).unwrap_or(true) {
                    best = Some((i, v));
                }
            }
        }
        let Some((imin, _)) = best else { continue };
        m.swap(next_row, imin);
        let pivot = m[next_row][col].clone();
        for i in 0..m.len() {
            if i == next_row || m[i][col].is_zero() {
                continue;
            }
            if i < next_row {
                // already-placed rows keep their pivot structure; entries in
                // this column there belong to earlier pivot columns' rows and
                // may have smaller valuation, so they are left untouched.
                continue;
            }
            let coeff = &m[i][col] / &pivot;
            debug_assert!(rat_vp(p, &coeff).map(|v| v >= 0).unwrap_or(true));
            for j in 0..ncols {
                let sub = &coeff * &m[next_row][j];
                m[i][j] = &m[i][j] - &sub;
            }
        }
        pivots.push(col);
        next_row += 1;
        if next_row == m.len() {
            break;
        }
    }
    m.truncate(next_row);
    (m, pivots)
}

/// Expresses `v` in an echelon basis by forward substitution. Returns the
/// coefficients if `v` lies in the Q-span, None otherwise.
fn reduce_against(basis: &[Vec<Rat>], pivots: &[usize], v: &[Rat]) -> Option<Vec<Rat>> {
    let mut v = v.to_vec();
    let mut coeffs = Vec::with_capacity(basis.len());
    for (row, &col) in basis.iter().zip(pivots) {
        let c = &v[col] / &row[col];
        if !c.is_zero() {
            for j in 0..v.len() {
                let sub = &c * &row[j];
                v[j] = &v[j] - &sub;
            }
        }
        coeffs.push(c);
    }
    if v.iter().all(|x| x.is_zero()) {
        Some(coeffs)
    } else {
        None
    }
}

fn to_rat_rows(rows: &[Vec<BigInt>]) -> Vec<Vec<Rat>> {
    rows.iter()
        .map(|r| r.iter().map(|x| Rat::from(x.clone())).collect())
        .collect()
}

/// Clears denominators of a rational row by the lcm; the multiplier must be a
/// p-unit, which holds whenever entries are p-integral.
fn clear_denominators(p: u64, row: &[Rat]) -> Result<Vec<BigInt>, WdlError> {
    let mut l: BigInt = One::one();
    for x in row {
        l = l.lcm(x.denom());
    }
    if vp_unchecked(p, &l) != PAdicVal::Finite(0) {
        return Err(WdlError::NonLocalDenominator(p));
    }
    Ok(row
        .iter()
        .map(|x| {
            let scaled = x * Rat::from(l.clone());
            debug_assert!(scaled.denom().is_one() || scaled.denom() == &BigInt::from(-1));
            scaled.to_integer()
        })
        .collect())
}

impl PLattice {
    pub fn new(prime: u64, ambient: usize, gens: Vec<Vec<BigInt>>) -> Result<Self, WdlError> {
        if !crate::arith::is_prime_u64(prime) {
            return Err(WdlError::NotPrime(prime));
        }
        for g in &gens {
            if g.len() != ambient {
                return Err(WdlError::AmbientMismatch(g.len(), ambient));
            }
        }
        Ok(PLattice { prime, ambient, gens })
    }

    pub fn from_i64(prime: u64, ambient: usize, gens: &[&[i64]]) -> Result<Self, WdlError> {
        Self::new(
            prime,
            ambient,
            gens.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    /// Builds a lattice from rational rows whose denominators are p-units
    /// (each row is scaled by its denominator lcm, which does not change the
    /// Z_(p)-span).
    pub fn from_rational_rows(
        prime: u64,
        ambient: usize,
        rows: &[Vec<Rat>],
    ) -> Result<Self, WdlError> {
        let gens = rows
            .iter()
            .map(|r| clear_denominators(prime, r))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(prime, ambient, gens)
    }

    pub fn zero(prime: u64, ambient: usize) -> Self {
        PLattice { prime, ambient, gens: vec![] }
    }

    pub fn identity(prime: u64, ambient: usize) -> Self {
        let gens = (0..ambient)
            .map(|i| {
                (0..ambient)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect();
        PLattice { prime, ambient, gens }
    }

    /// Lattice generated by the union of generators.
    pub fn join(&self, other: &PLattice) -> Result<PLattice, WdlError> {
        if self.ambient != other.ambient {
            return Err(WdlError::AmbientMismatch(self.ambient, other.ambient));
        }
        let mut gens = self.gens.clone();
        gens.extend(other.gens.iter().cloned());
        Ok(PLattice { prime: self.prime, ambient: self.ambient, gens })
    }

    /// Scales every generator by an integer.
    pub fn scale(&self, c: &BigInt) -> PLattice {
        PLattice {
            prime: self.prime,
            ambient: self.ambient,
            gens: self
                .gens
                .iter()
                .map(|r| r.iter().map(|x| x * c).collect())
                .collect(),
        }
    }

    fn echelon(&self) -> (Vec<Vec<Rat>>, Vec<usize>) {
        local_echelon(self.prime, &to_rat_rows(&self.gens))
    }
}

/// Rational rank of the generator matrix.
pub fn rank(l: &PLattice) -> usize {
    l.echelon().0.len()
}

/// An echelon basis of the lattice, as integer rows with the same
/// Z_(p)-span as the generators.
pub fn basis_rows(l: &PLattice) -> Result<Vec<Vec<BigInt>>, WdlError> {
    let (basis, _) = l.echelon();
    basis
        .iter()
        .map(|r| clear_denominators(l.prime, r))
        .collect()
}

/// Exact determinant of a square integer matrix.
pub fn det_of(m: &[Vec<BigInt>]) -> BigInt {
    det_bigint(m)
}

/// True iff every generator of `lsub` is a p-locally-integral combination of
/// generators of `lsup`, i.e. lsub ⊆ lsup as Z_(p)-modules.
pub fn contains(lsub: &PLattice, lsup: &PLattice) -> Result<bool, WdlError> {
    if lsub.ambient != lsup.ambient {
        return Err(WdlError::AmbientMismatch(lsub.ambient, lsup.ambient));
    }
    let p = lsup.prime;
    let (basis, pivots) = lsup.echelon();
    for g in to_rat_rows(&lsub.gens) {
        match reduce_against(&basis, &pivots, &g) {
            None => return Ok(false),
            Some(coeffs) => {
                if coeffs
                    .iter()
                    .any(|c| rat_vp(p, c).map(|v| v < 0).unwrap_or(false))
                {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Determinant of a square rational matrix by fraction-free Bareiss on the
/// numerators after clearing a common denominator per row.
fn det_bigint(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

/// g_ρ: minimal p-valuation over all ρ×ρ minors of the generator matrix,
/// where ρ is the rank. The generators are first replaced by an echelon
/// basis (a unimodular operation over Z_(p), which preserves the
/// determinantal ideal), leaving only the choice of ρ columns.
pub fn min_maximal_minor_valuation(l: &PLattice) -> Result<PAdicVal, WdlError> {
    let p = l.prime;
    let (basis, _) = l.echelon();
    let rho = basis.len();
    if rho == 0 {
        return Ok(PAdicVal::Finite(0));
    }
    let int_rows: Vec<Vec<BigInt>> = basis
        .iter()
        .map(|r| clear_denominators(p, r))
        .collect::<Result<_, _>>()?;
    let ncols = l.ambient;
    let mut best = PAdicVal::Infinity;
    let mut cols: Vec<usize> = (0..rho).collect();
    loop {
        let sub: Vec<Vec<BigInt>> = int_rows
            .iter()
            .map(|r| cols.iter().map(|&c| r[c].clone()).collect())
            .collect();
        let d = det_bigint(&sub);
        best = best.min(vp_unchecked(p, &d));
        if best == PAdicVal::Finite(0) {
            break;
        }
        // next combination of rho columns out of ncols
        let mut i = rho;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if cols[i] != i + ncols - rho {
                cols[i] += 1;
                for j in i + 1..rho {
                    cols[j] = cols[j - 1] + 1;
                }
                break;
            }
        }
    }
    Ok(best)
}

/// Length over Z_(p) of lsup/lsub for lsub ⊆ lsup of equal rank ρ, computed
/// as g_ρ(lsub) − g_ρ(lsup).
pub fn quotient_length(lsub: &PLattice, lsup: &PLattice) -> Result<PAdicVal, WdlError> {
    let r_sub = rank(lsub);
    let r_sup = rank(lsup);
    if r_sub != r_sup {
        return Err(WdlError::RankMismatch(r_sub, r_sup));
    }
    if !contains(lsub, lsup)? {
        return Err(WdlError::NotContained(0));
    }
    let g_sub = min_maximal_minor_valuation(lsub)?.finite();
    let g_sup = min_maximal_minor_valuation(lsup)?.finite();
    debug_assert!(g_sub >= g_sup);
    Ok(PAdicVal::Finite(g_sub - g_sup))
}

/// Local Smith reduction: diagonalizes the matrix by row and column
/// operations invertible over Z_(p) (global minimal-valuation pivoting),
/// tracking the inverse of the accumulated column operation.
///
/// Returns the elementary divisor valuations d_1 ≤ … ≤ d_ρ and the matrix
/// N = C^{-1}: the row space of the input over Z_(p) is spanned by
/// p^{d_i}·N_i, so the saturation is spanned by the first ρ rows of N.
pub fn smith_local(p: u64, rows: &[Vec<Rat>], ncols: usize) -> (Vec<u64>, Vec<Vec<Rat>>) {
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    let nrows = m.len();
    let mut ninv: Vec<Vec<Rat>> = (0..ncols)
        .map(|i| {
            (0..ncols)
                .map(|j| if i == j { Rat::one() } else { Rat::zero() })
                .collect()
        })
        .collect();
    let mut divisors = Vec::new();
    let steps = nrows.min(ncols);
    for k in 0..steps {
        // global minimal-valuation pivot in the active submatrix
        let mut best: Option<(usize, usize, i64)> = None;
        for i in k..nrows {
            for j in k..ncols {
                if let Some(v) = rat_vp(p, &m[i][j]) {
                    if best.map(|(_, _, bv)| v < bv).unwrap_or(true) {
                        best = Some((i, j, v));
                    }
                }
            }
        }
        let Some((pi, pj, pv)) = best else { break };
        m.swap(k, pi);
        if pj != k {
            for row in m.iter_mut() {
                row.swap(k, pj);
            }
            ninv.swap(k, pj);
        }
        let pivot = m[k][k].clone();
        // clear the pivot column by row operations
        for i in k + 1..nrows {
            if m[i][k].is_zero() {
                continue;
            }
            let coeff = &m[i][k] / &pivot;
            for j in k..ncols {
                let sub = &coeff * &m[k][j];
                m[i][j] = &m[i][j] - &sub;
            }
        }
        // clear the pivot row by column operations, mirrored on ninv
        for j in k + 1..ncols {
            if m[k][j].is_zero() {
                continue;
            }
            let coeff = &m[k][j] / &pivot;
            for i in k..nrows {
                let sub = &coeff * &m[i][k];
                m[i][j] = &m[i][j] - &sub;
            }
            // column op col_j -= coeff*col_k has inverse row op
            // row_k += coeff*row_j on N = C^{-1}
            for c in 0..ncols {
                let add = &coeff * &ninv[j][c];
                ninv[k][c] = &ninv[k][c] + &add;
            }
        }
        debug_assert!(pv >= 0, "input rows must be p-integral");
        divisors.push(pv as u64);
    }
    (divisors, ninv)
}

/// The smallest p-saturated lattice containing L: a basis of
/// span_Q(L) ∩ Z_(p)^n, by elementary-divisor (Smith) reduction with tracked
/// column operations.
pub fn saturate(l: &PLattice) -> Result<PLattice, WdlError> {
    let rho = rank(l);
    if rho == 0 {
        return Ok(PLattice::zero(l.prime, l.ambient));
    }
    let (divs, ninv) = smith_local(l.prime, &to_rat_rows(&l.gens), l.ambient);
    debug_assert_eq!(divs.len(), rho);
    PLattice::from_rational_rows(l.prime, l.ambient, &ninv[..rho].to_vec())
}

/// Elementary divisor valuations of an integer matrix over Z_(p).
pub fn snf_valuations(p: u64, rows: &[Vec<BigInt>], ncols: usize) -> Vec<u64> {
    smith_local(p, &to_rat_rows(rows), ncols).0
}

/// Saturated lattice of row vectors v with v·A = 0 (the left kernel of A).
pub fn kernel(a: &[Vec<BigInt>], p: u64) -> Result<PLattice, WdlError> {
    let m = a.len();
    let n = a.first().map(|r| r.len()).unwrap_or(0);
    // row-reduce [A | I]; rows whose A-part vanishes carry kernel vectors
    let rows: Vec<Vec<Rat>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<Rat> = r.iter().map(|x| Rat::from(x.clone())).collect();
            for j in 0..m {
                row.push(if j == i { Rat::one() } else { Rat::zero() });
            }
            row
        })
        .collect();
    // eliminate using only the first n columns as pivot candidates
    let mut mat = rows;
    let mut next_row = 0usize;
    for col in 0..n {
        let mut best: Option<(usize, i64)> = None;
        for (i, row) in mat.iter().enumerate().skip(next_row) {
            if let Some(v) = rat_vp(p, &row[col]) {
                if best.map(|(_, bv)| v < bv).unwrap_or(true) {
                    best = Some((i, v));
                }
            }
        }
        let Some((imin, _)) = best else { continue };
        mat.swap(next_row, imin);
        let pivot = mat[next_row][col].clone();
        for i in next_row + 1..mat.len() {
            if mat[i][col].is_zero() {
                continue;
            }
            let coeff = &mat[i][col] / &pivot;
            for j in 0..n + m {
                let sub = &coeff * &mat[next_row][j];
                mat[i][j] = &mat[i][j] - &sub;
            }
        }
        next_row += 1;
        if next_row == mat.len() {
            break;
        }
    }
    let kernel_rows: Vec<Vec<Rat>> = mat
        .iter()
        .skip(next_row)
        .map(|row| row[n..].to_vec())
        .collect();
    let raw = PLattice::from_rational_rows(p, m, &kernel_rows)?;
    saturate(&raw)
}

/// Mutual containment.
pub fn same_span(a: &PLattice, b: &PLattice) -> Result<bool, WdlError> {
    Ok(contains(a, b)? && contains(b, a)?)
}
