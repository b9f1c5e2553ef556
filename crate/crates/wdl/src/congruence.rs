//! Congruence modules, cotangent spaces and Wiles defects of finite flat
//! reduced local O-algebras, with O the p-adic integers.
//!
//! An algebra R is presented as the O-subalgebra of O^r generated (under
//! componentwise multiplication) by integer vectors, one coordinate per
//! augmentation λ_1, …, λ_r. Admissibility — all coordinates of each
//! generator congruent mod p — makes R local with residue field F_p; a
//! separating family of generators keeps the r augmentations distinct. Such
//! an R is automatically reduced, p-torsion free and finite flat.
//!
//! For an augmentation λ = λ_i (a coordinate projection):
//!
//! * the cotangent length is ℓ(ker λ / (ker λ)²);
//! * the congruence length of R is v_p(λ(α)) where R[ker λ] = O·α;
//! * the congruence length of a reflexive module M is v_p det(⟨f_a, x_b⟩)
//!   over bases x of M[ker λ] and f of M*[ker λ];
//! * the Wiles defect of M with λ-rank d is (d·ℓΦ − ℓΨ(M)) / d.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Deserialize;

use crate::arith::{is_prime_u64, vp_unchecked, PAdicVal};
use crate::error::WdlError;
use crate::plattice::{self, PLattice};

type Rat = BigRational;

/// JSON presentation of an algebra: `{ "p": .., "r": .., "generators": [[..]] }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraPresentation {
    pub p: u64,
    pub r: usize,
    pub generators: Vec<Vec<i64>>,
}

/// JSON presentation of a module: `{ "rank": .., "actions": [[[..]]] }`,
/// one matrix per algebra generator, in generator order.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulePresentation {
    pub rank: usize,
    pub actions: Vec<Vec<Vec<i64>>>,
}

pub fn parse_algebra_json(s: &str) -> Result<AlgebraPresentation, WdlError> {
    serde_json::from_str(s).map_err(|e| WdlError::Parse(format!("algebra JSON: {e}")))
}

pub fn parse_module_json(s: &str) -> Result<ModulePresentation, WdlError> {
    serde_json::from_str(s).map_err(|e| WdlError::Parse(format!("module JSON: {e}")))
}

/// A finite flat reduced local O-algebra R ⊆ O^r with split augmentations.
#[derive(Debug, Clone)]
pub struct OAlgebra {
    pub prime: u64,
    pub num_augmentations: usize,
    pub generators: Vec<Vec<BigInt>>,
    /// O-basis of the algebra lattice (rank r).
    basis: Vec<Vec<BigInt>>,
    /// Monomial span stabilized after this many doubling rounds.
    rounds: usize,
}

fn componentwise(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn ones(r: usize) -> Vec<BigInt> {
    vec![BigInt::one(); r]
}

impl OAlgebra {
    pub fn new(prime: u64, r: usize, generators: Vec<Vec<BigInt>>) -> Result<Self, WdlError> {
        if !is_prime_u64(prime) {
            return Err(WdlError::NotPrime(prime));
        }
        if r == 0 {
            return Err(WdlError::Inadmissible("need at least one augmentation".into()));
        }
        for (k, g) in generators.iter().enumerate() {
            if g.len() != r {
                return Err(WdlError::Inadmissible(format!(
                    "generator {k} has {} coordinates, expected {r}",
                    g.len()
                )));
            }
            // localness: all coordinates congruent mod p
            let p = BigInt::from(prime);
            let r0 = num_integer::Integer::mod_floor(&g[0], &p);
            for (j, x) in g.iter().enumerate() {
                if num_integer::Integer::mod_floor(x, &p) != r0 {
                    return Err(WdlError::Inadmissible(format!(
                        "generator {k}: coordinates 0 and {j} incongruent mod {prime}"
                    )));
                }
            }
        }
        // distinctness: every pair of coordinates separated by some generator
        for i in 0..r {
            for j in i + 1..r {
                if !generators.iter().any(|g| g[i] != g[j]) {
                    return Err(WdlError::Inadmissible(format!(
                        "no generator separates augmentations {i} and {j}"
                    )));
                }
            }
        }
        // close the O-span of {1} ∪ generators under products
        let mut seed: Vec<Vec<BigInt>> = vec![ones(r)];
        seed.extend(generators.iter().cloned());
        let mut lat = PLattice::new(prime, r, seed)?;
        let mut rounds = 0usize;
        loop {
            let basis = plattice::basis_rows(&lat)?;
            let mut products = basis.clone();
            for a in 0..basis.len() {
                for b in a..basis.len() {
                    products.push(componentwise(&basis[a], &basis[b]));
                }
            }
            let bigger = PLattice::new(prime, r, products)?;
            if plattice::contains(&bigger, &lat)? {
                lat = PLattice::new(prime, r, basis)?;
                break;
            }
            lat = bigger;
            rounds += 1;
            if rounds > r + 4 {
                return Err(WdlError::Inadmissible(
                    "monomial span failed to stabilize".into(),
                ));
            }
        }
        let basis = plattice::basis_rows(&lat)?;
        if basis.len() != r {
            return Err(WdlError::Inadmissible(format!(
                "algebra has rank {} < r = {r}; augmentations are not independent",
                basis.len()
            )));
        }
        Ok(OAlgebra { prime, num_augmentations: r, generators, basis, rounds })
    }

    pub fn from_presentation(pres: &AlgebraPresentation) -> Result<Self, WdlError> {
        let gens = pres
            .generators
            .iter()
            .map(|g| g.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        OAlgebra::new(pres.p, pres.r, gens)
    }

    /// The p-adic integers themselves (r = 1, no extra generators).
    pub fn coefficient_ring(prime: u64) -> Result<Self, WdlError> {
        OAlgebra::new(prime, 1, vec![])
    }

    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.basis
    }

    pub fn stabilization_rounds(&self) -> usize {
        self.rounds
    }

    /// λ_i evaluated on a generator.
    fn lambda_of_generator(&self, gen: usize, i: usize) -> BigInt {
        self.generators[gen][i].clone()
    }

    fn check_index(&self, i: usize) -> Result<(), WdlError> {
        if i >= self.num_augmentations {
            return Err(WdlError::AugmentationOutOfRange { index: i, r: self.num_augmentations });
        }
        Ok(())
    }

    /// Basis of ker λ_i as a sublattice of O^r (saturated in R; rank r−1).
    fn augmentation_kernel(&self, i: usize) -> Result<Vec<Vec<BigInt>>, WdlError> {
        self.check_index(i)?;
        // coefficient vectors c with (c·B)_i = 0
        let col: Vec<Vec<BigInt>> = self.basis.iter().map(|b| vec![b[i].clone()]).collect();
        let coeffs = plattice::kernel(&col, self.prime)?;
        Ok(coeffs.gens.iter().map(|c| self.apply_coeffs(c)).collect())
    }

    fn apply_coeffs(&self, c: &[BigInt]) -> Vec<BigInt> {
        let r = self.num_augmentations;
        let mut out = vec![BigInt::zero(); r];
        for (cu, b) in c.iter().zip(&self.basis) {
            for j in 0..r {
                out[j] += cu * &b[j];
            }
        }
        out
    }

    /// Generator α of the annihilator R[ker λ_i] = O·α (saturated, rank 1).
    pub fn annihilator_generator(&self, i: usize) -> Result<Vec<BigInt>, WdlError> {
        self.check_index(i)?;
        let kernel = self.augmentation_kernel(i)?;
        let r = self.num_augmentations;
        // variables: coefficients c_u of x = Σ c_u b_u; equations: (x ∘ k)_j = 0
        let mut system: Vec<Vec<BigInt>> = vec![Vec::new(); r];
        for k in &kernel {
            for (u, b) in self.basis.iter().enumerate() {
                for j in 0..r {
                    system[u].push(&b[j] * &k[j]);
                }
            }
        }
        if kernel.is_empty() {
            for row in system.iter_mut() {
                row.push(BigInt::zero());
            }
        }
        let ann = plattice::kernel(&system, self.prime)?;
        if plattice::rank(&ann) != 1 {
            return Err(WdlError::AnnihilatorRankNotOne(plattice::rank(&ann)));
        }
        let alpha = self.apply_coeffs(&ann.gens[0]);
        for (j, x) in alpha.iter().enumerate() {
            if j != i && !x.is_zero() {
                return Err(WdlError::Internal(
                    "annihilator generator not supported on the augmentation line".into(),
                ));
            }
        }
        if alpha[i].is_zero() {
            return Err(WdlError::Internal("annihilator generator vanishes".into()));
        }
        Ok(alpha)
    }
}

/// ℓ_O(ker λ_i / (ker λ_i)²), the cotangent length of R at λ_i.
pub fn cotangent_length(r: &OAlgebra, i: usize) -> Result<PAdicVal, WdlError> {
    let kernel = r.augmentation_kernel(i)?;
    let n = r.num_augmentations;
    let k_lat = PLattice::new(r.prime, n, kernel.clone())?;
    let mut products = Vec::new();
    for a in 0..kernel.len() {
        for b in a..kernel.len() {
            products.push(componentwise(&kernel[a], &kernel[b]));
        }
    }
    let k2_lat = PLattice::new(r.prime, n, products)?;
    plattice::quotient_length(&k2_lat, &k_lat)
}

/// v_p(λ_i(α)) where R[ker λ_i] = O·α; the congruence (η-)length of R at λ_i.
pub fn algebra_congruence_length(r: &OAlgebra, i: usize) -> Result<PAdicVal, WdlError> {
    let alpha = r.annihilator_generator(i)?;
    Ok(vp_unchecked(r.prime, &alpha[i]))
}

/// A reflexive R-module: a free O-lattice of rank n with one commuting
/// action matrix per algebra generator. Matrices act on row vectors from the
/// right. Entries are p-integral rationals; the JSON interface admits
/// integers only, while internally constructed modules (regular modules,
/// ideals) may carry p-unit denominators.
#[derive(Debug, Clone)]
pub struct RModule {
    pub rank: usize,
    pub actions: Vec<Vec<Vec<Rat>>>,
    /// (element of R, its action matrix) for a basis of R; used to realize
    /// the action of arbitrary algebra elements.
    basis_action: Vec<(Vec<Rat>, Vec<Vec<Rat>>)>,
}

fn mat_mul(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![Rat::zero(); m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                let add = &a[i][l] * &b[l][j];
                out[i][j] = &out[i][j] + &add;
            }
        }
    }
    out
}

fn mat_eye(n: usize) -> Vec<Vec<Rat>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
        .collect()
}

fn mat_is_zero(a: &[Vec<Rat>]) -> bool {
    a.iter().all(|row| row.iter().all(|x| x.is_zero()))
}

impl RModule {
    /// Validates commutativity and well-definedness against the algebra:
    /// every polynomial relation among the generators, up to the span
    /// stabilization degree, must also hold among the action matrices.
    pub fn new(
        algebra: &OAlgebra,
        rank: usize,
        actions: Vec<Vec<Vec<Rat>>>,
    ) -> Result<Self, WdlError> {
        if actions.len() != algebra.generators.len() {
            return Err(WdlError::InvalidModule(format!(
                "{} action matrices for {} generators",
                actions.len(),
                algebra.generators.len()
            )));
        }
        if rank == 0 {
            return Err(WdlError::InvalidModule("rank must be positive".into()));
        }
        for (k, m) in actions.iter().enumerate() {
            if m.len() != rank || m.iter().any(|row| row.len() != rank) {
                return Err(WdlError::InvalidModule(format!(
                    "action matrix {k} is not {rank}x{rank}"
                )));
            }
        }
        for a in 0..actions.len() {
            for b in a + 1..actions.len() {
                let ab = mat_mul(&actions[a], &actions[b]);
                let ba = mat_mul(&actions[b], &actions[a]);
                if ab != ba {
                    return Err(WdlError::InvalidModule(format!(
                        "action matrices {a} and {b} do not commute"
                    )));
                }
            }
        }
        // track (algebra element, matrix) pairs through the same product
        // closure that built the algebra basis; a combination whose element
        // vanishes must have vanishing matrix
        let r = algebra.num_augmentations;
        let mut pairs: Vec<(Vec<Rat>, Vec<Vec<Rat>>)> = Vec::new();
        pairs.push((vec![Rat::one(); r], mat_eye(rank)));
        for (g, m) in algebra.generators.iter().zip(&actions) {
            pairs.push((g.iter().map(|x| Rat::from(x.clone())).collect(), m.clone()));
        }
        let mut basis = reduce_pairs(algebra.prime, pairs, rank)?;
        for _ in 0..=algebra.rounds {
            let mut next = basis.clone();
            for a in 0..basis.len() {
                for b in a..basis.len() {
                    let v: Vec<Rat> =
                        basis[a].0.iter().zip(&basis[b].0).map(|(x, y)| x * y).collect();
                    let m = mat_mul(&basis[a].1, &basis[b].1);
                    next.push((v, m));
                }
            }
            basis = reduce_pairs(algebra.prime, next, rank)?;
        }
        Ok(RModule { rank, actions, basis_action: basis })
    }

    pub fn from_presentation(
        algebra: &OAlgebra,
        pres: &ModulePresentation,
    ) -> Result<Self, WdlError> {
        let actions = pres
            .actions
            .iter()
            .map(|m| {
                m.iter()
                    .map(|row| row.iter().map(|&x| Rat::from(BigInt::from(x))).collect())
                    .collect()
            })
            .collect();
        RModule::new(algebra, pres.rank, actions)
    }

    /// The regular module: R acting on itself, in the computed basis.
    pub fn regular(algebra: &OAlgebra) -> Result<Self, WdlError> {
        let rank = algebra.num_augmentations;
        let basis_rat: Vec<Vec<Rat>> = algebra
            .basis
            .iter()
            .map(|b| b.iter().map(|x| Rat::from(x.clone())).collect())
            .collect();
        let actions = algebra
            .generators
            .iter()
            .map(|g| {
                let g_rat: Vec<Rat> = g.iter().map(|x| Rat::from(x.clone())).collect();
                multiplication_matrix(algebra.prime, &basis_rat, &g_rat)
            })
            .collect::<Result<Vec<_>, _>>()?;
        RModule::new(algebra, rank, actions)
    }

    /// The principal-ideal module a·R, for a ∈ R ⊗ Q given in coordinates.
    pub fn principal_ideal(algebra: &OAlgebra, a: &[Rat]) -> Result<Self, WdlError> {
        let r = algebra.num_augmentations;
        let gens: Vec<Vec<Rat>> = algebra
            .basis
            .iter()
            .map(|b| (0..r).map(|j| &a[j] * Rat::from(b[j].clone())).collect())
            .collect();
        let basis = rational_basis(algebra.prime, &gens)?;
        if basis.is_empty() {
            return Err(WdlError::InvalidModule("zero ideal".into()));
        }
        let rank = basis.len();
        let actions = algebra
            .generators
            .iter()
            .map(|g| {
                let g_rat: Vec<Rat> = g.iter().map(|x| Rat::from(x.clone())).collect();
                multiplication_matrix(algebra.prime, &basis, &g_rat)
            })
            .collect::<Result<Vec<_>, _>>()?;
        RModule::new(algebra, rank, actions)
    }

    /// The O-dual module M*, realized by transposing the actions.
    pub fn dual(&self, algebra: &OAlgebra) -> Result<Self, WdlError> {
        let actions = self
            .actions
            .iter()
            .map(|m| {
                (0..self.rank)
                    .map(|i| (0..self.rank).map(|j| m[j][i].clone()).collect())
                    .collect()
            })
            .collect();
        RModule::new(algebra, self.rank, actions)
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(&self, algebra: &OAlgebra, other: &RModule) -> Result<Self, WdlError> {
        let n = self.rank + other.rank;
        let actions = self
            .actions
            .iter()
            .zip(&other.actions)
            .map(|(a, b)| {
                let mut m = vec![vec![Rat::zero(); n]; n];
                for i in 0..self.rank {
                    for j in 0..self.rank {
                        m[i][j] = a[i][j].clone();
                    }
                }
                for i in 0..other.rank {
                    for j in 0..other.rank {
                        m[self.rank + i][self.rank + j] = b[i][j].clone();
                    }
                }
                m
            })
            .collect();
        RModule::new(algebra, n, actions)
    }

    /// Action matrix of an arbitrary element of R ⊗ Q given in coordinates.
    pub fn action_of(&self, x: &[Rat]) -> Result<Vec<Vec<Rat>>, WdlError> {
        let mut rem: Vec<Rat> = x.to_vec();
        let mut acc = vec![vec![Rat::zero(); self.rank]; self.rank];
        for (v, m) in &self.basis_action {
            let Some(lead) = v.iter().position(|c| !c.is_zero()) else { continue };
            if rem[lead].is_zero() {
                continue;
            }
            let c = &rem[lead] / &v[lead];
            for j in 0..rem.len() {
                let s = &c * &v[j];
                rem[j] = &rem[j] - &s;
            }
            for i in 0..self.rank {
                for j in 0..self.rank {
                    let s = &c * &m[i][j];
                    acc[i][j] = &acc[i][j] + &s;
                }
            }
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return Err(WdlError::InvalidModule(
                "element does not lie in the algebra".into(),
            ));
        }
        Ok(acc)
    }
}

/// Reduces (element, matrix) pairs to echelon form in the element part;
/// pairs whose element cancels must have cancelling matrices.
fn reduce_pairs(
    p: u64,
    pairs: Vec<(Vec<Rat>, Vec<Vec<Rat>>)>,
    rank: usize,
) -> Result<Vec<(Vec<Rat>, Vec<Vec<Rat>>)>, WdlError> {
    let r = pairs.first().map(|(v, _)| v.len()).unwrap_or(0);
    let mut rows = pairs;
    let mut out: Vec<(Vec<Rat>, Vec<Vec<Rat>>)> = Vec::new();
    for col in 0..r {
        // minimal-valuation pivot among remaining rows
        let mut best: Option<(usize, i64)> = None;
        for (idx, (v, _)) in rows.iter().enumerate() {
            if v[col].is_zero() {
                continue;
            }
            let val = rat_val(p, &v[col]);
            if best.map(|(_, bv)| val < bv).unwrap_or(true) {
                best = Some((idx, val));
            }
        }
        let Some((idx, _)) = best else { continue };
        let pivot_pair = rows.swap_remove(idx);
        let pivot = pivot_pair.0[col].clone();
        for (v, m) in rows.iter_mut() {
            if v[col].is_zero() {
                continue;
            }
            let c = &v[col] / &pivot;
            for j in 0..r {
                let s = &c * &pivot_pair.0[j];
                v[j] = &v[j] - &s;
            }
            for i in 0..rank {
                for j in 0..rank {
                    let s = &c * &pivot_pair.1[i][j];
                    m[i][j] = &m[i][j] - &s;
                }
            }
        }
        out.push(pivot_pair);
    }
    for (v, m) in rows {
        debug_assert!(v.iter().all(|x| x.is_zero()));
        if !mat_is_zero(&m) {
            return Err(WdlError::InvalidModule(
                "a relation of the algebra does not vanish on the action matrices".into(),
            ));
        }
    }
    Ok(out)
}

fn rat_val(p: u64, x: &Rat) -> i64 {
    let vn = match vp_unchecked(p, x.numer()) {
        PAdicVal::Finite(v) => v as i64,
        PAdicVal::Infinity => i64::MAX / 2,
    };
    let vd = match vp_unchecked(p, x.denom()) {
        PAdicVal::Finite(v) => v as i64,
        PAdicVal::Infinity => unreachable!("denominator is nonzero"),
    };
    vn - vd
}

/// Echelon basis of the Z_(p)-span of rational rows.
fn rational_basis(p: u64, rows: &[Vec<Rat>]) -> Result<Vec<Vec<Rat>>, WdlError> {
    let width = rows.first().map(|r| r.len()).unwrap_or(0);
    let lat = PLattice::from_rational_rows(p, width, rows)?;
    let b = plattice::basis_rows(&lat)?;
    Ok(b.into_iter()
        .map(|row| row.into_iter().map(Rat::from).collect())
        .collect())
}

/// Matrix of multiplication by g on the lattice spanned by echelon `basis`.
fn multiplication_matrix(
    p: u64,
    basis: &[Vec<Rat>],
    g: &[Rat],
) -> Result<Vec<Vec<Rat>>, WdlError> {
    let mut rows = Vec::with_capacity(basis.len());
    for b in basis {
        let prod: Vec<Rat> = b.iter().zip(g).map(|(x, y)| x * y).collect();
        rows.push(express_in_basis(p, basis, &prod)?);
    }
    Ok(rows)
}

fn express_in_basis(p: u64, basis: &[Vec<Rat>], v: &[Rat]) -> Result<Vec<Rat>, WdlError> {
    // forward substitution against echelon rows
    let mut rem = v.to_vec();
    let mut coeffs = vec![Rat::zero(); basis.len()];
    for (i, b) in basis.iter().enumerate() {
        let Some(lead) = b.iter().position(|c| !c.is_zero()) else { continue };
        if rem[lead].is_zero() {
            continue;
        }
        let c = &rem[lead] / &b[lead];
        for j in 0..rem.len() {
            let s = &c * &b[j];
            rem[j] = &rem[j] - &s;
        }
        coeffs[i] = c;
    }
    if rem.iter().any(|c| !c.is_zero()) {
        return Err(WdlError::InvalidModule("product left the module lattice".into()));
    }
    if coeffs.iter().any(|c| !c.is_zero() && rat_val(p, c) < 0) {
        return Err(WdlError::InvalidModule(
            "product is not p-integral on the lattice".into(),
        ));
    }
    Ok(coeffs)
}

/// M[ker λ_i] (or M*[ker λ_i] with `transpose`) as a saturated lattice.
fn eigen_lattice(
    algebra: &OAlgebra,
    module: &RModule,
    i: usize,
    transpose: bool,
) -> Result<PLattice, WdlError> {
    algebra.check_index(i)?;
    let n = module.rank;
    let p = algebra.prime;
    // stack (A_g − λ_i(g)·I) horizontally and take the left kernel; scaling a
    // column by a p-unit does not change the kernel, so denominators are
    // cleared column-wise
    let mut cols: Vec<Vec<Rat>> = Vec::new();
    for (g_idx, act) in module.actions.iter().enumerate() {
        let lam = Rat::from(algebra.lambda_of_generator(g_idx, i));
        for col in 0..n {
            let mut column = Vec::with_capacity(n);
            for row in 0..n {
                let (a, b) = if transpose { (col, row) } else { (row, col) };
                let mut entry = act[a][b].clone();
                if row == col {
                    entry -= lam.clone();
                }
                column.push(entry);
            }
            cols.push(column);
        }
    }
    let mut stacked: Vec<Vec<BigInt>> = vec![Vec::new(); n];
    for column in &cols {
        let mut l: BigInt = One::one();
        for x in column {
            l = num_integer::Integer::lcm(&l, x.denom());
        }
        if vp_unchecked(p, &l) != PAdicVal::Finite(0) {
            return Err(WdlError::InvalidModule(
                "action matrix denominators are not p-units".into(),
            ));
        }
        for (row, x) in column.iter().enumerate() {
            stacked[row].push(x.numer() * (&l / x.denom()));
        }
    }
    if algebra.generators.is_empty() {
        for row in stacked.iter_mut() {
            row.push(BigInt::zero());
        }
    }
    plattice::kernel(&stacked, p)
}

/// ℓ_O(Ψ_λ(M)) = v_p det(⟨f_a, x_b⟩) over bases of M[ker λ] and M*[ker λ].
pub fn module_congruence_length(
    algebra: &OAlgebra,
    module: &RModule,
    i: usize,
) -> Result<PAdicVal, WdlError> {
    let x = eigen_lattice(algebra, module, i, false)?;
    let f = eigen_lattice(algebra, module, i, true)?;
    let d = plattice::rank(&x);
    if d == 0 {
        return Err(WdlError::LambdaRankZero);
    }
    if plattice::rank(&f) != d {
        return Err(WdlError::Internal("λ-ranks of M and M* differ".into()));
    }
    let gram: Vec<Vec<BigInt>> = f
        .gens
        .iter()
        .map(|fa| {
            x.gens
                .iter()
                .map(|xb| fa.iter().zip(xb).map(|(u, v)| u * v).sum())
                .collect()
        })
        .collect();
    let det = plattice::det_of(&gram);
    if det.is_zero() {
        return Err(WdlError::ZeroCongruenceDeterminant);
    }
    Ok(vp_unchecked(algebra.prime, &det))
}

/// λ-rank of a module at augmentation i.
pub fn lambda_rank(algebra: &OAlgebra, module: &RModule, i: usize) -> Result<usize, WdlError> {
    Ok(plattice::rank(&eigen_lattice(algebra, module, i, false)?))
}

/// Everything the defect computation produces for one augmentation.
#[derive(Debug, Clone)]
pub struct DefectReport {
    pub phi_length: PAdicVal,
    pub psi_length: PAdicVal,
    pub lambda_rank: usize,
    /// δ = (d·ℓΦ − ℓΨ)/d; e = 1 for unramified coefficients.
    pub defect: Rat,
    /// Rank of M at each generic point of R (dimension of the coordinate
    /// eigencomponent of M ⊗ Q).
    pub generic_ranks: Vec<usize>,
    /// Whether all generic ranks are ≤ d, the hypothesis under which the
    /// defect is guaranteed nonnegative. Reported, never enforced.
    pub rank_hypothesis_ok: bool,
}

/// Wiles defect of R itself at λ_i (d = 1).
pub fn wiles_defect(r: &OAlgebra, i: usize) -> Result<DefectReport, WdlError> {
    let phi = cotangent_length(r, i)?;
    let psi = algebra_congruence_length(r, i)?;
    let defect = Rat::from(BigInt::from(phi.finite() as i64 - psi.finite() as i64));
    Ok(DefectReport {
        phi_length: phi,
        psi_length: psi,
        lambda_rank: 1,
        defect,
        generic_ranks: vec![1; r.num_augmentations],
        rank_hypothesis_ok: true,
    })
}

/// Wiles defect of a reflexive module M at λ_i.
pub fn wiles_defect_module(
    algebra: &OAlgebra,
    module: &RModule,
    i: usize,
) -> Result<DefectReport, WdlError> {
    let phi = cotangent_length(algebra, i)?;
    let psi = module_congruence_length(algebra, module, i)?;
    let d = lambda_rank(algebra, module, i)?;
    let defect = Rat::new(
        BigInt::from(d as i64) * BigInt::from(phi.finite() as i64)
            - BigInt::from(psi.finite() as i64),
        BigInt::from(d as i64),
    );
    let ranks = generic_ranks(algebra, module)?;
    let rank_hypothesis_ok = ranks.iter().all(|&g| g <= d);
    Ok(DefectReport {
        phi_length: phi,
        psi_length: psi,
        lambda_rank: d,
        defect,
        generic_ranks: ranks,
        rank_hypothesis_ok,
    })
}

/// Dimensions of the coordinate eigencomponents e_j·(M ⊗ Q).
fn generic_ranks(algebra: &OAlgebra, module: &RModule) -> Result<Vec<usize>, WdlError> {
    let r = algebra.num_augmentations;
    let mut out = Vec::with_capacity(r);
    for j in 0..r {
        let e_j: Vec<Rat> = (0..r)
            .map(|c| if c == j { Rat::one() } else { Rat::zero() })
            .collect();
        let m = module.action_of(&e_j)?;
        let rows: Vec<Vec<Rat>> = m;
        let lat = PLattice::from_rational_rows(algebra.prime, module.rank, &rows);
        match lat {
            Ok(l) => out.push(plattice::rank(&l)),
            Err(_) => {
                // denominators with p-valuation cannot occur for idempotents
                // of an algebra with integral basis, but rank over Q is still
                // well-defined; scale rows individually
                let scaled: Vec<Vec<Rat>> = rows
                    .iter()
                    .map(|row| {
                        let mut l: BigInt = One::one();
                        for x in row {
                            l = num_integer::Integer::lcm(&l, x.denom());
                        }
                        row.iter().map(|x| x * Rat::from(l.clone())).collect()
                    })
                    .collect();
                let l = PLattice::from_rational_rows(algebra.prime, module.rank, &scaled)?;
                out.push(plattice::rank(&l));
            }
        }
    }
    Ok(out)
}

/// The subalgebra of R̃ generated by the annihilator generators α_1, …, α_r.
/// Its congruence lengths agree with those of R̃ at every augmentation even
/// though the endomorphism map need not be surjective.
pub fn build_remark_subalgebra(rtilde: &OAlgebra) -> Result<OAlgebra, WdlError> {
    let r = rtilde.num_augmentations;
    let mut alphas = Vec::with_capacity(r);
    for i in 0..r {
        alphas.push(rtilde.annihilator_generator(i)?);
    }
    OAlgebra::new(rtilde.prime, r, alphas)
}
