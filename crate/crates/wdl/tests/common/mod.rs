//! Shared test support: the literal mod-p^N counting oracle and random
//! generators for admissible algebras and λ-rank-1 modules.

pub mod modpn;

use modpn::ModPn;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use wdl::congruence::{OAlgebra, RModule};

fn to_modpn_rows(ring: &ModPn, rows: &[Vec<BigInt>]) -> Vec<Vec<u128>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|x| {
                    let m = x % BigInt::from(ring.q);
                    let m = if m.is_negative() { m + BigInt::from(ring.q) } else { m };
                    m.to_u128().unwrap()
                })
                .collect()
        })
        .collect()
}

fn rat_matrix_to_modpn(ring: &ModPn, m: &[Vec<BigRational>]) -> Vec<Vec<u128>> {
    // clear denominators by a common p-unit multiple; the left kernel mod p^N
    // is unchanged under unit scaling
    let mut l: BigInt = BigInt::from(1);
    for row in m {
        for x in row {
            l = num_integer::Integer::lcm(&l, x.denom());
        }
    }
    assert!(
        !(&l % BigInt::from(ring.p)).is_zero(),
        "denominator lcm must be a p-unit"
    );
    let rows: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| row.iter().map(|x| x.numer() * (&l / x.denom())).collect())
        .collect();
    to_modpn_rows(ring, &rows)
}

/// Generators of the finite kernel {x ∈ R_N : x_i ≡ 0} inside (Z/p^N)^r.
fn finite_augmentation_kernel(ring: &ModPn, basis: &[Vec<u128>], i: usize) -> Vec<Vec<u128>> {
    let cond: Vec<Vec<u128>> = basis.iter().map(|b| vec![b[i]]).collect();
    ring.left_kernel(&cond)
        .into_iter()
        .map(|c| ring.apply(&c, basis))
        .collect()
}

/// ℓ(ker λ_i / (ker λ_i)²) by literal subgroup counting mod p^N.
pub fn oracle_cotangent_length(algebra: &OAlgebra, i: usize, n: u32) -> u64 {
    let ring = ModPn::new(algebra.prime, n);
    let basis = to_modpn_rows(&ring, algebra.basis());
    let kernel = finite_augmentation_kernel(&ring, &basis, i);
    let mut squares = Vec::new();
    for a in 0..kernel.len() {
        for b in a..kernel.len() {
            squares.push(ring.had(&kernel[a], &kernel[b]));
        }
    }
    ring.size_exp(&kernel) - ring.size_exp(&squares)
}

/// v_p(λ_i(R[ker λ_i])) by literal annihilator arithmetic mod p^N.
pub fn oracle_eta_length(algebra: &OAlgebra, i: usize, n: u32) -> u64 {
    let ring = ModPn::new(algebra.prime, n);
    let basis = to_modpn_rows(&ring, algebra.basis());
    let kernel = finite_augmentation_kernel(&ring, &basis, i);
    let r = algebra.num_augmentations;
    // variables c; equations (c·B ∘ k)_j ≡ 0 for each kernel generator k
    let mut cond: Vec<Vec<u128>> = vec![Vec::new(); r];
    for k in &kernel {
        for (u, b) in basis.iter().enumerate() {
            for j in 0..r {
                cond[u].push(b[j] * k[j] % ring.q);
            }
        }
    }
    if kernel.is_empty() {
        for row in cond.iter_mut() {
            row.push(0);
        }
    }
    let ann = ring.left_kernel(&cond);
    ann.iter()
        .map(|c| ring.val(ring.apply(c, &basis)[i]) as u64)
        .min()
        .expect("annihilator is never empty")
}

/// ℓ(Ψ_λ(M)) via the quotient description M/(M[ker λ] + M[I_λ]), counted
/// mod p^N.
pub fn oracle_psi_length(algebra: &OAlgebra, module: &RModule, i: usize, n: u32) -> u64 {
    let ring = ModPn::new(algebra.prime, n);
    let rank = module.rank;
    // M[ker λ]: left kernel of the stacked (A_g − λ_i(g)·I)
    let mut stacked: Vec<Vec<BigRational>> = vec![Vec::new(); rank];
    for (g, act) in algebra.generators.iter().zip(&module.actions) {
        let lam = BigRational::from(g[i].clone());
        for (row_idx, row) in stacked.iter_mut().enumerate() {
            for col in 0..rank {
                let mut e = act[row_idx][col].clone();
                if row_idx == col {
                    e -= lam.clone();
                }
                row.push(e);
            }
        }
    }
    if algebra.generators.is_empty() {
        for row in stacked.iter_mut() {
            row.push(BigRational::zero());
        }
    }
    let m_ker = ring.left_kernel(&rat_matrix_to_modpn(&ring, &stacked));
    // M[I_λ]: kernel of the action of the annihilator generator α
    let alpha = algebra.annihilator_generator(i).unwrap();
    let alpha_rat: Vec<BigRational> =
        alpha.iter().map(|x| BigRational::from(x.clone())).collect();
    let alpha_action = module.action_of(&alpha_rat).unwrap();
    let m_i = ring.left_kernel(&rat_matrix_to_modpn(&ring, &alpha_action));
    let mut joined = m_ker;
    joined.extend(m_i);
    rank as u64 * n as u64 - ring.size_exp(&joined)
}

/// A random admissible algebra: entries in [−p³, p³], all coordinates of a
/// generator congruent mod p, with a separating fallback generator appended
/// when the random ones fail distinctness.
pub fn random_admissible<R: Rng>(rng: &mut R, p: u64, max_r: usize) -> OAlgebra {
    let r = rng.gen_range(2..=max_r.max(2));
    let p3 = (p * p) as i64;
    loop {
        let num_gens = rng.gen_range(1..=3);
        let mut gens: Vec<Vec<BigInt>> = Vec::new();
        for _ in 0..num_gens {
            let base = rng.gen_range(0..p) as i64;
            let g: Vec<BigInt> = (0..r)
                .map(|_| BigInt::from(base + p as i64 * rng.gen_range(-p3..=p3)))
                .collect();
            gens.push(g);
        }
        // ensure distinct augmentations without disturbing localness
        let separated = |gens: &[Vec<BigInt>], i: usize, j: usize| {
            gens.iter().any(|g| g[i] != g[j])
        };
        let needs_fix = (0..r).any(|i| (i + 1..r).any(|j| !separated(&gens, i, j)));
        if needs_fix {
            gens.push((0..r).map(|c| BigInt::from(p as i64 * c as i64)).collect());
        }
        if let Ok(alg) = OAlgebra::new(p, r, gens) {
            return alg;
        }
    }
}

/// A random λ-rank-1 module over the algebra: a principal ideal a·R with
/// a_i a p-power times a unit at the chosen augmentation, optionally summed
/// with an ideal of λ-rank 0.
pub fn random_rank_one_module<R: Rng>(
    rng: &mut R,
    algebra: &OAlgebra,
    i: usize,
) -> Option<RModule> {
    let r = algebra.num_augmentations;
    let p = algebra.prime as i64;
    let a: Vec<BigRational> = (0..r)
        .map(|c| {
            let x = if c == i {
                p.pow(rng.gen_range(0..=2)) * [1, -1, 1 + p][rng.gen_range(0..3usize)]
            } else {
                rng.gen_range(-(p * p)..=p * p)
            };
            BigRational::from(BigInt::from(x))
        })
        .collect();
    let main = RModule::principal_ideal(algebra, &a).ok()?;
    if wdl::congruence::lambda_rank(algebra, &main, i).ok()? != 1 {
        return None;
    }
    if rng.gen_bool(0.4) {
        // a rank-0 summand: an ideal vanishing at coordinate i
        let b: Vec<BigRational> = (0..r)
            .map(|c| {
                let x = if c == i { 0 } else { rng.gen_range(1..=p * p) };
                BigRational::from(BigInt::from(x))
            })
            .collect();
        if let Ok(extra) = RModule::principal_ideal(algebra, &b) {
            if let Ok(sum) = main.direct_sum(algebra, &extra) {
                if matches!(wdl::congruence::lambda_rank(algebra, &sum, i), Ok(1)) {
                    return Some(sum);
                }
            }
        }
    }
    Some(main)
}
