//! Literal finite-ring arithmetic in (Z/p^N)^r: subgroup sizes and kernels
//! via echelon forms with shadow rows (Howell-style), all in u128 modular
//! arithmetic. Deliberately independent of the library's rational-arithmetic
//! path; used to re-derive cotangent, congruence and module lengths by
//! counting.

/// The ring Z/p^N with p^N comfortably inside u128 multiplication.
#[derive(Debug, Clone, Copy)]
pub struct ModPn {
    pub p: u64,
    pub n: u32,
    pub q: u128,
}

impl ModPn {
    pub fn new(p: u64, n: u32) -> Self {
        let q = (p as u128).pow(n);
        assert!(q < (1u128 << 63), "p^N too large for the oracle");
        ModPn { p, n, q }
    }

    pub fn reduce_i128(&self, x: i128) -> u128 {
        x.rem_euclid(self.q as i128) as u128
    }

    pub fn val(&self, x: u128) -> u32 {
        if x % self.q == 0 {
            return self.n;
        }
        let mut v = 0;
        let mut x = x % self.q;
        while x % self.p as u128 == 0 {
            x /= self.p as u128;
            v += 1;
        }
        v
    }

    fn pow(&self, mut b: u128, mut e: u128) -> u128 {
        let mut acc = 1u128;
        b %= self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % self.q;
            }
            b = b * b % self.q;
            e >>= 1;
        }
        acc
    }

    /// Inverse of a unit, via Euler's theorem.
    pub fn inv_unit(&self, x: u128) -> u128 {
        assert_eq!(self.val(x), 0, "not a unit");
        let phi = self.q / self.p as u128 * (self.p as u128 - 1);
        self.pow(x, phi - 1)
    }

    /// Echelon-with-shadows form. Returns rows with strictly increasing
    /// pivot columns; every span element has a unique representation with
    /// the i-th coefficient in Z/p^(N − v_i).
    pub fn echelon(&self, gens: &[Vec<u128>]) -> Vec<Vec<u128>> {
        let width = gens.first().map(|r| r.len()).unwrap_or(0);
        let mut work: Vec<Vec<u128>> = gens
            .iter()
            .map(|r| r.iter().map(|&x| x % self.q).collect())
            .collect();
        let mut placed: Vec<Vec<u128>> = Vec::new();
        for col in 0..width {
            let mut best: Option<(usize, u32)> = None;
            for (i, row) in work.iter().enumerate() {
                let v = self.val(row[col]);
                if v < self.n && best.map(|(_, bv)| v < bv).unwrap_or(true) {
                    best = Some((i, v));
                }
            }
            let Some((idx, v)) = best else { continue };
            let pivot_row = work.swap_remove(idx);
            let pivot = pivot_row[col];
            // pivot = p^v * unit; eliminate the column in the remaining rows
            let unit = pivot / (self.p as u128).pow(v);
            let unit_inv = self.inv_unit(unit % self.q);
            for row in work.iter_mut() {
                let w = self.val(row[col]);
                if w >= self.n {
                    continue;
                }
                debug_assert!(w >= v);
                let coeff = row[col] / (self.p as u128).pow(v) % self.q * unit_inv % self.q;
                for j in 0..width {
                    let sub = coeff * pivot_row[j] % self.q;
                    row[j] = (row[j] + self.q - sub) % self.q;
                }
            }
            // shadow: p^(N−v) · pivot_row re-enters the working set
            if v > 0 {
                let scale = (self.p as u128).pow(self.n - v);
                let shadow: Vec<u128> =
                    pivot_row.iter().map(|&x| x * scale % self.q).collect();
                if shadow.iter().any(|&x| x != 0) {
                    work.push(shadow);
                }
            }
            placed.push(pivot_row);
        }
        placed
    }

    /// log_p of the size of the subgroup generated by `gens`.
    pub fn size_exp(&self, gens: &[Vec<u128>]) -> u64 {
        self.echelon(gens)
            .iter()
            .map(|row| {
                let col = row.iter().position(|&x| x % self.q != 0).unwrap();
                (self.n - self.val(row[col])) as u64
            })
            .sum()
    }

    /// Generators of { x : x·C ≡ 0 mod p^N }, via the echelon form of [C | I].
    pub fn left_kernel(&self, c: &[Vec<u128>]) -> Vec<Vec<u128>> {
        let m = c.len();
        let width = c.first().map(|r| r.len()).unwrap_or(0);
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(m);
        for (i, r) in c.iter().enumerate() {
            let mut row: Vec<u128> = r.iter().map(|&x| x % self.q).collect();
            for j in 0..m {
                row.push(if j == i { 1 } else { 0 });
            }
            rows.push(row);
        }
        // echelon on the C-columns only, with shadows
        let mut placed: Vec<Vec<u128>> = Vec::new();
        let mut work = rows;
        for col in 0..width {
            let mut best: Option<(usize, u32)> = None;
            for (i, row) in work.iter().enumerate() {
                let v = self.val(row[col]);
                if v < self.n && best.map(|(_, bv)| v < bv).unwrap_or(true) {
                    best = Some((i, v));
                }
            }
            let Some((idx, v)) = best else { continue };
            let pivot_row = work.swap_remove(idx);
            let pivot = pivot_row[col];
            let unit = pivot / (self.p as u128).pow(v);
            let unit_inv = self.inv_unit(unit % self.q);
            for row in work.iter_mut() {
                let w = self.val(row[col]);
                if w >= self.n {
                    continue;
                }
                let coeff = row[col] / (self.p as u128).pow(v) % self.q * unit_inv % self.q;
                for j in 0..width + m {
                    let sub = coeff * pivot_row[j] % self.q;
                    row[j] = (row[j] + self.q - sub) % self.q;
                }
            }
            if v > 0 {
                let scale = (self.p as u128).pow(self.n - v);
                let shadow: Vec<u128> =
                    pivot_row.iter().map(|&x| x * scale % self.q).collect();
                if shadow[..width].iter().any(|&x| x != 0) || shadow.iter().any(|&x| x != 0) {
                    work.push(shadow);
                }
            }
            placed.push(pivot_row);
        }
        // rows whose C-part vanished carry kernel elements in the I-part
        work.iter()
            .filter(|row| row[..width].iter().all(|&x| x % self.q == 0))
            .map(|row| row[width..].to_vec())
            .collect()
    }

    /// Componentwise product.
    pub fn had(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        a.iter().zip(b).map(|(&x, &y)| x * y % self.q).collect()
    }

    /// Matrix-vector: x (1×m) times rows (m×w).
    pub fn apply(&self, x: &[u128], rows: &[Vec<u128>]) -> Vec<u128> {
        let w = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut out = vec![0u128; w];
        for (xi, row) in x.iter().zip(rows) {
            for j in 0..w {
                out[j] = (out[j] + xi * row[j]) % self.q;
            }
        }
        out
    }
}

#[cfg(test)]
mod self_checks {
    use super::*;
    use std::collections::BTreeSet;

    /// Literal subgroup enumeration by closure.
    fn enumerate(ring: &ModPn, gens: &[Vec<u128>]) -> usize {
        let width = gens.first().map(|r| r.len()).unwrap_or(0);
        let mut seen: BTreeSet<Vec<u128>> = BTreeSet::new();
        seen.insert(vec![0; width]);
        let mut frontier: Vec<Vec<u128>> = vec![vec![0; width]];
        while let Some(x) = frontier.pop() {
            for g in gens {
                let y: Vec<u128> =
                    x.iter().zip(g).map(|(&a, &b)| (a + b) % ring.q).collect();
                if seen.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        seen.len()
    }

    #[test]
    fn size_matches_enumeration() {
        let ring = ModPn::new(3, 2);
        let cases: Vec<Vec<Vec<u128>>> = vec![
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![3, 0], vec![0, 3]],
            vec![vec![3, 1]],
            vec![vec![6, 3], vec![3, 6]],
            vec![vec![2, 4], vec![6, 0]],
        ];
        for gens in cases {
            let exp = ring.size_exp(&gens);
            let size = enumerate(&ring, &gens) as u128;
            assert_eq!((3u128).pow(exp as u32), size, "{gens:?}");
        }
    }

    #[test]
    fn kernel_matches_enumeration() {
        let ring = ModPn::new(3, 3);
        let c = vec![vec![3u128, 9], vec![1, 0]];
        let kernel_gens = ring.left_kernel(&c);
        // every generator annihilates C
        for k in &kernel_gens {
            let img = ring.apply(k, &c);
            assert!(img.iter().all(|&x| x % ring.q == 0));
        }
        // the kernel subgroup has the size found by brute force
        let mut brute = 0u32;
        for x0 in 0..ring.q {
            for x1 in 0..ring.q {
                let img = ring.apply(&[x0, x1], &c);
                if img.iter().all(|&v| v % ring.q == 0) {
                    brute += 1;
                }
            }
        }
        assert_eq!((3u128).pow(ring.size_exp(&kernel_gens) as u32), brute as u128);
    }
}
