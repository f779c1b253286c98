//! Roots of gl(n, R) relative to the diagonal subalgebra, the cosets of the
//! Weyl group modulo the signature stabiliser, and the resulting open orbits
//! of the upper triangular group on symmetric matrices.

use crate::error::{Error, Result};
use crate::group_core::Matrix;

/// The root `alpha_ij(d(t)) = t_i - t_j` with root vector `E_ij`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Root {
    pub i: usize,
    pub j: usize,
    /// Integer coefficients of the functional in the basis `t_1..t_n`.
    pub functional: Vec<i64>,
}

impl Root {
    pub fn is_positive(&self) -> bool {
        self.i < self.j
    }

    pub fn eval(&self, t: &[i64]) -> i64 {
        self.functional.iter().zip(t).map(|(c, v)| c * v).sum()
    }

    pub fn vector(&self, n: usize) -> IntMatrix {
        let mut e = IntMatrix::zeros(n);
        e.set(self.i, self.j, 1);
        e
    }
}

/// Small dense integer matrix for exact bracket checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Self {
        IntMatrix {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn diagonal(t: &[i64]) -> Self {
        let mut m = IntMatrix::zeros(t.len());
        for (i, &v) in t.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let n = self.n;
        let mut out = IntMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn scale(&self, c: i64) -> IntMatrix {
        IntMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        IntMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn is_strictly_upper(&self) -> bool {
        (0..self.n).all(|i| (0..=i).all(|j| self.get(i, j) == 0))
    }
}

pub fn bracket(x: &IntMatrix, y: &IntMatrix) -> IntMatrix {
    x.mul(y).sub(&y.mul(x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootDatum {
    pub n: usize,
    pub roots: Vec<Root>,
    pub positives: Vec<Root>,
}

impl RootDatum {
    /// Max over roots of the bracket residual `[d(t), E_ij] - alpha_ij(t) E_ij`
    /// (always an integer, zero when the identity holds).
    pub fn bracket_residual(&self, t: &[i64]) -> i64 {
        let d = IntMatrix::diagonal(t);
        self.roots
            .iter()
            .map(|r| {
                let e = r.vector(self.n);
                let res = bracket(&d, &e).sub(&e.scale(r.eval(t)));
                res.data.iter().map(|v| v.abs()).max().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// Whether the span of positive root vectors is closed under bracket.
    pub fn positive_span_closed(&self) -> bool {
        for a in &self.positives {
            for b in &self.positives {
                let br = bracket(&a.vector(self.n), &b.vector(self.n));
                if !br.is_strictly_upper() {
                    return false;
                }
                // each nonzero entry must sit on a positive root
                for i in 0..self.n {
                    for j in 0..self.n {
                        if br.get(i, j) != 0 && !self.positives.iter().any(|r| r.i == i && r.j == j)
                        {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

pub fn root_decomposition(n: usize) -> Result<RootDatum> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("root decomposition needs n >= 2, got {n}")));
    }
    let mut roots = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut functional = vec![0; n];
            functional[i] = 1;
            functional[j] = -1;
            roots.push(Root { i, j, functional });
        }
    }
    let positives = roots.iter().filter(|r| r.is_positive()).cloned().collect();
    Ok(RootDatum {
        n,
        roots,
        positives,
    })
}

/// Cosets of `S_n / (S_p x S_{n-p})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylCosetData {
    pub n: usize,
    pub p: usize,
    /// Coset representatives as images `s(0..n)`; `reps[0]` is the identity.
    pub reps: Vec<Vec<usize>>,
    pub count: usize,
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

fn check_signature(n: usize, p: usize) -> Result<()> {
    if p > n {
        return Err(Error::OutOfRange(format!("signature p = {p} exceeds n = {n}")));
    }
    Ok(())
}

/// Canonical coset key: the sorted image of `{0..p-1}`.
fn coset_key(s: &[usize], p: usize) -> Vec<usize> {
    let mut k = s[..p].to_vec();
    k.sort_unstable();
    k
}

pub fn weyl_cosets(n: usize, p: usize) -> Result<WeylCosetData> {
    check_signature(n, p)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut reps = Vec::new();
    for s in permutations(n) {
        if seen.insert(coset_key(&s, p)) {
            reps.push(s);
        }
    }
    let count = reps.len();
    Ok(WeylCosetData { n, p, reps, count })
}

/// `I(p) = diag(I_p, -I_{n-p})`.
pub fn signature_matrix(n: usize, p: usize) -> Result<Matrix> {
    check_signature(n, p)?;
    Ok(Matrix::from_fn(n, n, |i, j| {
        if i != j {
            0.0
        } else if i < p {
            1.0
        } else {
            -1.0
        }
    }))
}

/// Permutation matrix with `P e_j = e_{s(j)}`.
pub fn permutation_matrix(s: &[usize]) -> Matrix {
    let n = s.len();
    let mut m = Matrix::zeros(n, n);
    for (j, &i) in s.iter().enumerate() {
        m[(i, j)] = 1.0;
    }
    m
}

/// The diagonal sign matrices `s I(p) s^T`, one per coset.
pub fn q_orbit_representatives(n: usize, p: usize) -> Result<Vec<Matrix>> {
    let cosets = weyl_cosets(n, p)?;
    let ip = signature_matrix(n, p)?;
    Ok(cosets
        .reps
        .iter()
        .map(|s| {
            let pm = permutation_matrix(s);
            &pm * &ip * pm.transpose()
        })
        .collect())
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_counts() {
        let r2 = root_decomposition(2).unwrap();
        assert_eq!(r2.roots.len(), 2);
        assert_eq!(r2.positives.len(), 1);
        assert_eq!((r2.positives[0].i, r2.positives[0].j), (0, 1));
        let r3 = root_decomposition(3).unwrap();
        assert_eq!(r3.roots.len(), 6);
        assert_eq!(r3.positives.len(), 3);
        assert!(root_decomposition(1).is_err());
    }

    #[test]
    fn bracket_identity_is_exact() {
        for n in 2..=5 {
            let rd = root_decomposition(n).unwrap();
            let t: Vec<i64> = (0..n as i64).map(|k| 3 * k * k - 7 * k + 2).collect();
            assert_eq!(rd.bracket_residual(&t), 0);
            assert!(rd.positive_span_closed());
        }
    }

    #[test]
    fn positive_span_is_strict_upper_triangle() {
        for n in 2..=5 {
            let rd = root_decomposition(n).unwrap();
            let mut from_roots: Vec<(usize, usize)> =
                rd.positives.iter().map(|r| (r.i, r.j)).collect();
            from_roots.sort();
            let mut upper = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    upper.push((i, j));
                }
            }
            assert_eq!(from_roots, upper);
        }
    }

    #[test]
    fn coset_examples() {
        let c = weyl_cosets(3, 1).unwrap();
        assert_eq!(c.count, 3);
        assert_eq!(c.reps[0], vec![0, 1, 2]);
        assert_eq!(weyl_cosets(4, 0).unwrap().count, 1);
        assert_eq!(weyl_cosets(2, 1).unwrap().count, 2);
        assert!(weyl_cosets(2, 3).is_err());
    }

    #[test]
    fn coset_oracle_by_subgroup_orbits() {
        // independent: group permutations by right multiplication with W0
        for (n, p) in [(3, 1), (4, 2), (4, 1), (5, 2)] {
            let perms = permutations(n);
            let w0: Vec<&Vec<usize>> = perms
                .iter()
                .filter(|s| (0..p).all(|i| s[i] < p))
                .collect();
            let mut classes: Vec<Vec<Vec<usize>>> = Vec::new();
            for s in &perms {
                let mut class: Vec<Vec<usize>> =
                    w0.iter().map(|w| w.iter().map(|&k| s[k]).collect()).collect();
                class.sort();
                if !classes.contains(&class) {
                    classes.push(class);
                }
            }
            assert_eq!(classes.len(), weyl_cosets(n, p).unwrap().count);
            assert_eq!(classes.len(), binomial(n, p));
            let reps = weyl_cosets(n, p).unwrap().reps;
            for (a, ra) in reps.iter().enumerate() {
                for rb in reps.iter().skip(a + 1) {
                    assert!(classes.iter().all(|c| !(c.contains(ra) && c.contains(rb))));
                }
            }
        }
    }

    #[test]
    fn representative_examples() {
        let r = q_orbit_representatives(2, 1).unwrap();
        let diags: Vec<Vec<f64>> = r.iter().map(|m| vec![m[(0, 0)], m[(1, 1)]]).collect();
        assert_eq!(diags, vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let r = q_orbit_representatives(3, 3).unwrap();
        assert_eq!(r, vec![Matrix::identity(3, 3)]);
        assert_eq!(q_orbit_representatives(3, 1).unwrap().len(), 3);
    }

    #[test]
    fn representatives_are_distinct_sign_patterns() {
        for n in 1..=6 {
            for p in 0..=n {
                let reps = q_orbit_representatives(n, p).unwrap();
                assert_eq!(reps.len(), binomial(n, p));
                for (a, x) in reps.iter().enumerate() {
                    let pos = (0..n).filter(|&i| x[(i, i)] > 0.0).count();
                    assert_eq!(pos, p);
                    assert!((0..n).all(|i| (0..n).all(|j| i == j || x[(i, j)] == 0.0)));
                    for y in reps.iter().skip(a + 1) {
                        assert_ne!(x, y);
                    }
                }
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(3, 0), 1);
    }
}
