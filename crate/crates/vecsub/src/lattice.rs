//! Multi-indices, lattice points, dilation cosets and integer-matrix helpers.

use crate::error::{Error, Result};
use crate::scalar::{qi, Q};
use num::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;

/// A point of Z^d.
pub type LatticePoint = Vec<i64>;
/// Square integer matrix, row major.
pub type IntMatrix = Vec<Vec<i64>>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, j: usize) -> Self {
        let mut v = vec![0; d];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// |μ|
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// μ!
    pub fn factorial(&self) -> num::BigInt {
        let mut out = num::BigInt::one();
        for &e in &self.0 {
            for t in 2..=e {
                out *= t;
            }
        }
        out
    }

    pub fn factorial_q(&self) -> Q {
        Q::from_integer(self.factorial())
    }

    /// Componentwise ν ≤ μ.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut v = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            v.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(v))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// binom(μ, ν) = Π binom(μ_j, ν_j); zero unless ν ≤ μ.
    pub fn binom(&self, nu: &MultiIndex) -> u128 {
        let mut out: u128 = 1;
        for (&m, &n) in self.0.iter().zip(&nu.0) {
            if n > m {
                return 0;
            }
            out *= binomial(m as u64, n as u64);
        }
        out
    }

    /// All ν ≤ μ, in graded lexicographic order.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let d = self.dim();
        multiindices_upto(d, self.order())
            .into_iter()
            .filter(|nu| nu.le(self))
            .collect()
    }

    /// x^μ for an integer point.
    pub fn monomial_i64(&self, x: &[i64]) -> Q {
        let mut out = Q::one();
        for (&e, &xi) in self.0.iter().zip(x) {
            if e > 0 {
                out *= num::pow(qi(xi), e as usize);
            }
        }
        out
    }

    /// x^μ for a rational point.
    pub fn monomial_q(&self, x: &[Q]) -> Q {
        let mut out = Q::one();
        for (&e, xi) in self.0.iter().zip(x) {
            if e > 0 {
                out *= num::pow(xi.clone(), e as usize);
            }
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out * (n - i) as u128 / (i + 1) as u128;
    }
    out
}

/// All μ ∈ N_0^d with |μ| = q, graded lex (first coordinate descending).
pub fn enumerate_multiindices(d: usize, q: u32) -> Vec<MultiIndex> {
    assert!(d >= 1, "dimension must be positive");
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fill(&mut out, &mut cur, 0, q);
    out
}

fn fill(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, rest: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = rest;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for first in (0..=rest).rev() {
        cur[pos] = first;
        fill(out, cur, pos + 1, rest - first);
    }
}

/// All μ with |μ| ≤ q in graded lex order.
pub fn multiindices_upto(d: usize, q: u32) -> Vec<MultiIndex> {
    (0..=q).flat_map(|k| enumerate_multiindices(d, k)).collect()
}

/// The ordered index set {μ : |μ| ≤ order} with position lookup.
#[derive(Clone, Debug)]
pub struct IndexTable {
    d: usize,
    order: u32,
    list: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl IndexTable {
    pub fn new(d: usize, order: u32) -> Self {
        let list = multiindices_upto(d, order);
        let lookup = list.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        IndexTable { d, order, list, lookup }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.list
    }

    pub fn position(&self, mu: &MultiIndex) -> Option<usize> {
        self.lookup.get(mu).copied()
    }

    /// Number of indices with |μ| < q.
    pub fn degree_start(&self, q: u32) -> usize {
        self.list.partition_point(|m| m.order() < q)
    }
}

/// Dilation M = m·I_d.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DilationSpec {
    pub m: i64,
    pub d: usize,
}

impl DilationSpec {
    pub fn new(m: i64, d: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Precondition(format!("dilation factor must be at least 2, got {m}")));
        }
        if d < 1 {
            return Err(Error::Precondition("dimension must be at least 1".into()));
        }
        Ok(DilationSpec { m, d })
    }

    /// m^d
    pub fn coset_count(&self) -> usize {
        (self.m as usize).pow(self.d as u32)
    }

    /// m^d as an integer.
    pub fn det(&self) -> i64 {
        self.m.pow(self.d as u32)
    }

    /// The digit set {0,…,m−1}^d, zero first, first coordinate fastest.
    pub fn digits(&self) -> Vec<LatticePoint> {
        let mut out = Vec::with_capacity(self.coset_count());
        let mut cur = vec![0i64; self.d];
        for _ in 0..self.coset_count() {
            out.push(cur.clone());
            for c in cur.iter_mut() {
                *c += 1;
                if *c < self.m {
                    break;
                }
                *c = 0;
            }
        }
        out
    }
}

/// Ω = {γ/m : γ ∈ {0,…,m−1}^d}, zero first.
pub fn omega_set(spec: &DilationSpec) -> Vec<Vec<Q>> {
    let m = qi(spec.m);
    spec.digits()
        .into_iter()
        .map(|g| g.into_iter().map(|c| qi(c) / &m).collect())
        .collect()
}

/// Exact determinant of a small integer matrix.
pub fn int_det(n: &IntMatrix) -> i64 {
    let qm: Vec<Vec<Q>> = n.iter().map(|r| r.iter().map(|&v| qi(v)).collect()).collect();
    let det = crate::linalg::Mat::from_rows(qm).det();
    debug_assert!(det.is_integer());
    det.to_integer().try_into().expect("determinant fits in i64")
}

/// Exact rational inverse of an integer matrix, or `None` if singular.
pub fn int_inverse(n: &IntMatrix) -> Option<Vec<Vec<Q>>> {
    let qm: Vec<Vec<Q>> = n.iter().map(|r| r.iter().map(|&v| qi(v)).collect()).collect();
    crate::linalg::Mat::from_rows(qm).inverse().map(|m| m.to_rows())
}

pub fn int_mat_vec(n: &IntMatrix, x: &[i64]) -> LatticePoint {
    n.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn int_mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let d = a.len();
    (0..d)
        .map(|i| (0..b[0].len()).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn int_transpose(a: &IntMatrix) -> IntMatrix {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn int_identity(d: usize) -> IntMatrix {
    (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn q_mat_vec(n: &[Vec<Q>], x: &[Q]) -> Vec<Q> {
    n.iter()
        .map(|row| row.iter().zip(x).fold(Q::zero(), |acc, (a, b)| acc + a * b))
        .collect()
}

/// Γ_N = N[0,1)^d ∩ Z^d, zero first, rest ordered by reversed-coordinate lex.
pub fn gamma_set(n: &IntMatrix) -> Result<Vec<LatticePoint>> {
    let d = n.len();
    if d == 0 || n.iter().any(|r| r.len() != d) {
        return Err(Error::Precondition("matrix must be square and non-empty".into()));
    }
    let inv = int_inverse(n).ok_or_else(|| Error::Precondition("singular matrix".into()))?;
    // bounding box of the parallelepiped spanned by the columns
    let mut lo = vec![0i64; d];
    let mut hi = vec![0i64; d];
    for i in 0..d {
        for j in 0..d {
            if n[i][j] < 0 {
                lo[i] += n[i][j];
            } else {
                hi[i] += n[i][j];
            }
        }
    }
    let mut out = Vec::new();
    let mut cur = lo.clone();
    loop {
        let x: Vec<Q> = cur.iter().map(|&c| qi(c)).collect();
        let y = q_mat_vec(&inv, &x);
        if y.iter().all(|v| !v.is_negative() && v < &Q::one()) {
            out.push(cur.clone());
        }
        let mut pos = 0;
        loop {
            if pos == d {
                out.sort_by(|a, b| {
                    let za = a.iter().all(|&v| v == 0);
                    let zb = b.iter().all(|&v| v == 0);
                    zb.cmp(&za).then_with(|| a.iter().rev().cmp(b.iter().rev()))
                });
                return Ok(out);
            }
            cur[pos] += 1;
            if cur[pos] <= hi[pos] {
                break;
            }
            cur[pos] = lo[pos];
            pos += 1;
        }
    }
}

/// True iff `a - b ∈ N Z^d`.
pub fn congruent_mod(n_inv: &[Vec<Q>], a: &[i64], b: &[i64]) -> bool {
    let diff: Vec<Q> = a.iter().zip(b).map(|(x, y)| qi(x - y)).collect();
    q_mat_vec(n_inv, &diff).iter().all(|v| v.is_integer())
}

/// Quincunx matrix [[1,1],[1,-1]].
pub fn quincunx() -> IntMatrix {
    vec![vec![1, 1], vec![1, -1]]
}

/// The √3 matrix [[1,-2],[2,-1]].
pub fn sqrt3_matrix() -> IntMatrix {
    vec![vec![1, -2], vec![2, -1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn graded_lex_enumeration() {
        assert_eq!(enumerate_multiindices(2, 0), vec![mi(&[0, 0])]);
        assert_eq!(enumerate_multiindices(2, 2), vec![mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]);
        assert_eq!(enumerate_multiindices(3, 2).len(), 6);
        assert_eq!(enumerate_multiindices(1, 4), vec![mi(&[4])]);
        for d in 1..4 {
            for q in 0..6 {
                assert_eq!(
                    enumerate_multiindices(d, q).len() as u128,
                    binomial((q as usize + d - 1) as u64, (d - 1) as u64)
                );
            }
        }
    }

    #[test]
    fn omega_sets() {
        let s = DilationSpec::new(2, 1).unwrap();
        assert_eq!(omega_set(&s), vec![vec![q(0, 1)], vec![q(1, 2)]]);
        let s = DilationSpec::new(2, 2).unwrap();
        assert_eq!(
            omega_set(&s),
            vec![
                vec![q(0, 1), q(0, 1)],
                vec![q(1, 2), q(0, 1)],
                vec![q(0, 1), q(1, 2)],
                vec![q(1, 2), q(1, 2)]
            ]
        );
        let s = DilationSpec::new(3, 1).unwrap();
        assert_eq!(omega_set(&s), vec![vec![q(0, 1)], vec![q(1, 3)], vec![q(2, 3)]]);
        assert!(DilationSpec::new(1, 2).is_err());
    }

    #[test]
    fn gamma_sets() {
        assert_eq!(gamma_set(&quincunx()).unwrap(), vec![vec![0, 0], vec![1, 0]]);
        assert_eq!(gamma_set(&sqrt3_matrix()).unwrap(), vec![vec![0, 0], vec![-1, 0], vec![0, 1]]);
        assert_eq!(
            gamma_set(&vec![vec![2, 0], vec![0, 2]]).unwrap(),
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]
        );
        assert!(gamma_set(&vec![vec![1, 2], vec![2, 4]]).is_err());
    }

    #[test]
    fn gamma_set_is_a_transversal() {
        for n in [quincunx(), sqrt3_matrix(), vec![vec![3, 1], vec![-1, 2]], vec![vec![2, 1], vec![0, 3]]] {
            let g = gamma_set(&n).unwrap();
            assert_eq!(g.len() as i64, int_det(&n).abs());
            let inv = int_inverse(&n).unwrap();
            for i in 0..g.len() {
                for j in 0..i {
                    assert!(!congruent_mod(&inv, &g[i], &g[j]));
                }
            }
        }
    }

    #[test]
    fn binomial_sum_identity() {
        for mu in multiindices_upto(3, 5) {
            let s: u128 = mu.lower_set().iter().map(|nu| mu.binom(nu)).sum();
            assert_eq!(s, 1u128 << mu.order());
        }
    }

    #[test]
    fn table_positions() {
        let t = IndexTable::new(2, 3);
        assert_eq!(t.len(), 10);
        assert_eq!(t.position(&mi(&[1, 1])), Some(4));
        assert_eq!(t.degree_start(2), 3);
        assert_eq!(t.degree_start(4), 10);
    }
}
