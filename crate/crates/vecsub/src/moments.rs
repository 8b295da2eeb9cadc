//! Fourier jets of filters.
//!
//! All jets are T-normalized: `T_μ(u) = Σ_k u(k) k^μ`, so that
//! `∂^μ û(0) = (−i)^{|μ|} T_μ(u)`. Products, argument scaling and characters
//! keep this normalization, which keeps every order-0 computation rational.

use crate::error::{Error, Result};
use crate::filter::MatrixFilter;
use crate::lattice::{IndexTable, MultiIndex};
use crate::linalg::{mat_mul_acc, Mat};
use crate::scalar::{Scalar, C64, Q};
use num::complex::Complex;
use num::Zero;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct Jet<T> {
    table: Arc<IndexTable>,
    rows: usize,
    cols: usize,
    coeffs: Vec<Vec<T>>,
}

impl<T: Scalar> PartialEq for Jet<T> {
    fn eq(&self, other: &Self) -> bool {
        self.table.dim() == other.table.dim()
            && self.table.order() == other.table.order()
            && self.rows == other.rows
            && self.cols == other.cols
            && self.coeffs == other.coeffs
    }
}

impl<T: Scalar> Jet<T> {
    pub fn zero(d: usize, order: u32, rows: usize, cols: usize) -> Self {
        let table = Arc::new(IndexTable::new(d, order));
        let coeffs = vec![vec![T::zero(); rows * cols]; table.len()];
        Jet { table, rows, cols, coeffs }
    }

    /// The jet of the constant 1 (scalar).
    pub fn one(d: usize, order: u32) -> Self {
        let mut j = Self::zero(d, order, 1, 1);
        j.coeffs[0][0] = T::one();
        j
    }

    /// Jet of a constant matrix.
    pub fn constant(d: usize, order: u32, m: &Mat<T>) -> Self {
        let mut j = Self::zero(d, order, m.rows, m.cols);
        j.coeffs[0] = m.data.clone();
        j
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }
    pub fn order(&self) -> u32 {
        self.table.order()
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn table(&self) -> &IndexTable {
        &self.table
    }
    pub fn indices(&self) -> &[MultiIndex] {
        self.table.indices()
    }

    /// Row-major block T_μ.
    pub fn get(&self, mu: &MultiIndex) -> &[T] {
        let p = self.table.position(mu).unwrap_or_else(|| panic!("multi-index {mu} beyond jet order {}", self.order()));
        &self.coeffs[p]
    }

    pub fn get_mat(&self, mu: &MultiIndex) -> Mat<T> {
        Mat::from_vec(self.rows, self.cols, self.get(mu).to_vec())
    }

    pub fn entry(&self, mu: &MultiIndex, i: usize, j: usize) -> T {
        self.get(mu)[i * self.cols + j].clone()
    }

    pub fn set(&mut self, mu: &MultiIndex, block: Vec<T>) {
        assert_eq!(block.len(), self.rows * self.cols);
        let p = self.table.position(mu).expect("multi-index beyond jet order");
        self.coeffs[p] = block;
    }

    pub fn at(&self, pos: usize) -> &[T] {
        &self.coeffs[pos]
    }

    /// Restrict to |μ| ≤ order.
    pub fn truncate(&self, order: u32) -> Self {
        let order = order.min(self.order());
        let table = Arc::new(IndexTable::new(self.dim(), order));
        let coeffs = self.coeffs[..table.len()].to_vec();
        Jet { table, rows: self.rows, cols: self.cols, coeffs }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Jet<U> {
        Jet {
            table: self.table.clone(),
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|b| b.iter().map(&f).collect()).collect(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols, self.order()), (other.rows, other.cols, other.order()));
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            for (x, y) in a.iter_mut().zip(b) {
                x.add_assign_ref(y);
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-T::one()))
    }

    /// Scalar jet of entry (i, j).
    pub fn entry_jet(&self, i: usize, j: usize) -> Jet<T> {
        Jet {
            table: self.table.clone(),
            rows: 1,
            cols: 1,
            coeffs: self.coeffs.iter().map(|b| vec![b[i * self.cols + j].clone()]).collect(),
        }
    }

    /// Assemble a 1×r row jet from scalar jets.
    pub fn row_from_scalars(parts: &[Jet<T>]) -> Jet<T> {
        let first = &parts[0];
        Jet {
            table: first.table.clone(),
            rows: 1,
            cols: parts.len(),
            coeffs: (0..first.coeffs.len()).map(|p| parts.iter().map(|j| j.coeffs[p][0].clone()).collect()).collect(),
        }
    }

    /// Assemble an r×1 column jet from scalar jets.
    pub fn column_from_scalars(parts: &[Jet<T>]) -> Jet<T> {
        let mut j = Self::row_from_scalars(parts);
        j.rows = parts.len();
        j.cols = 1;
        j
    }

    /// Lowest total degree carrying a non-negligible coefficient.
    pub fn lowest_degree(&self) -> Option<u32> {
        self.table
            .indices()
            .iter()
            .zip(&self.coeffs)
            .find(|(_, b)| b.iter().any(|v| !v.is_negligible()))
            .map(|(m, _)| m.order())
    }

    /// Taylor coefficient of ξ^μ: `(−i)^{|μ|} T_μ / μ!`, as (re, im) pair per entry.
    pub fn taylor_coeff(&self, mu: &MultiIndex) -> Vec<Complex<T>> {
        let fact = T::from_q(&mu.factorial_q());
        self.get(mu)
            .iter()
            .map(|t| {
                let v = t.clone() / fact.clone();
                match mu.order() % 4 {
                    0 => Complex::new(v, T::zero()),
                    1 => Complex::new(T::zero(), -v),
                    2 => Complex::new(-v, T::zero()),
                    _ => Complex::new(T::zero(), v),
                }
            })
            .collect()
    }
}

/// position of μ − e_j for each μ ≠ 0, with that j (first nonzero coordinate).
fn predecessors(table: &IndexTable) -> Vec<(usize, usize)> {
    table
        .indices()
        .iter()
        .map(|mu| {
            if mu.is_zero() {
                return (0, 0);
            }
            let j = mu.0.iter().position(|&e| e > 0).unwrap();
            let mut prev = mu.clone();
            prev.0[j] -= 1;
            (table.position(&prev).unwrap(), j)
        })
        .collect()
}

/// T_μ(u) for all |μ| ≤ order.
pub fn jet_at_zero<T: Scalar>(u: &MatrixFilter<T>, order: u32) -> Jet<T> {
    let mut jet = Jet::zero(u.dim(), order, u.rows(), u.cols());
    let pred = predecessors(&jet.table);
    let n = jet.table.len();
    let mut mono = vec![T::zero(); n];
    for (k, b) in u.iter_nonzero() {
        mono[0] = T::one();
        for i in 1..n {
            let (p, j) = pred[i];
            mono[i] = mono[p].clone() * T::from_i64(k[j]);
        }
        for i in 0..n {
            if T::EXACT && mono[i].is_zero() {
                continue;
            }
            for (c, v) in jet.coeffs[i].iter_mut().zip(b) {
                T::mul_acc(c, &mono[i], v);
            }
        }
    }
    jet
}

/// Leibniz product: T_μ(AB) = Σ_{ν≤μ} binom(μ,ν) T_ν(A) T_{μ−ν}(B).
pub fn jet_product<T: Scalar>(a: &Jet<T>, b: &Jet<T>) -> Result<Jet<T>> {
    if a.cols != b.rows || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "jet product {}x{} · {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let order = a.order().min(b.order());
    let mut out = Jet::zero(a.dim(), order, a.rows, b.cols);
    let (r, s, t) = (a.rows, a.cols, b.cols);
    let idx = out.table.indices().to_vec();
    for (pos, mu) in idx.iter().enumerate() {
        let mut acc = vec![T::zero(); r * t];
        for nu in mu.lower_set() {
            let rest = mu.checked_sub(&nu).unwrap();
            let bn = mu.binom(&nu);
            let av = a.get(&nu);
            let bv = b.get(&rest);
            if T::EXACT && (av.iter().all(|x| x.is_zero()) || bv.iter().all(|x| x.is_zero())) {
                continue;
            }
            let mut tmp = vec![T::zero(); r * t];
            mat_mul_acc(&mut tmp, av, bv, r, s, t);
            let c = T::from_q(&Q::from_integer(bn.into()));
            for (x, y) in acc.iter_mut().zip(tmp) {
                T::mul_acc(x, &c, &y);
            }
        }
        out.coeffs[pos] = acc;
    }
    Ok(out)
}

/// Jet of ξ ↦ f(mξ) from the jet of f: T_μ ↦ m^{|μ|} T_μ.
pub fn jet_scale_argument<T: Scalar>(a: &Jet<T>, m: i64) -> Jet<T> {
    let mut out = a.clone();
    let mt = T::from_i64(m);
    for (mu, block) in a.table.indices().iter().zip(out.coeffs.iter_mut()) {
        let f = mt.pow_u32(mu.order());
        for v in block.iter_mut() {
            *v = v.clone() * f.clone();
        }
    }
    out
}

/// Jet of ξ ↦ e^{−iγ·ξ}: T_μ = γ^μ.
pub fn character_jet<T: Scalar>(gamma: &[Q], order: u32) -> Jet<T> {
    let mut jet = Jet::zero(gamma.len(), order, 1, 1);
    let pred = predecessors(&jet.table);
    jet.coeffs[0][0] = T::one();
    let g: Vec<T> = gamma.iter().map(T::from_q).collect();
    for i in 1..jet.table.len() {
        let (p, j) = pred[i];
        jet.coeffs[i][0] = jet.coeffs[p][0].clone() * g[j].clone();
    }
    jet
}

/// T-normalized jet of û at ξ = 2πω: `Σ_k u(k) k^μ e^{−2πiω·k}`, so that
/// `∂^μ û(2πω) = (−i)^{|μ|}` times the returned coefficient.
pub fn jet_at_frequency<T: Scalar>(u: &MatrixFilter<T>, omega: &[Q], order: u32) -> Jet<C64> {
    let mut jet = Jet::zero(u.dim(), order, u.rows(), u.cols());
    let pred = predecessors(&jet.table);
    let n = jet.table.len();
    let mut mono = vec![0.0f64; n];
    for (k, b) in u.iter_nonzero() {
        // reduce the phase exactly before going to floats
        let ph: Q = omega.iter().zip(&k).fold(Q::zero(), |acc, (w, &kk)| acc + w * Q::from_integer(kk.into()));
        let frac = &ph - ph.floor();
        let theta = -2.0 * PI * crate::scalar::q_to_f64(&frac);
        let phase = C64::new(theta.cos(), theta.sin());
        mono[0] = 1.0;
        for i in 1..n {
            let (p, j) = pred[i];
            mono[i] = mono[p] * k[j] as f64;
        }
        for i in 0..n {
            let f = phase * mono[i];
            for (c, v) in jet.coeffs[i].iter_mut().zip(b) {
                *c += f * v.to_c64();
            }
        }
    }
    jet
}

/// Exact variant of [`jet_at_frequency`] when every phase is ±1 (2ω ∈ Z^d).
pub fn jet_at_frequency_exact<T: Scalar>(u: &MatrixFilter<T>, omega: &[Q], order: u32) -> Option<Jet<T>> {
    let two = Q::from_integer(2.into());
    if !omega.iter().all(|w| (w * &two).is_integer()) {
        return None;
    }
    let twice: Vec<i64> = omega.iter().map(|w| i64::try_from((w * &two).to_integer()).unwrap()).collect();
    let flipped: Vec<_> = u
        .iter_nonzero()
        .map(|(k, b)| {
            let par: i64 = k.iter().zip(&twice).map(|(a, t)| a * t).sum::<i64>().rem_euclid(2);
            let s = if par == 0 { T::one() } else { -T::one() };
            (k, b.iter().map(|v| v.clone() * s.clone()).collect::<Vec<T>>())
        })
        .collect();
    let f = MatrixFilter::from_entries(u.dim(), u.rows(), u.cols(), flipped);
    Some(jet_at_zero(&f, order))
}

/// True iff all coefficients agree for |μ| ≤ through (exact, or 1e−9 relative for floats).
pub fn jets_equal_mod<T: Scalar>(a: &Jet<T>, b: &Jet<T>, through: u32) -> bool {
    first_difference(a, b, through).is_none()
}

/// First μ (graded lex) with |μ| ≤ through where the jets differ.
pub fn first_difference<T: Scalar>(a: &Jet<T>, b: &Jet<T>, through: u32) -> Option<MultiIndex> {
    assert!(a.order() >= through && b.order() >= through, "jet order below comparison order");
    assert_eq!((a.rows, a.cols), (b.rows, b.cols), "jet shapes differ");
    let end = a.table.degree_start(through + 1);
    for p in 0..end {
        let mu = &a.table.indices()[p];
        let x = &a.coeffs[p];
        let y = b.get(mu);
        if x.iter().zip(y).any(|(u, v)| !u.approx_eq(v)) {
            return Some(mu.clone());
        }
    }
    None
}

/// Power-series quotient F/g for a scalar jet g with T_0(g) ≠ 0 (entrywise on F).
pub fn jet_divide<T: Scalar>(f: &Jet<T>, g: &Jet<T>) -> Result<Jet<T>> {
    if g.rows != 1 || g.cols != 1 {
        return Err(Error::DimensionMismatch("divisor must be a scalar jet".into()));
    }
    let g0 = g.coeffs[0][0].clone();
    if g0.is_negligible() {
        return Err(Error::Singular("divisor vanishes at zero".into()));
    }
    let order = f.order().min(g.order());
    let mut h = Jet::zero(f.dim(), order, f.rows, f.cols);
    let idx = h.table.indices().to_vec();
    for (pos, mu) in idx.iter().enumerate() {
        let mut acc: Vec<T> = f.get(mu).to_vec();
        for nu in mu.lower_set() {
            if &nu == mu {
                continue;
            }
            let rest = mu.checked_sub(&nu).unwrap();
            let c = T::from_q(&Q::from_integer(mu.binom(&nu).into())) * g.get(&rest)[0].clone();
            if c.is_negligible() && T::EXACT {
                continue;
            }
            let hv = h.get(&nu).to_vec();
            for (a, v) in acc.iter_mut().zip(hv) {
                *a = a.clone() - c.clone() * v;
            }
        }
        h.coeffs[pos] = acc.into_iter().map(|v| v / g0.clone()).collect();
    }
    Ok(h)
}

/// Jet of ξ ↦ g(Lξ), where L has shape (dim g) × d.
///
/// Works through T-Taylor coefficients t_μ = T_μ/μ!, which transform like
/// ordinary Taylor coefficients because (Lξ)^μ is homogeneous of degree |μ|.
pub fn jet_linear_substitution<T: Scalar>(g: &Jet<T>, l: &[Vec<Q>]) -> Jet<T> {
    let dg = g.dim();
    assert_eq!(l.len(), dg, "substitution matrix rows must match jet dimension");
    let d = l[0].len();
    let order = g.order();
    let table = IndexTable::new(d, order);
    let block = g.rows * g.cols;
    let mut t_out: Vec<Vec<T>> = vec![vec![T::zero(); block]; table.len()];
    // linear forms (Lξ)_i as polynomials
    let forms: Vec<Vec<T>> = (0..dg)
        .map(|i| {
            let mut p = vec![T::zero(); table.len()];
            for j in 0..d {
                p[table.position(&MultiIndex::unit(d, j)).unwrap()] = T::from_q(&l[i][j]);
            }
            p
        })
        .collect();
    let mut one = vec![T::zero(); table.len()];
    one[0] = T::one();
    for mu in g.indices() {
        let coeff = g.get(mu);
        if coeff.iter().all(|v| v.is_negligible()) {
            continue;
        }
        let mut poly = one.clone();
        for (i, &e) in mu.0.iter().enumerate() {
            for _ in 0..e {
                poly = poly_mul(&table, &poly, &forms[i]);
            }
        }
        let fact = T::from_q(&mu.factorial_q());
        for (p, c) in poly.iter().enumerate() {
            if c.is_negligible() {
                continue;
            }
            for (o, v) in t_out[p].iter_mut().zip(coeff) {
                T::mul_acc(o, c, &(v.clone() / fact.clone()));
            }
        }
    }
    let mut out = Jet::zero(d, order, g.rows, g.cols);
    for (p, nu) in table.indices().iter().enumerate() {
        let f = T::from_q(&nu.factorial_q());
        out.coeffs[p] = t_out[p].iter().map(|v| v.clone() * f.clone()).collect();
    }
    out
}

fn poly_mul<T: Scalar>(table: &IndexTable, a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); table.len()];
    let order = table.order();
    for (i, mi) in table.indices().iter().enumerate() {
        if a[i].is_negligible() {
            continue;
        }
        for (j, mj) in table.indices().iter().enumerate() {
            if b[j].is_negligible() || mi.order() + mj.order() > order {
                continue;
            }
            let p = table.position(&mi.add(mj)).unwrap();
            T::mul_acc(&mut out[p], &a[i], &b[j]);
        }
    }
    out
}

/// Jet of the row υ̂ times a column filter's symbol, i.e. the jet of υ ∗ u.
pub fn jet_of_product_with_filter<T: Scalar>(v: &Jet<T>, u: &MatrixFilter<T>) -> Result<Jet<T>> {
    jet_product(v, &jet_at_zero(u, v.order()))
}

/// The exact rational value 1/n! as T.
pub fn inv_factorial<T: Scalar>(mu: &MultiIndex) -> T {
    T::one() / T::from_q(&mu.factorial_q())
}

pub(crate) fn sign_pow<T: Scalar>(k: u32) -> T {
    if k % 2 == 0 {
        T::one()
    } else {
        -T::one()
    }
}

pub fn is_one<T: Scalar>(t: &T) -> bool {
    t.approx_eq(&T::one())
}

impl Jet<Q> {
    pub fn to_c64(&self) -> Jet<C64> {
        self.map(|v| v.to_c64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::difference_delta;
    use crate::scalar::{q, qi};

    fn hat() -> MatrixFilter<Q> {
        MatrixFilter::scalar(1, [(vec![-1], q(1, 4)), (vec![0], q(1, 2)), (vec![1], q(1, 4))])
    }

    fn t(j: &Jet<Q>, mu: &[u32]) -> Q {
        j.get(&MultiIndex(mu.to_vec()))[0].clone()
    }

    #[test]
    fn jets_at_zero() {
        let dj = jet_at_zero(&MatrixFilter::<Q>::delta(2, 1), 3);
        assert_eq!(t(&dj, &[0, 0]), qi(1));
        assert!(dj.indices()[1..].iter().all(|m| dj.get(m)[0].is_zero()));
        let hj = jet_at_zero(&hat(), 2);
        assert_eq!((t(&hj, &[0]), t(&hj, &[1]), t(&hj, &[2])), (qi(1), qi(0), q(1, 2)));
        let nj = jet_at_zero(&difference_delta::<Q>(&MultiIndex(vec![1, 0])), 1);
        assert_eq!(t(&nj, &[1, 0]), qi(-1));
        assert_eq!(t(&nj, &[0, 0]), qi(0));
    }

    #[test]
    fn products_and_scaling() {
        let hj = jet_at_zero(&hat(), 4);
        let one = jet_at_zero(&MatrixFilter::<Q>::delta(1, 1), 4);
        assert_eq!(jet_product(&one, &hj).unwrap(), hj);
        let hh = jet_product(&hj, &hj).unwrap();
        assert_eq!(t(&hh, &[2]), qi(1));
        assert_eq!(hh, jet_at_zero(&hat().convolve(&hat()).unwrap(), 4));
        assert_eq!(jet_scale_argument(&hj, 1), hj);
        assert_eq!(t(&jet_scale_argument(&hj, 2), &[2]), qi(2));
        let c = character_jet::<Q>(&[q(1, 2), q(1, 2)], 3);
        assert_eq!(t(&c, &[1, 1]), q(1, 4));
        assert_eq!(t(&character_jet::<Q>(&[qi(1), qi(0)], 2), &[2, 0]), qi(1));
        let c8 = jet_scale_argument(&c, 2);
        assert_eq!(t(&c8, &[2, 1]), t(&c, &[2, 1]) * qi(8));
    }

    #[test]
    fn frequency_jets() {
        let haar = MatrixFilter::scalar(1, [(vec![0], q(1, 2)), (vec![1], q(1, 2))]);
        let j = jet_at_frequency(&haar, &[q(1, 2)], 2);
        assert!(j.get(&MultiIndex(vec![0]))[0].norm() < 1e-15);
        let hj = jet_at_frequency(&hat(), &[q(1, 2)], 2);
        assert!(hj.get(&MultiIndex(vec![1]))[0].norm() < 1e-15);
        let exact = jet_at_frequency_exact(&hat(), &[q(1, 2)], 3).unwrap();
        for mu in hj.indices() {
            assert!((exact.get(mu)[0].to_c64() - hj.get(mu)[0]).norm() < 1e-14);
        }
        let z = jet_at_frequency(&hat(), &[qi(0)], 3);
        let e = jet_at_zero(&hat(), 3);
        for mu in e.indices() {
            assert!((z.get(mu)[0] - e.get(mu)[0].to_c64()).norm() < 1e-14);
        }
    }

    #[test]
    fn equality_modulo_order() {
        let hj = jet_at_zero(&hat(), 3);
        let dj = jet_at_zero(&MatrixFilter::<Q>::delta(1, 1), 3);
        assert!(jets_equal_mod(&hj, &hj, 3));
        assert!(jets_equal_mod(&hj, &dj, 0));
        assert!(jets_equal_mod(&hj, &dj, 1));
        assert!(!jets_equal_mod(&hj, &dj, 2));
    }

    #[test]
    fn division_inverts_product() {
        let a = jet_at_zero(&hat().shift(&[2]), 5);
        let b = jet_at_zero(&hat(), 5);
        let ab = jet_product(&a, &b).unwrap();
        assert_eq!(jet_divide(&ab, &b).unwrap(), a);
    }

    #[test]
    fn linear_substitution_matches_remapped_filter() {
        // û(Lξ) for integer L is the symbol of k ↦ u summed over L^T-images
        let u = MatrixFilter::scalar(
            2,
            [(vec![0, 0], q(1, 3)), (vec![1, 0], q(1, 5)), (vec![2, -1], q(-2, 7)), (vec![0, 3], qi(1))],
        );
        let l = vec![vec![qi(1), qi(1)], vec![qi(1), qi(-1)]];
        // Σ u(k) e^{−ik·Lξ} = Σ u(k) e^{−i(L^T k)·ξ}
        let moved = u.remap(|k| vec![k[0] + k[1], k[0] - k[1]]);
        let lhs = jet_linear_substitution(&jet_at_zero(&u, 4), &l);
        assert_eq!(lhs, jet_at_zero(&moved, 4));
    }

    #[test]
    fn taylor_coefficients() {
        let hj = jet_at_zero(&hat(), 2);
        let c = hj.taylor_coeff(&MultiIndex(vec![2]));
        assert_eq!(c[0], Complex::new(q(-1, 4), qi(0)));
    }
}
