//! Small dense matrices over any scalar backend: elimination, inverses,
//! null spaces, characteristic polynomials and float eigenvalues.

use crate::scalar::{Scalar, C64};
use nalgebra::DMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols.max(1)).map(|c| c.to_vec()).collect()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_negligible())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        out
    }

    pub fn mul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        mat_mul_acc(&mut out.data, &self.data, &other.data, self.rows, self.cols, other.cols);
        out
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: &T) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v.clone() * c.clone()).collect() }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self.get(i, i).clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Mat<U> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// Reduced row echelon form; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            // largest modulus pivot keeps the float path stable; exact path is unaffected
            let mut best = None;
            let mut best_mod = 0.0;
            for i in row..self.rows {
                let v = self.get(i, col);
                if !v.is_negligible() {
                    let md = v.modulus();
                    if best.is_none() || (!T::EXACT && md > best_mod) {
                        best = Some(i);
                        best_mod = md;
                        if T::EXACT {
                            break;
                        }
                    }
                }
            }
            let Some(p) = best else { continue };
            self.swap_rows(row, p);
            let inv = T::one() / self.get(row, col).clone();
            for j in 0..self.cols {
                let v = self.get(row, j).clone() * inv.clone();
                self.set(row, j, v);
            }
            for i in 0..self.rows {
                if i == row {
                    continue;
                }
                let f = self.get(i, col).clone();
                if f.is_negligible() {
                    if !T::EXACT {
                        self.set(i, col, T::zero());
                    }
                    continue;
                }
                for j in 0..self.cols {
                    let v = self.get(i, j).clone() - f.clone() * self.get(row, j).clone();
                    self.set(i, j, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of {x : A x = 0}, each with a 1 in its free coordinate.
    pub fn null_space(&self) -> Vec<Vec<T>> {
        let mut r = self.clone();
        let pivots = r.rref();
        let mut out = Vec::new();
        for free in 0..self.cols {
            if pivots.contains(&free) {
                continue;
            }
            let mut x = vec![T::zero(); self.cols];
            x[free] = T::one();
            for (i, &p) in pivots.iter().enumerate() {
                x[p] = -r.get(i, free).clone();
            }
            out.push(x);
        }
        out
    }

    /// Basis of {y : y A = 0} (row vectors).
    pub fn left_null_space(&self) -> Vec<Vec<T>> {
        self.transpose().null_space()
    }

    pub fn det(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for col in 0..n {
            let mut best = None;
            let mut best_mod = 0.0;
            for i in col..n {
                let v = a.get(i, col);
                if !v.is_negligible() && (best.is_none() || (!T::EXACT && v.modulus() > best_mod)) {
                    best = Some(i);
                    best_mod = v.modulus();
                    if T::EXACT {
                        break;
                    }
                }
            }
            let Some(p) = best else { return T::zero() };
            if p != col {
                a.swap_rows(p, col);
                det = -det;
            }
            let piv = a.get(col, col).clone();
            det = det * piv.clone();
            for i in col + 1..n {
                let f = a.get(i, col).clone() / piv.clone();
                if f.is_negligible() {
                    continue;
                }
                for j in col..n {
                    let v = a.get(i, j).clone() - f.clone() * a.get(col, j).clone();
                    a.set(i, j, v);
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<Mat<T>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Mat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, T::one());
        }
        let piv = aug.rref();
        if piv.len() < n || piv[n - 1] >= n {
            return None;
        }
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, aug.get(i, n + j).clone());
            }
        }
        Some(out)
    }

    /// Solve A X = B; `None` when A is singular or the system inconsistent.
    pub fn solve(&self, b: &Mat<T>) -> Option<Mat<T>> {
        assert_eq!(self.rows, b.rows);
        let n = self.cols;
        let mut aug = Mat::zeros(self.rows, n + b.cols);
        for i in 0..self.rows {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            for j in 0..b.cols {
                aug.set(i, n + j, b.get(i, j).clone());
            }
        }
        let piv = aug.rref();
        if piv.iter().any(|&p| p >= n) || piv.len() < n {
            return None;
        }
        let mut out = Mat::zeros(n, b.cols);
        for (i, &p) in piv.iter().enumerate() {
            for j in 0..b.cols {
                out.set(p, j, aug.get(i, n + j).clone());
            }
        }
        Some(out)
    }

    /// Coefficients (low to high) of det(λI − A), by Faddeev–LeVerrier.
    pub fn char_poly(&self) -> Vec<T> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut coeffs = vec![T::zero(); n + 1];
        coeffs[n] = T::one();
        let mut m = Mat::<T>::zeros(n, n);
        for k in 1..=n {
            let mut next = self.mul(&m);
            for i in 0..n {
                let v = next.get(i, i).clone() + coeffs[n - k + 1].clone();
                next.set(i, i, v);
            }
            let am = self.mul(&next);
            coeffs[n - k] = -(am.trace() / T::from_i64(k as i64));
            m = next;
        }
        coeffs
    }

    /// Eigenvalues as complex floats (Schur decomposition).
    pub fn eigenvalues_c64(&self) -> Vec<C64> {
        let n = self.rows;
        if n == 0 {
            return Vec::new();
        }
        let dm = DMatrix::from_fn(n, n, |i, j| self.get(i, j).to_c64());
        let all_real = dm.iter().all(|z| z.im == 0.0);
        if all_real {
            let real = dm.map(|z| z.re);
            return real.complex_eigenvalues().iter().copied().collect();
        }
        match dm.clone().schur().eigenvalues() {
            Some(v) => v.iter().copied().collect(),
            None => Vec::new(),
        }
    }
}

/// out (r×t) += a (r×s) · b (s×t), all row major.
#[inline]
pub fn mat_mul_acc<T: Scalar>(out: &mut [T], a: &[T], b: &[T], r: usize, s: usize, t: usize) {
    for i in 0..r {
        for k in 0..s {
            let aik = &a[i * s + k];
            if T::EXACT && aik.is_negligible() {
                continue;
            }
            for j in 0..t {
                T::mul_acc(&mut out[i * t + j], aik, &b[k * t + j]);
            }
        }
    }
}

/// Multiplicity of the root x = 1 of a polynomial (coefficients low to high),
/// by repeated synthetic division.
pub fn root_one_multiplicity<T: Scalar>(poly: &[T]) -> usize {
    let mut p: Vec<T> = poly.to_vec();
    while p.len() > 1 && p.last().is_some_and(|c| c.is_negligible()) {
        p.pop();
    }
    let mut mult = 0;
    while p.len() > 1 {
        // evaluate and divide by (x - 1) in one pass
        let n = p.len() - 1;
        let mut q = vec![T::zero(); n];
        let mut acc = p[n].clone();
        for k in (0..n).rev() {
            q[k] = acc.clone();
            acc = acc + p[k].clone();
        }
        let scale = p.iter().map(|c| c.modulus()).fold(1.0, f64::max);
        let zero = if T::EXACT { acc.is_negligible() } else { acc.modulus() <= 1e-9 * scale };
        if !zero {
            break;
        }
        mult += 1;
        p = q;
    }
    mult
}

pub fn poly_eval<T: Scalar>(poly: &[T], x: &T) -> T {
    poly.iter().rev().fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi, Q};

    fn qm(rows: &[&[i64]]) -> Mat<Q> {
        Mat::from_rows(rows.iter().map(|r| r.iter().map(|&v| qi(v)).collect()).collect())
    }

    #[test]
    fn det_and_inverse() {
        let a = qm(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        assert_eq!(a.det(), qi(18));
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Mat::identity(3));
        assert!(qm(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }

    #[test]
    fn null_spaces() {
        let a = qm(&[&[1, 2, 3], &[2, 4, 6]]);
        let ns = a.null_space();
        assert_eq!(ns.len(), 2);
        for v in ns {
            let x = Mat::from_vec(3, 1, v);
            assert!(a.mul(&x).is_zero());
        }
        let l = qm(&[&[1, 1], &[2, 2]]).left_null_space();
        assert_eq!(l, vec![vec![qi(-2), qi(1)]]);
    }

    #[test]
    fn char_poly_and_root_one() {
        let a = Mat::from_rows(vec![vec![qi(1), qi(0)], vec![qi(0), q(1, 2)]]);
        let p = a.char_poly();
        assert_eq!(p, vec![q(1, 2), q(-3, 2), qi(1)]);
        assert_eq!(root_one_multiplicity(&p), 1);
        let p2 = Mat::<Q>::identity(2).char_poly();
        assert_eq!(root_one_multiplicity(&p2), 2);
        let ev = a.eigenvalues_c64();
        let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
        re.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((re[0] - 0.5).abs() < 1e-12 && (re[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_system() {
        let a = qm(&[&[1, 1], &[1, -1]]);
        let b = qm(&[&[3], &[1]]);
        assert_eq!(a.solve(&b).unwrap(), qm(&[&[2], &[1]]));
    }

    #[test]
    fn float_rref_pivoting() {
        let a = Mat::from_rows(vec![vec![1e-12, 1.0], vec![1.0, 1.0]]);
        let x = a.solve(&Mat::from_rows(vec![vec![1.0], vec![2.0]])).unwrap();
        assert!((x.get(0, 0) - 1.0).abs() < 1e-9 && (x.get(1, 0) - 1.0).abs() < 1e-9);
    }
}
