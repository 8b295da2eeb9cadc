//! Finitely supported matrix-valued filters on Z^d and their sequence algebra.

use crate::config::{support_cap, Exec};
use crate::error::{Error, Result};
use crate::lattice::{DilationSpec, LatticePoint, MultiIndex};
use crate::linalg::{mat_mul_acc, Mat};
use crate::scalar::{Scalar, ScalarKind, C64, Q};
use std::borrow::Cow;
use std::collections::BTreeMap;

/// Inclusive axis-aligned box in Z^d.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxRange {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl BoxRange {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        BoxRange { lo, hi }
    }

    pub fn point(k: &[i64]) -> Self {
        BoxRange { lo: k.to_vec(), hi: k.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l + 1).max(0) as usize).collect()
    }

    pub fn volume(&self) -> usize {
        self.dims().iter().product()
    }

    /// Volume with overflow detection.
    pub fn volume_checked(&self) -> Option<usize> {
        self.dims().iter().try_fold(1usize, |acc, &v| acc.checked_mul(v))
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| l <= x && x <= h)
    }

    pub fn minkowski(&self, other: &BoxRange) -> BoxRange {
        BoxRange {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scaled(&self, m: i64) -> BoxRange {
        let lo: Vec<i64> = self.lo.iter().zip(&self.hi).map(|(l, h)| (l * m).min(h * m)).collect();
        let hi: Vec<i64> = self.lo.iter().zip(&self.hi).map(|(l, h)| (l * m).max(h * m)).collect();
        BoxRange { lo, hi }
    }

    pub fn hull(&self, other: &BoxRange) -> BoxRange {
        BoxRange {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| *a.min(b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| *a.max(b)).collect(),
        }
    }

    /// All points, last coordinate fastest.
    pub fn points(&self) -> Vec<LatticePoint> {
        let n = self.volume();
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return out;
        }
        let d = self.dim();
        let mut cur = self.lo.clone();
        for _ in 0..n {
            out.push(cur.clone());
            for i in (0..d).rev() {
                cur[i] += 1;
                if cur[i] <= self.hi[i] {
                    break;
                }
                cur[i] = self.lo[i];
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
struct Dense<T> {
    bx: BoxRange,
    dims: Vec<usize>,
    strides: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(bx: BoxRange, block: usize) -> Self {
        let dims = bx.dims();
        let strides = strides_of(&dims);
        let n = dims.iter().product::<usize>() * block;
        Dense { bx, dims, strides, data: vec![T::zero(); n] }
    }

    #[inline]
    fn flat(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for i in 0..k.len() {
            let off = k[i] - self.bx.lo[i];
            if off < 0 || off as usize >= self.dims[i] {
                return None;
            }
            idx += off as usize * self.strides[i];
        }
        Some(idx)
    }
}

fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

#[derive(Clone, Debug)]
enum Store<T> {
    Dense(Dense<T>),
    Sparse(BTreeMap<LatticePoint, Vec<T>>),
}

/// A finitely supported map Z^d → r×s matrices.
#[derive(Clone, Debug)]
pub struct MatrixFilter<T> {
    d: usize,
    rows: usize,
    cols: usize,
    store: Store<T>,
}

/// l_p exponent for filter norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormP {
    One,
    Two,
    Inf,
}

impl NormP {
    pub fn as_f64(self) -> f64 {
        match self {
            NormP::One => 1.0,
            NormP::Two => 2.0,
            NormP::Inf => f64::INFINITY,
        }
    }

    /// d/p
    pub fn d_over_p(self, d: usize) -> f64 {
        match self {
            NormP::One => d as f64,
            NormP::Two => d as f64 / 2.0,
            NormP::Inf => 0.0,
        }
    }

    pub fn parse(s: &str) -> Option<NormP> {
        match s.trim() {
            "1" => Some(NormP::One),
            "2" => Some(NormP::Two),
            "inf" | "infty" | "infinity" | "∞" => Some(NormP::Inf),
            _ => None,
        }
    }
}

impl std::fmt::Display for NormP {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormP::One => "1",
            NormP::Two => "2",
            NormP::Inf => "inf",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterNorm {
    pub p: NormP,
    pub value: f64,
}

const DENSE_FILL: f64 = 0.25;

impl<T: Scalar> MatrixFilter<T> {
    pub fn zero(d: usize, rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1 && d >= 1, "filters need d, r, s >= 1");
        MatrixFilter { d, rows, cols, store: Store::Sparse(BTreeMap::new()) }
    }

    /// δ I_r
    pub fn delta(d: usize, r: usize) -> Self {
        let mut m = vec![T::zero(); r * r];
        for i in 0..r {
            m[i * r + i] = T::one();
        }
        Self::from_entries(d, r, r, [(vec![0; d], m)])
    }

    /// δ e_l as an r×1 column (0-based l).
    pub fn delta_col(d: usize, r: usize, l: usize) -> Self {
        let mut m = vec![T::zero(); r];
        m[l] = T::one();
        Self::from_entries(d, r, 1, [(vec![0; d], m)])
    }

    /// δ e_l^T as a 1×r row (0-based l).
    pub fn delta_row(d: usize, r: usize, l: usize) -> Self {
        let mut m = vec![T::zero(); r];
        m[l] = T::one();
        Self::from_entries(d, 1, r, [(vec![0; d], m)])
    }

    /// Scalar filter from (point, value) pairs; duplicates are summed.
    pub fn scalar(d: usize, entries: impl IntoIterator<Item = (LatticePoint, T)>) -> Self {
        Self::from_entries(d, 1, 1, entries.into_iter().map(|(k, v)| (k, vec![v])))
    }

    /// Build from (point, row-major block) pairs; duplicates are summed.
    pub fn from_entries(
        d: usize,
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (LatticePoint, Vec<T>)>,
    ) -> Self {
        let mut map: BTreeMap<LatticePoint, Vec<T>> = BTreeMap::new();
        for (k, m) in entries {
            assert_eq!(k.len(), d, "lattice point has wrong dimension");
            assert_eq!(m.len(), rows * cols, "block has wrong size");
            match map.get_mut(&k) {
                Some(cur) => {
                    for (c, v) in cur.iter_mut().zip(&m) {
                        c.add_assign_ref(v);
                    }
                }
                None => {
                    map.insert(k, m);
                }
            }
        }
        let mut out = MatrixFilter { d, rows, cols, store: Store::Sparse(map) };
        out.normalize();
        out
    }

    /// Assemble an r×s filter from scalar component filters `blocks[i][j]`.
    pub fn from_components(blocks: &[Vec<MatrixFilter<T>>]) -> Self {
        let rows = blocks.len();
        let cols = blocks[0].len();
        let d = blocks[0][0].d;
        let mut map: BTreeMap<LatticePoint, Vec<T>> = BTreeMap::new();
        for (i, row) in blocks.iter().enumerate() {
            assert_eq!(row.len(), cols);
            for (j, b) in row.iter().enumerate() {
                assert!(b.rows == 1 && b.cols == 1 && b.d == d, "components must be scalar filters");
                for (k, v) in b.entries() {
                    let e = map.entry(k).or_insert_with(|| vec![T::zero(); rows * cols]);
                    e[i * cols + j] = v[0].clone();
                }
            }
        }
        let mut out = MatrixFilter { d, rows, cols, store: Store::Sparse(map) };
        out.normalize();
        out
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn kind(&self) -> ScalarKind {
        T::KIND
    }
    fn block(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.store, Store::Dense(_))
    }

    /// Tight bounding box of the nonzero entries; `None` for the zero filter.
    pub fn support(&self) -> Option<BoxRange> {
        match &self.store {
            Store::Dense(dn) => Some(dn.bx.clone()),
            Store::Sparse(map) => {
                let mut it = map.keys();
                let first = it.next()?;
                let mut bx = BoxRange::point(first);
                for k in it {
                    bx = bx.hull(&BoxRange::point(k));
                }
                Some(bx)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.store {
            Store::Dense(dn) => dn.data.iter().all(|v| v.is_zero()),
            Store::Sparse(map) => map.is_empty(),
        }
    }

    /// Number of lattice points carrying a nonzero block.
    pub fn nnz_points(&self) -> usize {
        match &self.store {
            Store::Dense(dn) => dn.data.chunks(self.block()).filter(|b| b.iter().any(|v| !v.is_zero())).count(),
            Store::Sparse(map) => map.len(),
        }
    }

    /// Block at `k` (row-major), if stored.
    pub fn get(&self, k: &[i64]) -> Option<&[T]> {
        match &self.store {
            Store::Dense(dn) => dn.flat(k).map(|i| &dn.data[i * self.block()..(i + 1) * self.block()]),
            Store::Sparse(map) => map.get(k).map(|v| v.as_slice()),
        }
    }

    /// Entry (i, j) at `k`, zero when absent.
    pub fn entry(&self, k: &[i64], i: usize, j: usize) -> T {
        self.get(k).map_or_else(T::zero, |b| b[i * self.cols + j].clone())
    }

    pub fn matrix_at(&self, k: &[i64]) -> Mat<T> {
        match self.get(k) {
            Some(b) => Mat::from_vec(self.rows, self.cols, b.to_vec()),
            None => Mat::zeros(self.rows, self.cols),
        }
    }

    /// Nonzero (point, block) pairs in lexicographic point order.
    pub fn entries(&self) -> Vec<(LatticePoint, Vec<T>)> {
        self.iter_nonzero().map(|(k, b)| (k, b.to_vec())).collect()
    }

    pub fn iter_nonzero(&self) -> Box<dyn Iterator<Item = (LatticePoint, &[T])> + '_> {
        let block = self.block();
        match &self.store {
            Store::Dense(dn) => {
                let pts = dn.bx.points();
                Box::new(
                    pts.into_iter()
                        .zip(dn.data.chunks(block))
                        .filter(|(_, b)| b.iter().any(|v| !v.is_zero())),
                )
            }
            Store::Sparse(map) => Box::new(map.iter().map(|(k, v)| (k.clone(), v.as_slice()))),
        }
    }

    /// Sum of all coefficients, i.e. the symbol at ξ = 0.
    pub fn symbol_at_zero(&self) -> Mat<T> {
        let mut out = Mat::<T>::zeros(self.rows, self.cols);
        for (_, b) in self.iter_nonzero() {
            for (o, v) in out.data.iter_mut().zip(b) {
                o.add_assign_ref(v);
            }
        }
        out
    }

    fn normalize(&mut self) {
        let block = self.block();
        let d = self.d;
        let store = std::mem::replace(&mut self.store, Store::Sparse(BTreeMap::new()));
        let map: BTreeMap<LatticePoint, Vec<T>> = match store {
            Store::Sparse(map) => map.into_iter().filter(|(_, b)| b.iter().any(|v| !v.is_zero())).collect(),
            Store::Dense(dn) => {
                // decide directly from the dense data to avoid building a map for dense results
                let mut lo = vec![i64::MAX; d];
                let mut hi = vec![i64::MIN; d];
                let mut count = 0usize;
                let dims = dn.dims.clone();
                let mut cur = vec![0usize; d];
                for b in dn.data.chunks(block) {
                    if b.iter().any(|v| !v.is_zero()) {
                        count += 1;
                        for i in 0..d {
                            let c = dn.bx.lo[i] + cur[i] as i64;
                            lo[i] = lo[i].min(c);
                            hi[i] = hi[i].max(c);
                        }
                    }
                    for i in (0..d).rev() {
                        cur[i] += 1;
                        if cur[i] < dims[i] {
                            break;
                        }
                        cur[i] = 0;
                    }
                }
                if count == 0 {
                    self.store = Store::Sparse(BTreeMap::new());
                    return;
                }
                let tight = BoxRange::new(lo, hi);
                let vol = tight.volume();
                if count as f64 > DENSE_FILL * vol as f64 {
                    if tight == dn.bx {
                        self.store = Store::Dense(dn);
                    } else {
                        let mut nd = Dense::zeros(tight.clone(), block);
                        for (i, k) in tight.points().into_iter().enumerate() {
                            let src = dn.flat(&k).unwrap();
                            nd.data[i * block..(i + 1) * block].clone_from_slice(&dn.data[src * block..(src + 1) * block]);
                        }
                        self.store = Store::Dense(nd);
                    }
                    return;
                }
                dn.bx
                    .points()
                    .into_iter()
                    .zip(dn.data.chunks(block))
                    .filter(|(_, b)| b.iter().any(|v| !v.is_zero()))
                    .map(|(k, b)| (k, b.to_vec()))
                    .collect()
            }
        };
        if map.is_empty() {
            self.store = Store::Sparse(map);
            return;
        }
        let mut bx = BoxRange::point(map.keys().next().unwrap());
        for k in map.keys() {
            bx = bx.hull(&BoxRange::point(k));
        }
        let vol = bx.volume_checked().unwrap_or(usize::MAX);
        if (map.len() as f64) > DENSE_FILL * vol as f64 {
            let mut dn = Dense::zeros(bx, block);
            for (k, b) in map {
                let i = dn.flat(&k).unwrap();
                dn.data[i * block..(i + 1) * block].clone_from_slice(&b);
            }
            self.store = Store::Dense(dn);
        } else {
            self.store = Store::Sparse(map);
        }
    }

    fn dense_view(&self) -> Option<Cow<'_, Dense<T>>> {
        match &self.store {
            Store::Dense(dn) => Some(Cow::Borrowed(dn)),
            Store::Sparse(map) => {
                let bx = self.support()?;
                let mut dn = Dense::zeros(bx, self.block());
                let block = self.block();
                for (k, b) in map {
                    let i = dn.flat(k).unwrap();
                    dn.data[i * block..(i + 1) * block].clone_from_slice(b);
                }
                Some(Cow::Owned(dn))
            }
        }
    }

    fn from_dense(d: usize, rows: usize, cols: usize, dn: Dense<T>) -> Self {
        let mut out = MatrixFilter { d, rows, cols, store: Store::Dense(dn) };
        out.normalize();
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MatrixFilter<U> {
        MatrixFilter::from_entries(
            self.d,
            self.rows,
            self.cols,
            self.iter_nonzero().map(|(k, b)| (k, b.iter().map(&f).collect())),
        )
    }

    pub fn to_c64(&self) -> MatrixFilter<C64> {
        self.map(|v| v.to_c64())
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self::from_entries(self.d, self.rows, self.cols, self.entries().into_iter().chain(other.entries())))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.d != other.d || self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} filter on Z^{} vs {}x{} filter on Z^{}",
                self.rows, self.cols, self.d, other.rows, other.cols, other.d
            )));
        }
        Ok(())
    }

    /// Entrywise equality at backend precision.
    pub fn approx_eq(&self, other: &Self) -> bool {
        if self.check_same_shape(other).is_err() {
            return false;
        }
        match self.sub(other) {
            Ok(diff) => diff.iter_nonzero().all(|(_, b)| b.iter().all(|v| v.is_negligible())),
            Err(_) => false,
        }
    }

    pub fn transpose(&self) -> Self {
        let (r, s) = (self.rows, self.cols);
        MatrixFilter::from_entries(
            self.d,
            s,
            r,
            self.iter_nonzero().map(|(k, b)| {
                let mut t = vec![T::zero(); r * s];
                for i in 0..r {
                    for j in 0..s {
                        t[j * r + i] = b[i * s + j].clone();
                    }
                }
                (k, t)
            }),
        )
    }

    /// Scalar component (i, j).
    pub fn component(&self, i: usize, j: usize) -> Self {
        let s = self.cols;
        MatrixFilter::from_entries(self.d, 1, 1, self.iter_nonzero().map(|(k, b)| (k, vec![b[i * s + j].clone()])))
    }

    /// Column j as an r×1 filter.
    pub fn column(&self, j: usize) -> Self {
        let (r, s) = (self.rows, self.cols);
        MatrixFilter::from_entries(self.d, r, 1, self.iter_nonzero().map(|(k, b)| (k, (0..r).map(|i| b[i * s + j].clone()).collect())))
    }

    /// Row i as a 1×s filter.
    pub fn row(&self, i: usize) -> Self {
        let s = self.cols;
        MatrixFilter::from_entries(self.d, 1, s, self.iter_nonzero().map(|(k, b)| (k, b[i * s..(i + 1) * s].to_vec())))
    }

    /// Reassemble an r×s filter from its columns.
    pub fn from_columns(cols: &[MatrixFilter<T>]) -> Self {
        let r = cols[0].rows;
        let blocks: Vec<Vec<MatrixFilter<T>>> =
            (0..r).map(|i| cols.iter().map(|c| c.component(i, 0)).collect()).collect();
        Self::from_components(&blocks)
    }

    /// Left multiplication of every coefficient by a constant matrix.
    pub fn left_mul_const(&self, m: &Mat<T>) -> Self {
        assert_eq!(m.cols, self.rows);
        let (r, s) = (self.rows, self.cols);
        MatrixFilter::from_entries(
            self.d,
            m.rows,
            s,
            self.iter_nonzero().map(|(k, b)| {
                let mut out = vec![T::zero(); m.rows * s];
                mat_mul_acc(&mut out, &m.data, b, m.rows, r, s);
                (k, out)
            }),
        )
    }

    /// Right multiplication of every coefficient by a constant matrix.
    pub fn right_mul_const(&self, m: &Mat<T>) -> Self {
        assert_eq!(m.rows, self.cols);
        let (r, s) = (self.rows, self.cols);
        MatrixFilter::from_entries(
            self.d,
            r,
            m.cols,
            self.iter_nonzero().map(|(k, b)| {
                let mut out = vec![T::zero(); r * m.cols];
                mat_mul_acc(&mut out, b, &m.data, r, s, m.cols);
                (k, out)
            }),
        )
    }

    /// u(· − z)
    pub fn shift(&self, z: &[i64]) -> Self {
        MatrixFilter::from_entries(
            self.d,
            self.rows,
            self.cols,
            self.iter_nonzero().map(|(k, b)| (k.iter().zip(z).map(|(a, c)| a + c).collect(), b.to_vec())),
        )
    }

    /// u ↑ m: the filter k ↦ u(k/m) on mZ^d and 0 elsewhere; symbol û(mξ).
    pub fn upsample(&self, m: i64) -> Self {
        MatrixFilter::from_entries(
            self.d,
            self.rows,
            self.cols,
            self.iter_nonzero().map(|(k, b)| (k.iter().map(|c| c * m).collect(), b.to_vec())),
        )
    }

    /// k ↦ u(E k) for a unimodular integer matrix given as its inverse action.
    pub fn remap(&self, f: impl Fn(&[i64]) -> LatticePoint) -> Self {
        MatrixFilter::from_entries(self.d, self.rows, self.cols, self.iter_nonzero().map(|(k, b)| (f(&k), b.to_vec())))
    }

    /// [v ∗ w](k) = Σ_z v(z) w(k − z).
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.convolve_with(other, Exec::default())
    }

    pub fn convolve_with(&self, other: &Self, exec: Exec) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch(format!("dimensions {} and {}", self.d, other.d)));
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot convolve {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (r, s, t) = (self.rows, self.cols, other.cols);
        let (Some(bv), Some(bw)) = (self.support(), other.support()) else {
            return Ok(Self::zero(self.d, r, t));
        };
        let out_box = bv.minkowski(&bw);
        check_cap(&out_box)?;
        // loop over the sparser operand, gather from the denser one
        let left_small = self.nnz_points() <= other.nnz_points();
        let out = if left_small {
            let small = self.entries();
            let big = other.dense_view().unwrap();
            gather(&out_box, r * t, exec, |k, acc, scratch| {
                for (z, vz) in &small {
                    for i in 0..k.len() {
                        scratch[i] = k[i] - z[i];
                    }
                    if let Some(idx) = big.flat(scratch) {
                        mat_mul_acc(acc, vz, &big.data[idx * s * t..(idx + 1) * s * t], r, s, t);
                    }
                }
            })
        } else {
            let small = other.entries();
            let big = self.dense_view().unwrap();
            gather(&out_box, r * t, exec, |k, acc, scratch| {
                for (j, wj) in &small {
                    for i in 0..k.len() {
                        scratch[i] = k[i] - j[i];
                    }
                    if let Some(idx) = big.flat(scratch) {
                        mat_mul_acc(acc, &big.data[idx * r * s..(idx + 1) * r * s], wj, r, s, t);
                    }
                }
            })
        };
        Ok(Self::from_dense(self.d, r, t, out))
    }

    /// ‖self ∗ other‖_p without materializing the product.
    pub fn convolve_norm(&self, other: &Self, p: NormP, exec: Exec) -> Result<f64> {
        if self.d != other.d || self.cols != other.rows {
            return Err(Error::DimensionMismatch("convolve_norm shapes".into()));
        }
        let (r, s, t) = (self.rows, self.cols, other.cols);
        let (Some(bv), Some(bw)) = (self.support(), other.support()) else {
            return Ok(0.0);
        };
        let out_box = bv.minkowski(&bw);
        check_cap(&out_box)?;
        let block = r * t;
        let (small, big, small_left) = if self.nnz_points() <= other.nnz_points() {
            (self.entries(), other.dense_view().unwrap(), true)
        } else {
            (other.entries(), self.dense_view().unwrap(), false)
        };
        let acc = fold_points(&out_box, block, exec, |k, out, scratch| {
            for (z, vz) in &small {
                for i in 0..k.len() {
                    scratch[i] = k[i] - z[i];
                }
                if let Some(idx) = big.flat(scratch) {
                    if small_left {
                        mat_mul_acc(out, vz, &big.data[idx * s * t..(idx + 1) * s * t], r, s, t);
                    } else {
                        mat_mul_acc(out, &big.data[idx * r * s..(idx + 1) * r * s], vz, r, s, t);
                    }
                }
            }
        }, p);
        Ok(match p {
            NormP::Two => acc.iter().map(|v| v.sqrt()).sum(),
            _ => acc.iter().sum(),
        })
    }

    /// Coset pieces a^{[γ]}(k) = a(γ + m k) for γ ∈ {0,…,m−1}^d, in digit order.
    pub fn coset_split(&self, spec: &DilationSpec) -> Vec<(LatticePoint, MatrixFilter<T>)> {
        let digits = spec.digits();
        let m = spec.m;
        let mut parts: Vec<Vec<(LatticePoint, Vec<T>)>> = vec![Vec::new(); digits.len()];
        for (k, b) in self.iter_nonzero() {
            let gamma: Vec<i64> = k.iter().map(|c| c.rem_euclid(m)).collect();
            let idx = digit_index(&gamma, m);
            let q: Vec<i64> = k.iter().zip(&gamma).map(|(c, g)| (c - g) / m).collect();
            parts[idx].push((q, b.to_vec()));
        }
        digits
            .into_iter()
            .zip(parts)
            .map(|(g, p)| (g, MatrixFilter::from_entries(self.d, self.rows, self.cols, p)))
            .collect()
    }

    /// Inverse of [`coset_split`](Self::coset_split).
    pub fn coset_merge(parts: &[(LatticePoint, MatrixFilter<T>)], spec: &DilationSpec) -> Self {
        let first = &parts[0].1;
        let m = spec.m;
        let entries = parts.iter().flat_map(|(g, f)| {
            f.iter_nonzero()
                .map(|(k, b)| (k.iter().zip(g).map(|(c, gi)| gi + m * c).collect(), b.to_vec()))
                .collect::<Vec<_>>()
        });
        MatrixFilter::from_entries(first.d, first.rows, first.cols, entries)
    }

    /// Σ over matrix positions of the l_p norm of that scalar sequence.
    pub fn norm(&self, p: NormP) -> FilterNorm {
        let block = self.block();
        let mut acc = vec![0.0f64; block];
        for (_, b) in self.iter_nonzero() {
            for (a, v) in acc.iter_mut().zip(b) {
                let x = v.modulus();
                match p {
                    NormP::One => *a += x,
                    NormP::Two => *a += x * x,
                    NormP::Inf => *a = a.max(x),
                }
            }
        }
        let value = match p {
            NormP::Two => acc.iter().map(|v| v.sqrt()).sum(),
            _ => acc.iter().sum(),
        };
        FilterNorm { p, value }
    }
}

/// Apply `f` at every point of `bx`, writing one block per point.
/// `f(point, out_block, scratch_point)`.
fn gather<T: Scalar, F>(bx: &BoxRange, block: usize, exec: Exec, f: F) -> Dense<T>
where
    F: Fn(&[i64], &mut [T], &mut [i64]) + Sync,
{
    let mut dn = Dense::zeros(bx.clone(), block);
    let d = bx.dim();
    let dims = dn.dims.clone();
    let slab_pts = if d > 1 { dn.strides[0] } else { 1 };
    // slabs of several leading-coordinate rows keep the task count moderate
    let rows_per_task = if d > 1 { 1 } else { 4096 };
    let chunk = slab_pts * rows_per_task * block;
    let lo = bx.lo.clone();
    let run = |(ci, data): (usize, &mut [T])| {
        let mut k = vec![0i64; d];
        let mut scratch = vec![0i64; d];
        let first = ci * slab_pts * rows_per_task;
        // decode the first point of this chunk
        let mut rem = first;
        for i in 0..d {
            let stride = if i + 1 < d { dims[i + 1..].iter().product::<usize>() } else { 1 };
            k[i] = lo[i] + (rem / stride) as i64;
            rem %= stride;
        }
        for out in data.chunks_mut(block) {
            f(&k, out, &mut scratch);
            for i in (0..d).rev() {
                k[i] += 1;
                if ((k[i] - lo[i]) as usize) < dims[i] {
                    break;
                }
                k[i] = lo[i];
            }
        }
    };
    if chunk == 0 {
        return dn;
    }
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            dn.data.par_chunks_mut(chunk).enumerate().for_each(run);
        }
        _ => dn.data.chunks_mut(chunk).enumerate().for_each(run),
    }
    dn
}

/// Evaluate `f` at every point of `bx` and fold each component's modulus
/// into a per-component l_p accumulator (sum, sum of squares, or max).
fn fold_points<T: Scalar, F>(bx: &BoxRange, block: usize, exec: Exec, f: F, p: NormP) -> Vec<f64>
where
    F: Fn(&[i64], &mut [T], &mut [i64]) + Sync,
{
    let d = bx.dim();
    let dims = bx.dims();
    let lead = dims[0];
    let rest: usize = dims[1..].iter().product();
    let lo = bx.lo.clone();
    let combine = |a: &mut Vec<f64>, b: &[f64]| {
        for (x, y) in a.iter_mut().zip(b) {
            match p {
                NormP::Inf => *x = x.max(*y),
                _ => *x += y,
            }
        }
    };
    let slice = |i0: usize| -> Vec<f64> {
        let mut acc = vec![0.0f64; block];
        let mut out = vec![T::zero(); block];
        let mut k = lo.clone();
        k[0] = lo[0] + i0 as i64;
        let mut scratch = vec![0i64; d];
        for _ in 0..rest {
            for v in out.iter_mut() {
                *v = T::zero();
            }
            f(&k, &mut out, &mut scratch);
            for (a, v) in acc.iter_mut().zip(&out) {
                let x = v.modulus();
                match p {
                    NormP::One => *a += x,
                    NormP::Two => *a += x * x,
                    NormP::Inf => *a = a.max(x),
                }
            }
            for i in (1..d).rev() {
                k[i] += 1;
                if ((k[i] - lo[i]) as usize) < dims[i] {
                    break;
                }
                k[i] = lo[i];
            }
        }
        acc
    };
    let partials: Vec<Vec<f64>> = match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..lead).into_par_iter().map(slice).collect()
        }
        _ => (0..lead).map(slice).collect(),
    };
    let mut total = vec![0.0f64; block];
    for part in &partials {
        combine(&mut total, part);
    }
    total
}

fn check_cap(bx: &BoxRange) -> Result<()> {
    let cap = support_cap();
    match bx.volume_checked() {
        Some(v) if v <= cap => Ok(()),
        v => Err(Error::Resource(format!(
            "support box of {} points exceeds the cap of {cap} (set VECSUB_SUPPORT_CAP to raise it)",
            v.map_or_else(|| "overflowing".to_string(), |v| v.to_string())
        ))),
    }
}

fn digit_index(g: &[i64], m: i64) -> usize {
    let mut idx = 0usize;
    for c in g.iter().rev() {
        idx = idx * m as usize + *c as usize;
    }
    idx
}

/// ∇^μ δ for the given dimension: Π_j (δ − δ(· − e_j))^{μ_j}.
pub fn difference_delta<T: Scalar>(mu: &MultiIndex) -> MatrixFilter<T> {
    let d = mu.dim();
    let mut out = MatrixFilter::<T>::scalar(d, [(vec![0; d], T::one())]);
    for j in 0..d {
        for _ in 0..mu.0[j] {
            let mut e = vec![0; d];
            e[j] = 1;
            let nab = MatrixFilter::scalar(d, [(vec![0; d], T::one()), (e, -T::one())]);
            out = out.convolve(&nab).expect("scalar convolution");
        }
    }
    out
}

/// ∇^μ v = [∇^μ δ] ∗ v, applied to every entry.
pub fn difference<T: Scalar>(mu: &MultiIndex, v: &MatrixFilter<T>) -> MatrixFilter<T> {
    let nab = difference_delta::<T>(mu);
    let r = v.rows();
    // scalar times matrix filter: lift the scalar to δ-multiples of I_r
    let lifted = nab.kron_identity(r);
    lifted.convolve(v).expect("shapes agree by construction")
}

impl<T: Scalar> MatrixFilter<T> {
    /// For a scalar filter c, the r×r filter c·I_r.
    pub fn kron_identity(&self, r: usize) -> Self {
        assert!(self.rows == 1 && self.cols == 1);
        MatrixFilter::from_entries(
            self.d,
            r,
            r,
            self.iter_nonzero().map(|(k, b)| {
                let mut m = vec![T::zero(); r * r];
                for i in 0..r {
                    m[i * r + i] = b[0].clone();
                }
                (k, m)
            }),
        )
    }

    /// Multiply every entry by a scalar filter: (c ∗ u)_{ij} = c ∗ u_{ij}.
    pub fn scalar_convolve(&self, c: &MatrixFilter<T>) -> Result<Self> {
        c.kron_identity(self.rows).convolve(self)
    }
}

/// [S_a v](k) = m^d Σ_z v(z) a(k − m z) for a 1×r (or s×r) filter v.
pub fn subdivision_apply<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, v: &MatrixFilter<T>) -> Result<MatrixFilter<T>> {
    subdivision_apply_with(a, spec, v, Exec::default())
}

pub fn subdivision_apply_with<T: Scalar>(
    a: &MatrixFilter<T>,
    spec: &DilationSpec,
    v: &MatrixFilter<T>,
    exec: Exec,
) -> Result<MatrixFilter<T>> {
    let r = a.rows();
    if a.cols() != r {
        return Err(Error::DimensionMismatch("mask must be square".into()));
    }
    if v.cols() != r || v.dim() != a.dim() || spec.d != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "data {}x{} on Z^{} against {}x{} mask on Z^{}",
            v.rows(),
            v.cols(),
            v.dim(),
            r,
            r,
            a.dim()
        )));
    }
    let s = v.rows();
    let (Some(bv), Some(ba)) = (v.support(), a.support()) else {
        return Ok(MatrixFilter::zero(a.dim(), s, r));
    };
    let m = spec.m;
    let out_box = bv.scaled(m).minkowski(&ba);
    check_cap(&out_box)?;
    let md = T::from_i64(spec.det());
    // group mask coefficients by residue class, pre-scaled by m^d
    let mut by_residue: Vec<Vec<(LatticePoint, Vec<T>)>> = vec![Vec::new(); spec.coset_count()];
    for (j, b) in a.iter_nonzero() {
        let g: Vec<i64> = j.iter().map(|c| c.rem_euclid(m)).collect();
        by_residue[digit_index(&g, m)].push((j, b.iter().map(|x| x.clone() * md.clone()).collect()));
    }
    let big = v.dense_view().unwrap();
    let out = gather(&out_box, s * r, exec, |k, acc, scratch| {
        let mut idx = 0usize;
        for c in k.iter().rev() {
            idx = idx * m as usize + c.rem_euclid(m) as usize;
        }
        for (j, aj) in &by_residue[idx] {
            for i in 0..k.len() {
                scratch[i] = (k[i] - j[i]).div_euclid(m);
            }
            if let Some(p) = big.flat(scratch) {
                mat_mul_acc(acc, &big.data[p * s * r..(p + 1) * s * r], aj, s, r, r);
            }
        }
    });
    Ok(MatrixFilter::from_dense(a.dim(), s, r, out))
}

/// S^n(δ I_r) by iterating the subdivision operator.
pub fn subdivision_power<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, n: u32) -> Result<MatrixFilter<T>> {
    let mut q = MatrixFilter::delta(a.dim(), a.rows());
    for _ in 0..n {
        q = subdivision_apply(a, spec, &q)?;
    }
    Ok(q)
}

/// u_n = [S^n(δ I_r)] ∗ w via u_n = m^d (a ↑ m^{n−1}) ∗ u_{n−1}, u_0 = w.
pub fn subdivision_power_convolved<T: Scalar>(
    a: &MatrixFilter<T>,
    spec: &DilationSpec,
    w: &MatrixFilter<T>,
    n: u32,
) -> Result<MatrixFilter<T>> {
    if w.rows() != a.rows() {
        return Err(Error::DimensionMismatch("generator rows must match mask size".into()));
    }
    let md = T::from_i64(spec.det());
    let mut u = w.clone();
    let mut up = 1i64;
    for _ in 0..n {
        let aj = a.upsample(up).scale(&md);
        u = aj.convolve(&u)?;
        up = up.checked_mul(spec.m).ok_or_else(|| Error::Resource("upsampling factor overflow".into()))?;
    }
    Ok(u)
}

impl<T: Scalar> PartialEq for MatrixFilter<T> {
    fn eq(&self, other: &Self) -> bool {
        if self.d != other.d || self.rows != other.rows || self.cols != other.cols {
            return false;
        }
        let a: Vec<_> = self.iter_nonzero().collect();
        let b: Vec<_> = other.iter_nonzero().collect();
        a == b
    }
}

/// A filter with either scalar backend, as read from a file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyFilter {
    Rational(MatrixFilter<Q>),
    Complex(MatrixFilter<C64>),
}

impl AnyFilter {
    pub fn kind(&self) -> ScalarKind {
        match self {
            AnyFilter::Rational(_) => ScalarKind::Rational,
            AnyFilter::Complex(_) => ScalarKind::Complex,
        }
    }

    pub fn to_c64(&self) -> MatrixFilter<C64> {
        match self {
            AnyFilter::Rational(f) => f.to_c64(),
            AnyFilter::Complex(f) => f.clone(),
        }
    }

    pub fn as_rational(&self) -> Option<&MatrixFilter<Q>> {
        match self {
            AnyFilter::Rational(f) => Some(f),
            AnyFilter::Complex(_) => None,
        }
    }
}

/// Real part of a complex filter when every imaginary part vanishes.
pub fn real_part(f: &MatrixFilter<C64>) -> Option<MatrixFilter<f64>> {
    if f.iter_nonzero().all(|(_, b)| b.iter().all(|z| z.im.abs() <= 1e-14 * z.re.abs().max(1.0))) {
        Some(f.map(|z| z.re))
    } else {
        None
    }
}

pub fn to_f64(f: &MatrixFilter<Q>) -> MatrixFilter<f64> {
    f.map(crate::scalar::q_to_f64)
}

impl MatrixFilter<f64> {
    pub fn max_abs(&self) -> f64 {
        self.iter_nonzero().flat_map(|(_, b)| b.iter().map(|v| v.abs()).collect::<Vec<_>>()).fold(0.0, f64::max)
    }
}
