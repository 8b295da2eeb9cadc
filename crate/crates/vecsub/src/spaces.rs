//! Difference spaces V_{m,υ}, moment spaces mom_{υ,μ} and filters with prescribed jets.

use crate::error::{Error, Result};
use crate::filter::{difference_delta, MatrixFilter};
use crate::lattice::{enumerate_multiindices, LatticePoint, MultiIndex};
use crate::linalg::Mat;
use crate::moments::{inv_factorial, jet_at_zero, jet_divide, jet_product, sign_pow, Jet};
use crate::scalar::Scalar;
use crate::sumrules::MatchingJet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GenLabel {
    /// Generators of V_{m,υ}.
    Vmy(u32),
    Mom(MultiIndex),
}

impl std::fmt::Display for GenLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenLabel::Vmy(m) => write!(f, "V_{m}"),
            GenLabel::Mom(mu) => write!(f, "mom_{mu}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorSet<T> {
    pub label: GenLabel,
    pub gens: Vec<MatrixFilter<T>>,
    /// Short human-readable tag per generator.
    pub names: Vec<String>,
    pub provenance: String,
}

impl<T: Scalar> GeneratorSet<T> {
    pub fn len(&self) -> usize {
        self.gens.len()
    }
    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }
}

/// A filter whose jet at zero agrees with `target` through its order.
///
/// `target` is a column jet (r×1, or scalar). Without a support the solve runs on
/// the tensor grid {0..m}^d, where it is an invertible Kronecker-Vandermonde system.
pub fn filter_with_jet<T: Scalar>(target: &Jet<T>, support: Option<&[LatticePoint]>) -> Result<MatrixFilter<T>> {
    if target.cols() != 1 {
        return Err(Error::DimensionMismatch("target jet must be a column".into()));
    }
    let parts: Vec<MatrixFilter<T>> = (0..target.rows())
        .map(|i| {
            let tj = target.entry_jet(i, 0);
            match support {
                None => scalar_on_tensor_grid(&tj),
                Some(pts) => scalar_on_support(&tj, pts),
            }
        })
        .collect::<Result<_>>()?;
    Ok(MatrixFilter::from_columns(&[stack_rows(&parts)]))
}

fn stack_rows<T: Scalar>(parts: &[MatrixFilter<T>]) -> MatrixFilter<T> {
    let d = parts[0].dim();
    let blocks: Vec<Vec<MatrixFilter<T>>> = parts.iter().map(|p| vec![p.clone()]).collect();
    if blocks.is_empty() {
        return MatrixFilter::zero(d, 0, 1);
    }
    MatrixFilter::from_components(&blocks)
}

/// Inverse of V[μ][k] = k^μ on {0..m}.
fn vandermonde_inverse<T: Scalar>(m: u32) -> Result<Mat<T>> {
    let n = m as usize + 1;
    let mut v = Mat::<T>::zeros(n, n);
    for mu in 0..n {
        for k in 0..n {
            v.set(mu, k, T::from_i64(k as i64).pow_u32(mu as u32));
        }
    }
    v.inverse().ok_or_else(|| Error::Singular("Vandermonde matrix".into()))
}

fn scalar_on_tensor_grid<T: Scalar>(tj: &Jet<T>) -> Result<MatrixFilter<T>> {
    let d = tj.dim();
    let m = tj.order();
    let n = m as usize + 1;
    let vinv = vandermonde_inverse::<T>(m)?;
    let total = n.pow(d as u32);
    // moments on the full grid {0..m}^d of exponents; those of degree > m are set to 0
    let mut buf = vec![T::zero(); total];
    for (flat, slot) in buf.iter_mut().enumerate() {
        let mu = unflatten(flat, n, d);
        if mu.iter().sum::<u32>() <= m {
            *slot = tj.get(&MultiIndex(mu))[0].clone();
        }
    }
    // apply V^{-1} along each axis
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let mut next = vec![T::zero(); total];
        for (flat, out) in next.iter_mut().enumerate() {
            let k = (flat / stride) % n;
            let base = flat - k * stride;
            let mut acc = T::zero();
            for mu in 0..n {
                T::mul_acc(&mut acc, vinv.get(k, mu), &buf[base + mu * stride]);
            }
            *out = acc;
        }
        buf = next;
    }
    let entries = buf.into_iter().enumerate().filter(|(_, v)| !v.is_negligible()).map(|(flat, v)| {
        let k: LatticePoint = unflatten(flat, n, d).into_iter().map(|x| x as i64).collect();
        (k, v)
    });
    Ok(MatrixFilter::scalar(d, entries))
}

fn unflatten(mut flat: usize, n: usize, d: usize) -> Vec<u32> {
    let mut out = vec![0u32; d];
    for i in (0..d).rev() {
        out[i] = (flat % n) as u32;
        flat /= n;
    }
    out
}

fn scalar_on_support<T: Scalar>(tj: &Jet<T>, pts: &[LatticePoint]) -> Result<MatrixFilter<T>> {
    let d = tj.dim();
    let idx = tj.indices().to_vec();
    let (rows, cols) = (idx.len(), pts.len());
    let mut aug = Mat::<T>::zeros(rows, cols + 1);
    for (i, mu) in idx.iter().enumerate() {
        for (j, k) in pts.iter().enumerate() {
            let mut v = T::one();
            for (e, x) in mu.0.iter().zip(k) {
                v = v * T::from_i64(*x).pow_u32(*e);
            }
            aug.set(i, j, v);
        }
        aug.set(i, cols, tj.get(mu)[0].clone());
    }
    let pivots = aug.rref();
    if pivots.contains(&cols) {
        return Err(Error::Singular("support cannot carry the requested moments".into()));
    }
    let mut sol = vec![T::zero(); cols];
    for (row, &pc) in pivots.iter().enumerate() {
        sol[pc] = aug.get(row, cols).clone();
    }
    let entries = pts.iter().cloned().zip(sol).filter(|(_, v)| !v.is_negligible());
    Ok(MatrixFilter::scalar(d, entries))
}

/// Jet of υ ∗ u through `order`.
fn pair_jet<T: Scalar>(v: &MatchingJet<T>, u: &MatrixFilter<T>, order: u32) -> Result<Jet<T>> {
    if u.rows() != v.r() || u.cols() != 1 {
        return Err(Error::DimensionMismatch("u must be an r×1 filter".into()));
    }
    if v.order() < order {
        return Err(Error::Precondition(format!("matching jet known through order {}, need {order}", v.order())));
    }
    jet_product(&v.jet.truncate(order), &jet_at_zero(u, order))
}

/// Membership of w in V_{m,υ}: T_ν(υ∗w) = 0 for all |ν| ≤ m.
pub fn in_vmy<T: Scalar>(v: &MatchingJet<T>, w: &MatrixFilter<T>, m: u32) -> Result<bool> {
    let j = pair_jet(v, w, m)?;
    Ok(j.indices().iter().all(|nu| j.get(nu)[0].is_negligible()))
}

/// B_{m−1,υ}: generators of V_{m−1,υ}.
pub fn vmy_generators<T: Scalar>(v: &MatchingJet<T>, m: u32) -> Result<GeneratorSet<T>> {
    let d = v.dim();
    let r = v.r();
    let label = GenLabel::Vmy(m.saturating_sub(1));
    if m == 0 {
        // V_{−1} imposes nothing
        return Ok(GeneratorSet {
            label,
            gens: (0..r).map(|j| MatrixFilter::delta_col(d, r, j)).collect(),
            names: (0..r).map(|j| format!("delta*e{}", j + 1)).collect(),
            provenance: "all of l_0".into(),
        });
    }
    if v.order() + 1 < m {
        return Err(Error::Precondition(format!("matching jet order {} too low for V_{}", v.order(), m - 1)));
    }
    let p = v.pinned;
    let mut gens = Vec::new();
    let mut names = Vec::new();
    for mu in enumerate_multiindices(d, m) {
        gens.push(column_at(&difference_delta::<T>(&mu), r, p));
        names.push(format!("nabla{mu}*e{}", p + 1));
    }
    let b = quotients(v, m - 1)?;
    for (j, bj) in b.into_iter().enumerate() {
        let Some(bj) = bj else { continue };
        let g = column_at(&bj, r, p).add(&MatrixFilter::delta_col(d, r, j))?;
        gens.push(g);
        names.push(format!("b{}*e{}+delta*e{}", j + 1, p + 1, j + 1));
    }
    Ok(GeneratorSet { label, gens, names, provenance: format!("matching jet of order {}, pivot {}", v.order(), p + 1) })
}

/// Place a scalar filter in row `p` of an r×1 column.
fn column_at<T: Scalar>(c: &MatrixFilter<T>, r: usize, p: usize) -> MatrixFilter<T> {
    let d = c.dim();
    let blocks: Vec<Vec<MatrixFilter<T>>> =
        (0..r).map(|i| vec![if i == p { c.clone() } else { MatrixFilter::zero(d, 1, 1) }]).collect();
    MatrixFilter::from_components(&blocks)
}

/// b_j realizing −υ̂_j/υ̂_p through `order`, for j ≠ p; `None` at the pivot.
pub(crate) fn quotients<T: Scalar>(v: &MatchingJet<T>, order: u32) -> Result<Vec<Option<MatrixFilter<T>>>> {
    let p = v.pinned;
    let jet = v.jet.truncate(order);
    let den = jet.entry_jet(0, p);
    (0..v.r())
        .map(|j| {
            if j == p {
                return Ok(None);
            }
            let qj = jet_divide(&jet.entry_jet(0, j), &den)?.scale(&-T::one());
            filter_with_jet(&qj, None).map(Some)
        })
        .collect()
}

/// β_{υ,u,μ} = (−1)^{|μ|} T_μ(υ∗u)/μ! when u ∈ mom_{υ,μ}.
pub fn mom_membership<T: Scalar>(v: &MatchingJet<T>, u: &MatrixFilter<T>, mu: &MultiIndex) -> Result<Option<T>> {
    Ok(mom_check(v, u, mu)?.ok())
}

/// Like [`mom_membership`], reporting the first violating ν on failure.
pub fn mom_check<T: Scalar>(
    v: &MatchingJet<T>,
    u: &MatrixFilter<T>,
    mu: &MultiIndex,
) -> Result<std::result::Result<T, MultiIndex>> {
    let j = pair_jet(v, u, mu.order())?;
    for nu in j.indices() {
        if nu != mu && !j.get(nu)[0].is_negligible() {
            return Ok(Err(nu.clone()));
        }
    }
    let t = j.get(mu)[0].clone();
    Ok(Ok(sign_pow::<T>(mu.order()) * t * inv_factorial::<T>(mu)))
}

/// G_{υ,μ} = {U∗∇^μδ e_1} ∪ {U∗δ e_l : l ≥ 2} with U from the column reduction of υ.
pub fn mom_generators<T: Scalar>(v: &MatchingJet<T>, mu: &MultiIndex) -> Result<GeneratorSet<T>> {
    let d = v.dim();
    let r = v.r();
    let u = crate::transform::column_reduce_matching(v, mu.order())?;
    let first = u.u.convolve(&column_at(&difference_delta::<T>(mu), r, 0))?;
    let mut gens = vec![first];
    let mut names = vec![format!("U*nabla{mu}*e1")];
    for l in 1..r {
        gens.push(u.u.convolve(&MatrixFilter::delta_col(d, r, l))?);
        names.push(format!("U*delta*e{}", l + 1));
    }
    Ok(GeneratorSet { label: GenLabel::Mom(mu.clone()), gens, names, provenance: format!("column reduction, pivot {}", v.pinned + 1) })
}
