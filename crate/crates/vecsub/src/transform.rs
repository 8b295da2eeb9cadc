//! Strongly invertible filters and the change of mask ã = (V↑m) ∗ a ∗ U.

use crate::error::{Error, Result};
use crate::filter::{subdivision_power, MatrixFilter};
use crate::lattice::{DilationSpec, LatticePoint};
use crate::scalar::Scalar;
use crate::spaces::quotients;
use crate::sumrules::{sum_rule_order, MatchingJet, DEFAULT_SUM_RULE_CAP};

/// U with det Û(ξ) = c0 e^{−ik·ξ} and its finitely supported inverse.
#[derive(Clone, Debug)]
pub struct StrongFilter<T> {
    pub u: MatrixFilter<T>,
    pub det_coeff: T,
    pub det_shift: LatticePoint,
    pub inverse: MatrixFilter<T>,
}

fn scalar_component<T: Scalar>(u: &MatrixFilter<T>, i: usize, j: usize) -> MatrixFilter<T> {
    u.component(i, j)
}

/// Laurent determinant of a square filter, by cofactor expansion along the first row.
pub fn laurent_det<T: Scalar>(u: &MatrixFilter<T>) -> Result<MatrixFilter<T>> {
    if u.rows() != u.cols() {
        return Err(Error::DimensionMismatch("determinant of a non-square filter".into()));
    }
    let r = u.rows();
    let comps: Vec<Vec<MatrixFilter<T>>> =
        (0..r).map(|i| (0..r).map(|j| scalar_component(u, i, j)).collect()).collect();
    let rows: Vec<usize> = (0..r).collect();
    let cols: Vec<usize> = (0..r).collect();
    minor(&comps, &rows, &cols, u.dim())
}

fn minor<T: Scalar>(c: &[Vec<MatrixFilter<T>>], rows: &[usize], cols: &[usize], d: usize) -> Result<MatrixFilter<T>> {
    if rows.len() == 1 {
        return Ok(c[rows[0]][cols[0]].clone());
    }
    let mut acc = MatrixFilter::zero(d, 1, 1);
    let rest_rows = &rows[1..];
    for (t, &j) in cols.iter().enumerate() {
        let e = &c[rows[0]][j];
        if e.is_zero() {
            continue;
        }
        let rest_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != j).collect();
        let term = e.convolve(&minor(c, rest_rows, &rest_cols, d)?)?;
        acc = if t % 2 == 0 { acc.add(&term)? } else { acc.sub(&term)? };
    }
    Ok(acc)
}

/// Adjugate filter: adj(U)_{ji} = (−1)^{i+j} minor_{ij}.
fn adjugate<T: Scalar>(u: &MatrixFilter<T>) -> Result<MatrixFilter<T>> {
    let r = u.rows();
    let d = u.dim();
    if r == 1 {
        return Ok(MatrixFilter::delta(d, 1));
    }
    let comps: Vec<Vec<MatrixFilter<T>>> =
        (0..r).map(|i| (0..r).map(|j| scalar_component(u, i, j)).collect()).collect();
    let mut blocks: Vec<Vec<MatrixFilter<T>>> = vec![vec![MatrixFilter::zero(d, 1, 1); r]; r];
    for i in 0..r {
        for j in 0..r {
            let rr: Vec<usize> = (0..r).filter(|&x| x != i).collect();
            let cc: Vec<usize> = (0..r).filter(|&x| x != j).collect();
            let m = minor(&comps, &rr, &cc, d)?;
            blocks[j][i] = if (i + j) % 2 == 0 { m } else { m.neg() };
        }
    }
    Ok(MatrixFilter::from_components(&blocks))
}

/// `Some` iff det Û is a nonzero monomial.
pub fn verify_strong<T: Scalar>(u: &MatrixFilter<T>) -> Result<Option<StrongFilter<T>>> {
    let det = laurent_det(u)?;
    if det.nnz_points() != 1 {
        return Ok(None);
    }
    let (k, c) = det.iter_nonzero().next().map(|(k, b)| (k, b[0].clone())).unwrap();
    let neg: LatticePoint = k.iter().map(|x| -x).collect();
    let inv_det = MatrixFilter::scalar(u.dim(), [(neg, T::one() / c.clone())]);
    let inverse = adjugate(u)?.scalar_convolve(&inv_det)?;
    Ok(Some(StrongFilter { u: u.clone(), det_coeff: c, det_shift: k, inverse }))
}

/// U = E·P with υ̂Û = ĉ·e_1ᵀ + O(‖ξ‖^{m+1}), ĉ = υ̂_p.
///
/// E is the identity with −b_j at (p, j), b̂_j the jet of υ̂_j/υ̂_p through m; P swaps columns 1 and p.
pub fn column_reduce_matching<T: Scalar>(v: &MatchingJet<T>, m: u32) -> Result<StrongFilter<T>> {
    if v.order() < m {
        return Err(Error::Precondition(format!("matching jet known through order {}, need {m}", v.order())));
    }
    let d = v.dim();
    let r = v.r();
    let p = v.pinned;
    // `quotients` returns realizations of −υ̂_j/υ̂_p
    let b = quotients(v, m)?;
    let mut blocks: Vec<Vec<MatrixFilter<T>>> = (0..r)
        .map(|i| (0..r).map(|j| if i == j { MatrixFilter::delta(d, 1) } else { MatrixFilter::zero(d, 1, 1) }).collect())
        .collect();
    for (j, bj) in b.into_iter().enumerate() {
        if let Some(bj) = bj {
            blocks[p][j] = bj;
        }
    }
    if p != 0 {
        for row in blocks.iter_mut() {
            row.swap(0, p);
        }
    }
    let u = MatrixFilter::from_components(&blocks);
    verify_strong(&u)?.ok_or_else(|| Error::Singular("column reduction produced a non-monomial determinant".into()))
}

/// ã = (V↑m) ∗ a ∗ U, i.e. ã̂(ξ) = Û(mξ)^{−1} â(ξ) Û(ξ).
pub fn transform_filter<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, u: &StrongFilter<T>) -> Result<MatrixFilter<T>> {
    if a.rows() != u.u.rows() || a.cols() != u.u.cols() {
        return Err(Error::DimensionMismatch("mask and transform sizes differ".into()));
    }
    u.inverse.upsample(spec.m).convolve(&a.convolve(&u.u)?)
}

/// Both sides of S^n_a(δI)∗(U∗w) = (U↑m^n)∗[S^n_ã(δI)∗w].
pub fn invariance_identity<T: Scalar>(
    a: &MatrixFilter<T>,
    at: &MatrixFilter<T>,
    spec: &DilationSpec,
    u: &StrongFilter<T>,
    w: &MatrixFilter<T>,
    n: u32,
) -> Result<(MatrixFilter<T>, MatrixFilter<T>)> {
    let lhs = subdivision_power(a, spec, n)?.convolve(&u.u.convolve(w)?)?;
    let up = spec.m.pow(n);
    let rhs = u.u.upsample(up).convolve(&subdivision_power(at, spec, n)?.convolve(w)?)?;
    Ok((lhs, rhs))
}

#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub sum_rules: (u32, u32),
    /// (n, identity holds) for each checked level.
    pub identity: Vec<(u32, bool)>,
    /// sm estimates for (a, ã) when requested.
    pub smoothness: Option<(f64, f64)>,
    pub smoothness_tol: f64,
}

impl InvarianceReport {
    pub fn sum_rules_equal(&self) -> bool {
        self.sum_rules.0 == self.sum_rules.1
    }
    pub fn identity_holds(&self) -> bool {
        self.identity.iter().all(|x| x.1)
    }
    pub fn smoothness_agrees(&self) -> Option<bool> {
        self.smoothness.map(|(x, y)| (x - y).abs() < self.smoothness_tol || (x.is_infinite() && y.is_infinite()))
    }
    pub fn passed(&self) -> bool {
        self.sum_rules_equal() && self.identity_holds() && self.smoothness_agrees().unwrap_or(true)
    }
}

/// Sum-rule orders of a and ã, the finite-n identity for n ≤ `max_n` on the columns δe_l
/// and `extra` test data, and optionally sm̂_p of both at equal n.
pub fn invariance_suite<T: Scalar>(
    a: &MatrixFilter<T>,
    spec: &DilationSpec,
    u: &StrongFilter<T>,
    max_n: u32,
    extra: &[MatrixFilter<T>],
    smooth: Option<(crate::filter::NormP, u32)>,
) -> Result<InvarianceReport> {
    let at = transform_filter(a, spec, u)?;
    let sa = sum_rule_order(a, spec, DEFAULT_SUM_RULE_CAP)?.order;
    let st = sum_rule_order(&at, spec, DEFAULT_SUM_RULE_CAP)?.order;
    let r = a.rows();
    let mut data: Vec<MatrixFilter<T>> = (0..r).map(|l| MatrixFilter::delta_col(a.dim(), r, l)).collect();
    data.extend(extra.iter().cloned());
    let mut identity = Vec::new();
    for n in 0..=max_n {
        let mut ok = true;
        for w in &data {
            let (l, rr) = invariance_identity(a, &at, spec, u, w, n)?;
            ok &= if T::EXACT { l == rr } else { l.approx_eq(&rr) };
        }
        identity.push((n, ok));
    }
    let smoothness = match smooth {
        None => None,
        Some((p, n_max)) => {
            let x = crate::smoothness::sm_estimate(a, spec, p, n_max)?;
            let y = crate::smoothness::sm_estimate(&at, spec, p, n_max)?;
            Some((x.value, y.value))
        }
    };
    Ok(InvarianceReport { sum_rules: (sa, st), identity, smoothness, smoothness_tol: 0.05 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::moments::{jet_at_zero, jet_product};
    use crate::scalar::{qi, Q};
    use crate::sumrules::matching_jet;

    fn mat2(e: [[Vec<(LatticePoint, i64)>; 2]; 2]) -> MatrixFilter<Q> {
        let blocks: Vec<Vec<MatrixFilter<Q>>> = e
            .into_iter()
            .map(|row| row.into_iter().map(|c| MatrixFilter::scalar(1, c.into_iter().map(|(k, v)| (k, qi(v))))).collect())
            .collect();
        MatrixFilter::from_components(&blocks)
    }

    #[test]
    fn constant_unit_triangular() {
        let u = mat2([[vec![(vec![0], 1)], vec![(vec![0], -1)]], [vec![], vec![(vec![0], 1)]]]);
        let s = verify_strong(&u).unwrap().unwrap();
        let want = mat2([[vec![(vec![0], 1)], vec![(vec![0], 1)]], [vec![], vec![(vec![0], 1)]]]);
        assert_eq!(s.inverse, want);
        assert_eq!(s.det_coeff, qi(1));
    }

    #[test]
    fn shifted_entry_is_strong() {
        let u = mat2([[vec![(vec![0], 1)], vec![(vec![1], 1)]], [vec![], vec![(vec![0], 1)]]]);
        let s = verify_strong(&u).unwrap().unwrap();
        assert_eq!(u.convolve(&s.inverse).unwrap(), MatrixFilter::delta(1, 2));
        assert_eq!(s.inverse.convolve(&u).unwrap(), MatrixFilter::delta(1, 2));
    }

    #[test]
    fn two_term_determinant_is_not_strong() {
        let u = mat2([[vec![(vec![0], 1), (vec![1], 1)], vec![]], [vec![], vec![(vec![0], 1)]]]);
        assert!(verify_strong(&u).unwrap().is_none());
    }

    #[test]
    fn monomial_determinant_with_shift() {
        let u = mat2([[vec![(vec![2], 3)], vec![]], [vec![(vec![0], 5)], vec![(vec![-1], 1)]]]);
        let s = verify_strong(&u).unwrap().unwrap();
        assert_eq!(s.det_shift, vec![1]);
        assert_eq!(s.det_coeff, qi(3));
        assert_eq!(u.convolve(&s.inverse).unwrap(), MatrixFilter::delta(1, 2));
    }

    #[test]
    fn column_reduction_ex1_is_identity() {
        let spec = DilationSpec::new(2, 2).unwrap();
        let v = matching_jet(&fixtures::ex1().mask, &spec, 3).unwrap();
        let u = column_reduce_matching(&v, 3).unwrap();
        assert_eq!(u.u, MatrixFilter::delta(2, 2));
    }

    #[test]
    fn column_reduction_a4_scalar_type() {
        let spec = DilationSpec::new(2, 2).unwrap();
        let a = fixtures::a4().mask;
        let v = matching_jet(&a, &spec, 3).unwrap();
        let u = column_reduce_matching(&v, 3).unwrap();
        let prod = jet_product(&v.jet, &jet_at_zero(&u.u, 3)).unwrap();
        for mu in prod.indices() {
            assert_eq!(prod.get(mu)[1], qi(0), "second entry at {mu}");
        }
        let at = transform_filter(&a, &spec, &u).unwrap();
        let vt = matching_jet(&at, &spec, 3).unwrap();
        for mu in vt.jet.indices() {
            assert_eq!(vt.jet.get(mu)[1], qi(0));
        }
    }

    #[test]
    fn identity_transform() {
        let spec = DilationSpec::new(2, 2).unwrap();
        let a = fixtures::ex1().mask;
        let u = verify_strong(&MatrixFilter::<Q>::delta(2, 2)).unwrap().unwrap();
        assert_eq!(transform_filter(&a, &spec, &u).unwrap(), a);
    }

    #[test]
    fn haar_block_swap_keeps_sum_rules() {
        let spec = DilationSpec::new(2, 1).unwrap();
        let h = fixtures::haar();
        let z = MatrixFilter::<Q>::zero(1, 1, 1);
        let a = MatrixFilter::from_components(&[vec![h.clone(), z.clone()], vec![z.clone(), fixtures::hat()]]);
        let swap = MatrixFilter::from_components(&[
            vec![z.clone(), MatrixFilter::delta(1, 1)],
            vec![MatrixFilter::delta(1, 1), z.clone()],
        ]);
        let u = verify_strong(&swap).unwrap().unwrap();
        let at = transform_filter(&a, &spec, &u).unwrap();
        // â(0) = I_2 here, so both orders are undefined in the same way
        let sa = sum_rule_order(&a, &spec, 6).map(|s| s.order).map_err(|e| e.to_string());
        let st = sum_rule_order(&at, &spec, 6).map(|s| s.order).map_err(|e| e.to_string());
        assert_eq!(sa, st);
    }
}
