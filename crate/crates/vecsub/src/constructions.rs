//! B-spline, three-direction and balanced masks, and symmetry verification.

use crate::error::{Error, Result};
use crate::filter::MatrixFilter;
use crate::lattice::{gamma_set, int_det, int_inverse, int_mat_mul, int_mat_vec, q_mat_vec, DilationSpec, IntMatrix, LatticePoint};
use crate::linalg::Mat;
use crate::moments::{character_jet, jet_linear_substitution, jet_product, Jet};
use crate::scalar::{q, qi, Q};
use crate::sumrules::{check_sum_rules, matching_jet, MatchingJet};
use num::bigint::BigInt;
use num::{One, Zero};
use std::collections::BTreeMap;

/// Centred B-spline mask of even order 2m: 2^{−2m} binom(2m, k+m), k ∈ [−m, m].
pub fn bspline_filter(order: u32) -> MatrixFilter<Q> {
    assert!(order >= 2 && order % 2 == 0, "B-spline order must be even and at least 2");
    let m = (order / 2) as i64;
    let den = BigInt::one() << order as usize;
    let mut c = BigInt::one();
    let mut entries = Vec::new();
    for k in 0..=2 * m {
        entries.push((vec![k - m], Q::new(c.clone(), den.clone())));
        c = c * BigInt::from(2 * m - k) / BigInt::from(k + 1);
    }
    MatrixFilter::scalar(1, entries)
}

/// u(k1, k2) = A(k1) B(k2).
pub fn tensor_filter(a: &MatrixFilter<Q>, b: &MatrixFilter<Q>) -> MatrixFilter<Q> {
    assert!(a.dim() == 1 && b.dim() == 1, "tensor_filter takes 1-D scalar filters");
    let mut entries = Vec::new();
    for (ka, va) in a.iter_nonzero() {
        for (kb, vb) in b.iter_nonzero() {
            entries.push((vec![ka[0], kb[0]], &va[0] * &vb[0]));
        }
    }
    MatrixFilter::scalar(2, entries)
}

/// û_m = 2^{−3m}(1+e^{−iξ1})^m (1+e^{−iξ2})^m (1+e^{i(ξ1+ξ2)})^m.
pub fn three_direction_filter(m: u32) -> MatrixFilter<Q> {
    assert!(m >= 1, "three-direction order must be at least 1");
    let pair = |e: Vec<i64>| MatrixFilter::scalar(2, [(vec![0, 0], q(1, 2)), (e, q(1, 2))]);
    let factors = [pair(vec![1, 0]), pair(vec![0, 1]), pair(vec![-1, -1])];
    let mut out = MatrixFilter::<Q>::delta(2, 1);
    for f in &factors {
        for _ in 0..m {
            out = out.convolve(f).unwrap();
        }
    }
    out
}

/// a_{jl}(k) = A(Nk − 2γ_j + γ_l) with Γ_N = N[0,1)^d ∩ Z^d.
pub fn balanced_from_scalar(a: &MatrixFilter<Q>, n: &IntMatrix) -> Result<MatrixFilter<Q>> {
    if a.rows() != 1 || a.cols() != 1 {
        return Err(Error::DimensionMismatch("balanced construction needs a scalar filter".into()));
    }
    if n.len() != a.dim() {
        return Err(Error::DimensionMismatch("lattice matrix size differs from filter dimension".into()));
    }
    if int_det(n) == 0 {
        return Err(Error::Singular("lattice matrix is singular".into()));
    }
    let inv = int_inverse(n).unwrap();
    let gammas = gamma_set(n)?;
    let r = gammas.len();
    let mut entries: Vec<(LatticePoint, Vec<Q>)> = Vec::new();
    for (p, v) in a.iter_nonzero() {
        for j in 0..r {
            for l in 0..r {
                let shifted: Vec<Q> = (0..p.len()).map(|i| qi(p[i] + 2 * gammas[j][i] - gammas[l][i])).collect();
                let k = q_mat_vec(&inv, &shifted);
                if k.iter().all(|x| x.is_integer()) {
                    let kk: Vec<i64> = k.iter().map(|x| i64::try_from(x.to_integer()).unwrap()).collect();
                    let mut block = vec![Q::zero(); r * r];
                    block[j * r + l] = v[0].clone();
                    entries.push((kk, block));
                }
            }
        }
    }
    Ok(MatrixFilter::from_entries(a.dim(), r, r, entries))
}

/// ĉ(ξ)[e^{iN^{−1}γ_1·ξ}, …] through order `order`, where ĉ(N^T η) is the
/// scalar matching jet of A for dilation 2.
pub fn balanced_matching_jet(a: &MatrixFilter<Q>, n: &IntMatrix, order: u32) -> Result<MatchingJet<Q>> {
    let d = a.dim();
    let spec = DilationSpec::new(2, d)?;
    let g = matching_jet(a, &spec, order)?;
    if !check_sum_rules(a, &spec, &g, order)?.holds {
        return Err(Error::Precondition(format!("scalar filter lacks sum rules of order {}", order + 1)));
    }
    let inv = int_inverse(n).ok_or_else(|| Error::Singular("lattice matrix is singular".into()))?;
    // L = N^{−T}
    let l: Vec<Vec<Q>> = (0..d).map(|i| (0..d).map(|j| inv[j][i].clone()).collect()).collect();
    let c = jet_linear_substitution(&g.jet, &l);
    let parts: Vec<Jet<Q>> = gamma_set(n)?
        .iter()
        .map(|gm| {
            let x = q_mat_vec(&inv, &gm.iter().map(|&v| qi(v)).collect::<Vec<_>>());
            let neg: Vec<Q> = x.iter().map(|v| -v).collect();
            jet_product(&c, &character_jet::<Q>(&neg, order)).unwrap()
        })
        .collect();
    MatchingJet::from_jet(Jet::row_from_scalars(&parts))
}

/// The scalar jet ĉ of a balanced construction.
pub fn balanced_scalar_jet(a: &MatrixFilter<Q>, n: &IntMatrix, order: u32) -> Result<Jet<Q>> {
    let spec = DilationSpec::new(2, a.dim())?;
    let g = matching_jet(a, &spec, order)?;
    let inv = int_inverse(n).ok_or_else(|| Error::Singular("lattice matrix is singular".into()))?;
    let d = a.dim();
    let l: Vec<Vec<Q>> = (0..d).map(|i| (0..d).map(|j| inv[j][i].clone()).collect()).collect();
    Ok(jet_linear_substitution(&g.jet, &l))
}

#[derive(Clone, Debug)]
pub struct SymmetrySpec {
    pub group: Vec<IntMatrix>,
    pub centres: Vec<Vec<Q>>,
    /// S_E for selected group elements (identity where absent).
    pub mixing: BTreeMap<usize, Mat<Q>>,
    /// Try signed permutations as S_E when the identity fails.
    pub search_mixing: bool,
}

impl SymmetrySpec {
    pub fn new(group: Vec<IntMatrix>, centres: Vec<Vec<Q>>) -> Self {
        SymmetrySpec { group, centres, mixing: BTreeMap::new(), search_mixing: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryWitness {
    pub element: IntMatrix,
    pub point: LatticePoint,
    pub block: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct SymmetryResult {
    pub holds: bool,
    pub witness: Option<SymmetryWitness>,
    /// S_{E^{−1}} actually used for each element, when not the identity.
    pub mixing_found: Vec<(usize, Mat<Q>)>,
}

fn int_inv_exact(e: &IntMatrix) -> Result<IntMatrix> {
    let inv = int_inverse(e).ok_or_else(|| Error::Precondition("group element is singular".into()))?;
    inv.iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    if v.is_integer() {
                        Ok(i64::try_from(v.to_integer()).unwrap())
                    } else {
                        Err(Error::Precondition("group element has no integer inverse".into()))
                    }
                })
                .collect()
        })
        .collect()
}

fn integer_shift(v: &[Q]) -> Option<LatticePoint> {
    v.iter().map(|x| if x.is_integer() { i64::try_from(x.to_integer()).ok() } else { None }).collect()
}

/// Compare â(E^Tξ) with the conjugated right-hand side for one E and one S.
fn check_element(
    a: &MatrixFilter<Q>,
    m: i64,
    e: &IntMatrix,
    centres: &[Vec<Q>],
    s: &Mat<Q>,
    s_inv: &Mat<Q>,
) -> Result<Option<(LatticePoint, (usize, usize))>> {
    let r = a.rows();
    int_inv_exact(e)?;
    let eq: Vec<Vec<Q>> = e.iter().map(|row| row.iter().map(|&v| qi(v)).collect()).collect();
    let ec: Vec<Vec<Q>> = centres.iter().map(|c| q_mat_vec(&eq, c)).collect();
    let mq = qi(m);
    // left: k ↦ a(E^{−1} k), i.e. entries moved to E k
    let lhs = a.remap(|k| int_mat_vec(e, k));
    let mut rhs_entries: Vec<(LatticePoint, Vec<Q>)> = Vec::new();
    for j in 0..r {
        for l in 0..r {
            for p in 0..r {
                let sjp = s.get(j, p);
                if sjp.is_zero() {
                    continue;
                }
                for qq in 0..r {
                    let sql = s_inv.get(qq, l);
                    if sql.is_zero() {
                        continue;
                    }
                    // t = m c_p − c_q − m E c_j + E c_l
                    let t: Vec<Q> = (0..a.dim())
                        .map(|i| &mq * &centres[p][i] - &centres[qq][i] - &mq * &ec[j][i] + &ec[l][i])
                        .collect();
                    let t = integer_shift(&t).ok_or_else(|| {
                        Error::Incompatible(format!("centre shifts are not lattice vectors for block ({}, {})", j + 1, l + 1))
                    })?;
                    let c = sjp * sql;
                    for (k, b) in a.iter_nonzero() {
                        let v = &b[p * r + qq];
                        if v.is_zero() {
                            continue;
                        }
                        let mut blk = vec![Q::zero(); r * r];
                        blk[j * r + l] = &c * v;
                        let pt: Vec<i64> = k.iter().zip(&t).map(|(x, y)| x - y).collect();
                        rhs_entries.push((pt, blk));
                    }
                }
            }
        }
    }
    let rhs = MatrixFilter::from_entries(a.dim(), r, r, rhs_entries);
    let diff = lhs.sub(&rhs)?;
    let first = diff.iter_nonzero().next().map(|(k, b)| {
        let pos = b.iter().position(|v| !v.is_zero()).unwrap();
        (k, (pos / r, pos % r))
    });
    Ok(first)
}

fn signed_permutations(r: usize) -> Vec<Mat<Q>> {
    fn perms(r: usize) -> Vec<Vec<usize>> {
        if r == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(r - 1) {
            for pos in 0..=p.len() {
                let mut np = p.clone();
                np.insert(pos, r - 1);
                out.push(np);
            }
        }
        out
    }
    let mut out = Vec::new();
    for p in perms(r) {
        for signs in 0..(1u32 << r) {
            let mut mtx = Mat::<Q>::zeros(r, r);
            for (i, &j) in p.iter().enumerate() {
                mtx.set(i, j, if signs >> i & 1 == 1 { qi(-1) } else { qi(1) });
            }
            out.push(mtx);
        }
    }
    out
}

/// Time-domain check of â(E^Tξ) = D_T(−mE^Tξ) S D_T(mξ) â(ξ) D_T(−ξ) S^{−1} D_T(E^Tξ).
pub fn check_symmetry(a: &MatrixFilter<Q>, spec: &DilationSpec, sym: &SymmetrySpec) -> Result<SymmetryResult> {
    let r = a.rows();
    if sym.centres.len() != r || sym.centres.iter().any(|c| c.len() != a.dim()) {
        return Err(Error::DimensionMismatch("one centre per component is required".into()));
    }
    if !is_group(&sym.group) {
        return Err(Error::Precondition("matrix set is not a group".into()));
    }
    let mut found = Vec::new();
    for (idx, e) in sym.group.iter().enumerate() {
        let s = sym.mixing.get(&idx).cloned().unwrap_or_else(|| Mat::identity(r));
        let s_inv = s.inverse().ok_or_else(|| Error::Precondition("mixing matrix is singular".into()))?;
        let res = check_element(a, spec.m, e, &sym.centres, &s, &s_inv)?;
        let Some((pt, blk)) = res else { continue };
        let mut rescued = false;
        if sym.search_mixing {
            for cand in signed_permutations(r) {
                let ci = cand.inverse().unwrap();
                if let Ok(None) = check_element(a, spec.m, e, &sym.centres, &cand, &ci) {
                    found.push((idx, cand));
                    rescued = true;
                    break;
                }
            }
        }
        if !rescued {
            return Ok(SymmetryResult {
                holds: false,
                witness: Some(SymmetryWitness { element: e.clone(), point: pt, block: (blk.0 + 1, blk.1 + 1) }),
                mixing_found: found,
            });
        }
    }
    Ok(SymmetryResult { holds: true, witness: None, mixing_found: found })
}

/// Closed under products and inverses, integer with |det| = 1.
pub fn is_group(g: &[IntMatrix]) -> bool {
    if g.is_empty() {
        return false;
    }
    let d = g[0].len();
    let contains = |m: &IntMatrix| g.iter().any(|x| x == m);
    g.iter().all(|e| int_det(e).abs() == 1 && e.len() == d)
        && g.iter().all(|a| g.iter().all(|b| contains(&int_mat_mul(a, b))))
        && g.iter().all(|e| int_inv_exact(e).map(|i| contains(&i)).unwrap_or(false))
}

fn with_negatives(mats: &[[[i64; 2]; 2]]) -> Vec<IntMatrix> {
    let mut out = Vec::new();
    for m in mats {
        let p: IntMatrix = m.iter().map(|r| r.to_vec()).collect();
        let n: IntMatrix = p.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        out.push(p);
        out.push(n);
    }
    out
}

pub fn group_d4() -> Vec<IntMatrix> {
    with_negatives(&[[[1, 0], [0, 1]], [[1, 0], [0, -1]], [[0, 1], [1, 0]], [[0, 1], [-1, 0]]])
}

pub fn group_d6() -> Vec<IntMatrix> {
    with_negatives(&[
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[-1, 1], [0, 1]],
        [[1, 0], [1, -1]],
        [[0, 1], [-1, 1]],
        [[1, -1], [1, 0]],
    ])
}

pub fn group_h() -> Vec<IntMatrix> {
    [
        [[1, 0], [0, 1]],
        [[0, -1], [1, -1]],
        [[-1, 1], [-1, 0]],
        [[0, -1], [-1, 0]],
        [[-1, 1], [0, 1]],
        [[1, 0], [1, -1]],
    ]
    .iter()
    .map(|m| m.iter().map(|r| r.to_vec()).collect())
    .collect()
}

pub fn builtin_group(name: &str) -> Option<Vec<IntMatrix>> {
    match name.to_ascii_uppercase().as_str() {
        "D4" => Some(group_d4()),
        "D6" => Some(group_d6()),
        "H" => Some(group_h()),
        "PM1" | "C2" => Some(vec![vec![vec![1]], vec![vec![-1]]]),
        _ => None,
    }
}

/// True iff N^{−1} E N ∈ G for every E ∈ G.
pub fn lattice_compatible(n: &IntMatrix, g: &[IntMatrix]) -> bool {
    let Some(inv) = int_inverse(n) else { return false };
    g.iter().all(|e| {
        let en = int_mat_mul(e, n);
        let prod: Vec<Vec<Q>> = inv
            .iter()
            .map(|row| (0..n.len()).map(|j| row.iter().zip(&en).fold(Q::zero(), |acc, (a, r)| acc + a * qi(r[j]))).collect())
            .collect();
        prod.iter().all(|r| r.iter().all(|v| v.is_integer()))
            && g.iter().any(|h| h.iter().zip(&prod).all(|(hr, pr)| hr.iter().zip(pr).all(|(x, y)| &qi(*x) == y)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lattice::{quincunx, sqrt3_matrix, MultiIndex};
    use crate::moments::jet_at_zero;

    #[test]
    fn spline_masks() {
        let h = bspline_filter(2);
        assert_eq!(h.entries().iter().map(|(_, v)| v[0].clone()).collect::<Vec<_>>(), vec![q(1, 4), q(1, 2), q(1, 4)]);
        let b4 = bspline_filter(4);
        assert_eq!(b4.entry(&[2], 0, 0), q(1, 16));
        assert_eq!(b4.entry(&[-1], 0, 0), q(4, 16));
        for o in [2, 4, 6, 8] {
            assert_eq!(bspline_filter(o).symbol_at_zero().get(0, 0), &qi(1));
        }
    }

    #[test]
    fn tensor_and_three_direction() {
        let h = bspline_filter(2);
        assert_eq!(tensor_filter(&h, &h).entry(&[0, 0], 0, 0), q(1, 4));
        let b4 = bspline_filter(4);
        let t = tensor_filter(&b4, &b4);
        assert_eq!(t.entry(&[0, 0], 0, 0), q(36, 256));
        let jt = jet_at_zero(&t, 2);
        let jb = jet_at_zero(&b4, 2);
        assert_eq!(jt.get(&MultiIndex(vec![2, 0]))[0], jb.get(&MultiIndex(vec![2]))[0].clone());
        let u1 = three_direction_filter(1);
        assert_eq!(u1.nnz_points(), 7);
        assert_eq!(u1.entry(&[0, 0], 0, 0), q(2, 8));
        assert_eq!(u1.symbol_at_zero().get(0, 0), &qi(1));
    }

    #[test]
    fn groups() {
        assert_eq!(group_d4().len(), 8);
        assert_eq!(group_d6().len(), 12);
        assert_eq!(group_h().len(), 6);
        for g in [group_d4(), group_d6(), group_h()] {
            assert!(is_group(&g));
        }
        assert!(group_h().iter().all(|e| group_d6().contains(e)));
        assert!(lattice_compatible(&quincunx(), &group_d4()));
        assert!(lattice_compatible(&sqrt3_matrix(), &group_d6()));
    }

    #[test]
    fn balanced_reproduces_printed_a4() {
        let b = balanced_from_scalar(&fixtures::tensor_bspline(4), &quincunx()).unwrap();
        assert_eq!(b, fixtures::a4().mask);
        assert_eq!(b.entry(&[0, 0], 0, 0), q(36, 256));
    }

    #[test]
    fn balanced_reproduces_printed_au() {
        let b = balanced_from_scalar(&three_direction_filter(2), &sqrt3_matrix()).unwrap();
        assert_eq!(b, fixtures::au2().mask);
        assert_eq!(b.entry(&[0, 0], 0, 0), q(5, 32));
        let b = balanced_from_scalar(&three_direction_filter(3), &sqrt3_matrix()).unwrap();
        assert_eq!(b, fixtures::au3().mask);
        assert_eq!(b.entry(&[0, 0], 0, 0), q(56, 512));
    }

    #[test]
    fn balanced_delta_selects_cosets() {
        let id2: IntMatrix = vec![vec![2, 0], vec![0, 2]];
        let b = balanced_from_scalar(&MatrixFilter::delta(2, 1), &id2).unwrap();
        assert_eq!(b.rows(), 4);
        // diagonal entries are δ(2k − γ_j): only γ_1 = 0 hits the lattice
        assert_eq!(b.entry(&[0, 0], 0, 0), qi(1));
        assert_eq!(b.nnz_points(), b.iter_nonzero().count());
    }

    #[test]
    fn a4_scalar_jet() {
        let c = balanced_scalar_jet(&fixtures::tensor_bspline(4), &quincunx(), 3).unwrap();
        // ĉ_4 = 1 + (ξ1² + ξ2²)/12: Taylor coefficient −T/2 = 1/12
        assert_eq!(c.get(&MultiIndex(vec![2, 0]))[0], q(-1, 6));
        assert_eq!(c.get(&MultiIndex(vec![1, 1]))[0], qi(0));
    }

    #[test]
    fn symmetry_of_a4_and_perturbation() {
        let s = DilationSpec::new(2, 2).unwrap();
        let sym = SymmetrySpec::new(group_d4(), fixtures::quincunx_centres());
        let a = fixtures::a4().mask;
        assert!(check_symmetry(&a, &s, &sym).unwrap().holds);
        let mut e = a.entries();
        e[3].1[1] += q(1, 1000);
        let bad = MatrixFilter::from_entries(2, 2, 2, e);
        let res = check_symmetry(&bad, &s, &sym).unwrap();
        assert!(!res.holds && res.witness.is_some());
    }

    #[test]
    fn symmetry_incompatible_centres() {
        let s = DilationSpec::new(2, 2).unwrap();
        let sym = SymmetrySpec::new(group_d4(), vec![vec![q(1, 3), qi(0)], vec![qi(0), qi(0)]]);
        assert!(matches!(check_symmetry(&fixtures::a4().mask, &s, &sym), Err(Error::Incompatible(_))));
    }
}
