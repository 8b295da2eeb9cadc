//! Matching-filter jets, sum rules and the eigenvalue condition on â(0).

use crate::error::{Error, Result};
use crate::filter::MatrixFilter;
use crate::lattice::{omega_set, DilationSpec, LatticePoint, MultiIndex};
use crate::linalg::{root_one_multiplicity, Mat};
use crate::moments::{character_jet, jet_at_frequency, jet_at_zero, jet_product, jet_scale_argument, Jet};
use crate::scalar::{Scalar, C64, Q};
use num::Zero;

/// The Fourier jet of a matching filter υ (1×r) at the origin.
#[derive(Clone, Debug)]
pub struct MatchingJet<T> {
    pub jet: Jet<T>,
    /// Which coordinate of υ̂(0) was scaled to 1.
    pub pinned: usize,
}

impl<T: Scalar> PartialEq for MatchingJet<T> {
    fn eq(&self, other: &Self) -> bool {
        self.pinned == other.pinned && self.jet == other.jet
    }
}

impl<T: Scalar> MatchingJet<T> {
    /// Wrap an explicit row jet; records its first nonzero coordinate at 0.
    pub fn from_jet(jet: Jet<T>) -> Result<Self> {
        if jet.rows() != 1 {
            return Err(Error::DimensionMismatch("matching jet must be a row".into()));
        }
        let pinned = jet
            .at(0)
            .iter()
            .position(|v| !v.is_negligible())
            .ok_or_else(|| Error::Precondition("matching jet vanishes at the origin".into()))?;
        Ok(MatchingJet { jet, pinned })
    }

    pub fn order(&self) -> u32 {
        self.jet.order()
    }
    pub fn dim(&self) -> usize {
        self.jet.dim()
    }
    pub fn r(&self) -> usize {
        self.jet.cols()
    }
    /// υ̂(0).
    pub fn value(&self) -> Vec<T> {
        self.jet.at(0).to_vec()
    }
    pub fn truncate(&self, order: u32) -> Self {
        MatchingJet { jet: self.jet.truncate(order), pinned: self.pinned }
    }
    pub fn scale(&self, c: &T) -> Self {
        MatchingJet { jet: self.jet.scale(c), pinned: self.pinned }
    }
}

#[derive(Clone, Debug)]
pub struct EigenReport {
    pub eigenvalues: Vec<C64>,
    /// det(λI − â(0)) low to high, in the mask's own arithmetic.
    pub char_poly: Vec<C64>,
    pub char_poly_exact: Option<Vec<Q>>,
    pub simple_one: bool,
    pub max_other_modulus: f64,
    /// m_dilation^{−m}
    pub bound: f64,
    pub others_below: bool,
    /// Some other eigenvalue sits within 1e−10 of the bound.
    pub near_bound: bool,
}

impl EigenReport {
    pub fn holds(&self) -> bool {
        self.simple_one && self.others_below
    }
}

fn exact_char_poly<T: Scalar>(poly: &[T]) -> Option<Vec<Q>> {
    // recover exact rationals only when the backend is exact
    if !T::EXACT {
        return None;
    }
    let any: &dyn std::any::Any = &poly.to_vec();
    any.downcast_ref::<Vec<Q>>().cloned()
}

/// 1 simple, other eigenvalues of â(0) below m^{−order} in modulus.
pub fn check_eigen_condition<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, order: u32) -> Result<EigenReport> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch("mask must be square".into()));
    }
    let a0 = a.symbol_at_zero();
    let poly = a0.char_poly();
    let mult = root_one_multiplicity(&poly);
    let eig = a0.eigenvalues_c64();
    // drop the eigenvalue closest to 1 when it is simple
    let mut others: Vec<C64> = eig.clone();
    if mult >= 1 {
        if let Some((i, _)) = others
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - C64::new(1.0, 0.0)).norm().total_cmp(&(y.1 - C64::new(1.0, 0.0)).norm()))
        {
            others.remove(i);
        }
    }
    let max_other = others.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let bound = (spec.m as f64).powi(-(order as i32));
    Ok(EigenReport {
        eigenvalues: eig,
        char_poly: poly.iter().map(|c| c.to_c64()).collect(),
        char_poly_exact: exact_char_poly(&poly),
        simple_one: mult == 1,
        max_other_modulus: max_other,
        bound,
        others_below: others.iter().all(|z| z.norm() < bound),
        near_bound: others.iter().any(|z| (z.norm() - bound).abs() <= 1e-10),
    })
}

/// υ̂ through order `m` by the degree-by-degree recursion
/// T_μ(υ)(I − m^{|μ|} â(0)) = Σ_{ν<μ} binom(μ,ν) m^{|ν|} T_ν(υ) T_{μ−ν}(a).
pub fn matching_jet<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, m: u32) -> Result<MatchingJet<T>> {
    let r = a.rows();
    if a.cols() != r {
        return Err(Error::DimensionMismatch("mask must be square".into()));
    }
    if spec.d != a.dim() {
        return Err(Error::DimensionMismatch("dilation dimension differs from mask dimension".into()));
    }
    let d = a.dim();
    let a0 = a.symbol_at_zero();
    let poly = a0.char_poly();
    if root_one_multiplicity(&poly) != 1 {
        return Err(Error::NotSimple);
    }
    let eye = Mat::<T>::identity(r);
    let left = a0.sub(&eye).left_null_space();
    if left.len() != 1 {
        return Err(Error::NotSimple);
    }
    let mut y0 = left.into_iter().next().unwrap();
    let pinned = y0.iter().position(|v| !v.is_negligible()).ok_or(Error::NotSimple)?;
    let p = y0[pinned].clone();
    for v in y0.iter_mut() {
        *v = v.clone() / p.clone();
    }
    let ajet = jet_at_zero(a, m);
    let mut jet = Jet::zero(d, m, 1, r);
    jet.set(&MultiIndex::zero(d), y0);
    let mt = T::from_i64(spec.m);
    let idx = jet.indices().to_vec();
    let mut inverse_at: Vec<Option<Mat<T>>> = vec![None; m as usize + 1];
    for mu in idx.iter().skip(1) {
        let q = mu.order();
        if inverse_at[q as usize].is_none() {
            let lhs = eye.sub(&a0.scale(&mt.pow_u32(q)));
            let inv = lhs.inverse().ok_or(Error::EigenViolated { degree: q })?;
            inverse_at[q as usize] = Some(inv);
        }
        let mut rhs = vec![T::zero(); r];
        for nu in mu.lower_set() {
            if &nu == mu {
                continue;
            }
            let rest = mu.checked_sub(&nu).unwrap();
            let c = T::from_q(&Q::from_integer(mu.binom(&nu).into())) * mt.pow_u32(nu.order());
            let tv = jet.get(&nu).to_vec();
            let ta = ajet.get(&rest);
            for j in 0..r {
                let mut s = T::zero();
                for i in 0..r {
                    T::mul_acc(&mut s, &tv[i], &ta[i * r + j]);
                }
                T::mul_acc(&mut rhs[j], &c, &s);
            }
        }
        let inv = inverse_at[q as usize].as_ref().unwrap();
        let mut out = vec![T::zero(); r];
        for j in 0..r {
            for i in 0..r {
                T::mul_acc(&mut out[j], &rhs[i], inv.get(i, j));
            }
        }
        jet.set(mu, out);
    }
    Ok(MatchingJet { jet, pinned })
}

/// Outcome of a sum-rule check; `failure` carries the first failing (γ, μ).
#[derive(Clone, Debug, PartialEq)]
pub struct SumRuleCheck {
    pub holds: bool,
    pub failure: Option<(LatticePoint, MultiIndex)>,
}

/// Per-coset jets of e^{−iγ·ξ} υ̂(mξ) â^{[γ]}(mξ) − m^{−d} υ̂(ξ).
fn coset_defects<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, v: &MatchingJet<T>, m: u32) -> Result<Vec<(LatticePoint, Jet<T>)>> {
    if v.order() < m {
        return Err(Error::Precondition(format!("matching jet has order {} below {m}", v.order())));
    }
    let vj = v.jet.truncate(m);
    let vm = jet_scale_argument(&vj, spec.m);
    let target = vj.scale(&(T::one() / T::from_i64(spec.det())));
    let mut out = Vec::new();
    for (gamma, part) in a.coset_split(spec) {
        let gq: Vec<Q> = gamma.iter().map(|&g| Q::from_integer(g.into())).collect();
        let ch = character_jet::<T>(&gq, m);
        let aj = jet_scale_argument(&jet_at_zero(&part, m), spec.m);
        let prod = jet_product(&ch, &jet_product(&vm, &aj)?)?;
        out.push((gamma, prod.sub(&target)));
    }
    Ok(out)
}

/// Lowest total degree ≤ m at which some coset condition fails.
fn lowest_failure<T: Scalar>(defects: &[(LatticePoint, Jet<T>)]) -> Option<(LatticePoint, MultiIndex)> {
    let mut best: Option<(LatticePoint, MultiIndex)> = None;
    for (g, j) in defects {
        if let Some(mu) = j.indices().iter().zip(0..).find(|(_, p)| j.at(*p).iter().any(|x| !x.is_negligible())).map(|(m, _)| m.clone()) {
            if best.as_ref().is_none_or(|(_, b)| mu.order() < b.order()) {
                best = Some((g.clone(), mu));
            }
        }
    }
    best
}

/// Exact coset-form check of sum rules of order m+1 against the given matching jet.
pub fn check_sum_rules<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, v: &MatchingJet<T>, m: u32) -> Result<SumRuleCheck> {
    let defects = coset_defects(a, spec, v, m)?;
    let failure = lowest_failure(&defects);
    Ok(SumRuleCheck { holds: failure.is_none(), failure })
}

/// Float check in the frequency form: υ̂(mξ)â(ξ + 2πω) = δ(ω)υ̂(ξ) + O(‖ξ‖^{m+1}).
pub fn check_sum_rules_omega<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, v: &MatchingJet<T>, m: u32, tol: f64) -> Result<bool> {
    if v.order() < m {
        return Err(Error::Precondition(format!("matching jet has order {} below {m}", v.order())));
    }
    let vj = v.jet.truncate(m).map(|x| x.to_c64());
    let vm = jet_scale_argument(&vj, spec.m);
    let scale = vj.indices().iter().flat_map(|mu| vj.get(mu).iter().map(|z| z.norm())).fold(1.0, f64::max);
    for omega in omega_set(spec) {
        let fj = jet_at_frequency(a, &omega, m);
        let lhs = jet_product(&vm, &fj)?;
        let is_zero_freq = omega.iter().all(|w| w.is_zero());
        for mu in lhs.indices() {
            for (i, z) in lhs.get(mu).iter().enumerate() {
                let want = if is_zero_freq { vj.get(mu)[i] } else { C64::new(0.0, 0.0) };
                let mag = z.norm().max(want.norm()).max(scale);
                if (z - want).norm() > tol * mag {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug)]
pub struct SumRuleOrder<T> {
    /// The sum-rule order m_a.
    pub order: u32,
    /// Matching jet through order max(m_a − 1, 0).
    pub jet: MatchingJet<T>,
    /// Why the search stopped.
    pub diagnostic: String,
}

pub const DEFAULT_SUM_RULE_CAP: u32 = 20;

/// Largest m+1 ≤ cap such that sum rules of order m+1 hold.
pub fn sum_rule_order<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, cap: u32) -> Result<SumRuleOrder<T>> {
    if cap < 1 {
        return Err(Error::Precondition("sum-rule cap must be at least 1".into()));
    }
    // the recursion may stop early at a singular degree q; then orders above q are not certifiable
    let mut top = cap - 1;
    let mut stop_note = None;
    let jet = loop {
        match matching_jet(a, spec, top) {
            Ok(j) => break j,
            Err(Error::EigenViolated { degree }) => {
                stop_note = Some(format!("matching recursion singular at degree {degree}"));
                top = degree - 1;
            }
            Err(e) => return Err(e),
        }
    };
    let defects = coset_defects(a, spec, &jet, top)?;
    match lowest_failure(&defects) {
        Some((g, mu)) => {
            let order = mu.order();
            Ok(SumRuleOrder {
                order,
                jet: jet.truncate(order.saturating_sub(1)),
                diagnostic: format!("coset {g:?} fails at multi-index {mu}"),
            })
        }
        None => Ok(SumRuleOrder {
            order: top + 1,
            jet: jet.truncate(top),
            diagnostic: stop_note.unwrap_or_else(|| format!("search cap {cap} reached")),
        }),
    }
}

/// Deviation of the Riemann-sum jet of υ̂φ̂ at 2πk from δ(k)δ(ν).
#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub entries: Vec<(LatticePoint, MultiIndex, f64)>,
    pub max_deviation: f64,
    pub passed: bool,
    pub note: Option<String>,
}

/// Checks υ̂(ξ)φ̂(ξ + 2πk) = δ(k) + O(‖ξ‖^{m+1}) from samples of φ.
pub fn verify_phi_admissibility<T: Scalar>(
    phi: &crate::scheme::SampledGrid<f64>,
    v: &MatchingJet<T>,
    m: u32,
    freqs: &[LatticePoint],
    tol: f64,
) -> Result<AdmissibilityReport> {
    if v.order() < m {
        return Err(Error::Precondition("matching jet order below requested order".into()));
    }
    if phi.comps != v.r() {
        return Err(Error::DimensionMismatch("grid components differ from matching jet length".into()));
    }
    let d = phi.dim();
    let h = (phi.m as f64).powi(-(phi.level as i32));
    let hd = h.powi(d as i32);
    let vj = v.jet.truncate(m).map(|x| x.to_c64());
    let mut entries = Vec::new();
    let mut worst = 0.0f64;
    for k in freqs {
        // T-jet of φ̂ at 2πk: ∫ x^ν φ(x) e^{−2πik·x} dx
        let mut pj = Jet::<C64>::zero(d, m, phi.comps, 1);
        let idx = pj.indices().to_vec();
        let mut blocks: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); phi.comps]; idx.len()];
        for (pt, vals) in phi.iter() {
            if vals.iter().all(|x| *x == 0.0) {
                continue;
            }
            let x: Vec<f64> = pt.iter().map(|&c| c as f64 * h).collect();
            let th: f64 = -2.0 * std::f64::consts::PI * k.iter().zip(&x).map(|(a, b)| *a as f64 * b).sum::<f64>();
            let ph = C64::new(th.cos(), th.sin()) * hd;
            for (p, nu) in idx.iter().enumerate() {
                let mono: f64 = nu.0.iter().zip(&x).map(|(&e, xi)| xi.powi(e as i32)).product();
                for (c, val) in vals.iter().enumerate() {
                    blocks[p][c] += ph * mono * *val;
                }
            }
        }
        for (p, nu) in idx.iter().enumerate() {
            pj.set(nu, blocks[p].clone());
        }
        let prod = jet_product(&vj, &pj)?;
        let zero_k = k.iter().all(|&c| c == 0);
        for nu in prod.indices() {
            let want = if zero_k && nu.is_zero() { 1.0 } else { 0.0 };
            let dev = (prod.get(nu)[0] - C64::new(want, 0.0)).norm();
            worst = worst.max(dev);
            entries.push((k.clone(), nu.clone(), dev));
        }
    }
    let note = if phi.level < 4 { Some("grid is coarse; Riemann sums are crude below level 4".into()) } else { None };
    Ok(AdmissibilityReport { entries, max_deviation: worst, passed: worst <= tol, note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::bspline_filter;
    use crate::fixtures;
    use crate::scalar::{q, qi};

    fn spec2() -> DilationSpec {
        DilationSpec::new(2, 2).unwrap()
    }

    #[test]
    fn eigen_reports() {
        let hat = bspline_filter(2);
        let rep = check_eigen_condition(&hat, &DilationSpec::new(2, 1).unwrap(), 1).unwrap();
        assert!(rep.simple_one && rep.others_below && rep.eigenvalues.len() == 1);
        let ex1 = fixtures::ex1().mask;
        assert!(check_eigen_condition(&ex1, &spec2(), 3).unwrap().simple_one);
        let id = MatrixFilter::<Q>::delta(2, 2).scale(&q(1, 4));
        assert!(!check_eigen_condition(&id, &spec2(), 0).unwrap().simple_one);
    }

    #[test]
    fn ex1_matching_jet_is_first_unit_vector() {
        let j = matching_jet(&fixtures::ex1().mask, &spec2(), 3).unwrap();
        for mu in j.jet.indices() {
            let want = if mu.is_zero() { vec![qi(1), qi(0)] } else { vec![qi(0), qi(0)] };
            assert_eq!(j.jet.get(mu), &want[..], "{mu}");
        }
    }

    #[test]
    fn scalar_bspline_jet_is_reciprocal_symbol() {
        // 1/φ̂ = 1 + ξ²/6 + … for the cubic B-spline, so T_2 = −1/3
        let a = bspline_filter(4);
        let j = matching_jet(&a, &DilationSpec::new(2, 1).unwrap(), 3).unwrap();
        assert_eq!(j.jet.get(&MultiIndex(vec![2]))[0], q(-1, 3));
        assert_eq!(j.jet.get(&MultiIndex(vec![1]))[0], qi(0));
    }

    #[test]
    fn sum_rule_checks() {
        let s = spec2();
        let a = fixtures::ex1().mask;
        let j = matching_jet(&a, &s, 4).unwrap();
        assert!(check_sum_rules(&a, &s, &j, 3).unwrap().holds);
        let fail = check_sum_rules(&a, &s, &j, 4).unwrap();
        assert!(!fail.holds && fail.failure.unwrap().1.order() == 4);
        let haar = fixtures::haar();
        let s1 = DilationSpec::new(2, 1).unwrap();
        let jh = matching_jet(&haar, &s1, 1).unwrap();
        assert!(check_sum_rules(&haar, &s1, &jh, 0).unwrap().holds);
        assert!(!check_sum_rules(&haar, &s1, &jh, 1).unwrap().holds);
        assert!(check_sum_rules_omega(&haar, &s1, &jh, 0, 1e-9).unwrap());
        assert!(!check_sum_rules_omega(&haar, &s1, &jh, 1, 1e-9).unwrap());
    }

    #[test]
    fn orders_and_degenerate_masks() {
        let s1 = DilationSpec::new(2, 1).unwrap();
        assert_eq!(sum_rule_order(&bspline_filter(4), &s1, 20).unwrap().order, 4);
        assert_eq!(sum_rule_order(&fixtures::haar(), &s1, 20).unwrap().order, 1);
        let id = MatrixFilter::<Q>::delta(1, 2).scale(&q(1, 2));
        assert!(matches!(sum_rule_order(&id, &s1, 20), Err(Error::NotSimple)));
        // â(0) = diag(1, 1/2): I − 2â(0) is singular
        let w = MatrixFilter::from_entries(1, 2, 2, [(vec![0], vec![q(1, 2), qi(0), qi(0), q(1, 4)]), (vec![1], vec![q(1, 2), qi(0), qi(0), q(1, 4)])]);
        assert!(matches!(matching_jet(&w, &s1, 2), Err(Error::EigenViolated { degree: 1 })));
    }

    #[test]
    fn ternary_dilation_omega_form() {
        let s3 = DilationSpec::new(3, 1).unwrap();
        // (1 + z + z²)²/9 has two sum rules for dilation 3
        let b = MatrixFilter::scalar(1, (0..5).map(|k| (vec![k], q([1, 2, 3, 2, 1][k as usize], 9))));
        let o = sum_rule_order(&b, &s3, 10).unwrap();
        assert_eq!(o.order, 2);
        assert!(check_sum_rules_omega(&b, &s3, &o.jet, 1, 1e-9).unwrap());
    }
}
