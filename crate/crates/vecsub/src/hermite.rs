//! Lagrange, Hermite and generalized Hermite subdivision schemes (dilation 2).

use crate::error::{Error, Result};
use crate::filter::{subdivision_apply, MatrixFilter, NormP};
use crate::lattice::{DilationSpec, MultiIndex};
use crate::linalg::{poly_eval, root_one_multiplicity};
use crate::moments::sign_pow;
use crate::scalar::{Scalar, Q};
use crate::scheme::SampledGrid;
use crate::smoothness::{rho_estimate, SmEstimate};
use crate::sumrules::{sum_rule_order, MatchingJet, DEFAULT_SUM_RULE_CAP};
use num::{Integer, One, Signed};
use std::any::Any;

/// Λ = {ν^1, …, ν^r} with ν^1 = 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HermiteType {
    pub nus: Vec<MultiIndex>,
}

impl HermiteType {
    pub fn new(nus: Vec<MultiIndex>) -> Result<Self> {
        let first = nus.first().ok_or_else(|| Error::Precondition("empty Hermite type".into()))?;
        if !first.is_zero() {
            return Err(Error::Precondition("the first multi-index of a Hermite type must be 0".into()));
        }
        let d = first.dim();
        if nus.iter().any(|n| n.dim() != d) {
            return Err(Error::DimensionMismatch("multi-indices of different lengths".into()));
        }
        Ok(HermiteType { nus })
    }

    /// Λ = {0, …, 0}.
    pub fn lagrange(r: usize, d: usize) -> Self {
        HermiteType { nus: vec![MultiIndex::zero(d); r] }
    }

    /// Parse `0,0;1,0;0,1`.
    pub fn parse(s: &str) -> Result<Self> {
        let nus = s
            .split(';')
            .map(|part| {
                part.split(',')
                    .map(|x| x.trim().parse::<u32>().map_err(|e| Error::parse(1, 1, format!("bad multi-index `{part}`: {e}"))))
                    .collect::<Result<Vec<u32>>>()
                    .map(MultiIndex)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(nus)
    }

    pub fn r(&self) -> usize {
        self.nus.len()
    }

    /// m̃ = max |ν^l|.
    pub fn m_tilde(&self) -> u32 {
        self.nus.iter().map(|n| n.order()).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct LambdaCheck<T> {
    pub holds: bool,
    /// c = υ̂_1(0), the constant in υ̂ = c[(iξ)^{ν^1}, …] + O.
    pub scale: Option<T>,
    /// First (component, α) with a wrong coefficient.
    pub failure: Option<(usize, MultiIndex)>,
}

/// υ̂_l = c (iξ)^{ν^l} + O(‖ξ‖^{|ν^l|+1}) for every l, with one constant c ≠ 0.
///
/// In T-normalization this reads T_α(υ_l) = c (−1)^{|ν^l|} ν^l! δ(α − ν^l) for |α| ≤ |ν^l|.
pub fn lambda_matching_check<T: Scalar>(v: &MatchingJet<T>, lam: &HermiteType) -> Result<LambdaCheck<T>> {
    if lam.r() != v.r() {
        return Err(Error::DimensionMismatch("Hermite type length differs from the matching jet".into()));
    }
    if v.order() < lam.m_tilde() {
        return Err(Error::Precondition(format!("matching jet order {} below m̃ = {}", v.order(), lam.m_tilde())));
    }
    let c = v.jet.at(0)[0].clone();
    if c.is_negligible() {
        return Ok(LambdaCheck { holds: false, scale: None, failure: Some((0, MultiIndex::zero(v.dim()))) });
    }
    for (l, nu) in lam.nus.iter().enumerate() {
        for alpha in v.jet.indices() {
            if alpha.order() > nu.order() {
                break;
            }
            let want = if alpha == nu {
                c.clone() * sign_pow::<T>(nu.order()) * T::from_q(&nu.factorial_q())
            } else {
                T::zero()
            };
            if !v.jet.get(alpha)[l].approx_eq(&want) {
                return Ok(LambdaCheck { holds: false, scale: Some(c), failure: Some((l, alpha.clone())) });
            }
        }
    }
    Ok(LambdaCheck { holds: true, scale: Some(c), failure: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GhsdVerdict {
    Sufficient,
    NecessaryFail,
    Inconclusive,
}

impl std::fmt::Display for GhsdVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GhsdVerdict::Sufficient => "SUFFICIENT",
            GhsdVerdict::NecessaryFail => "NECESSARY-FAIL",
            GhsdVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug)]
pub struct GhsdReport {
    pub verdict: GhsdVerdict,
    pub sum_rule_order: Option<u32>,
    pub lambda_holds: Option<bool>,
    pub sm_inf: Option<SmEstimate>,
    pub reasons: Vec<String>,
    /// Hypotheses that the checker cannot decide.
    pub assumptions: Vec<String>,
}

/// Some n ≥ 1 with 2^{−n} a root of det(λI − â(0)).
fn dyadic_eigenvalue<T: Scalar>(poly: &[T]) -> Option<u32> {
    let limit = if T::EXACT { exact_dyadic_bound(poly).unwrap_or(64) } else { 60 };
    let mut x = T::one();
    let half = T::one() / T::from_i64(2);
    let scale = poly.iter().map(|c| c.modulus()).fold(1.0, f64::max);
    for n in 1..=limit {
        x = x * half.clone();
        let val = poly_eval(poly, &x);
        let zero = if T::EXACT { val.is_negligible() } else { val.modulus() <= 1e-9 * scale };
        if zero {
            return Some(n);
        }
    }
    None
}

/// A dyadic root 2^{−n} of a rational monic polynomial needs 2^n | lcm of denominators.
fn exact_dyadic_bound<T: Scalar>(poly: &[T]) -> Option<u32> {
    let mut lcm = num::BigInt::one();
    for c in poly {
        let q = (c as &dyn Any).downcast_ref::<Q>()?;
        lcm = lcm.lcm(q.denom());
    }
    let mut n = 0u32;
    let two = num::BigInt::from(2);
    while (&lcm % &two).is_zero() && lcm.is_positive() {
        lcm /= &two;
        n += 1;
    }
    Some(n.max(1))
}

use num::Zero;

/// Verdict for a type-Λ scheme to converge with C^m limits.
pub fn ghsd_convergence_check<T: Scalar>(a: &MatrixFilter<T>, lam: &HermiteType, m: u32, n_max: u32) -> Result<GhsdReport> {
    let d = a.dim();
    let spec = DilationSpec::new(2, d)?;
    if lam.r() != a.rows() {
        return Err(Error::DimensionMismatch("Hermite type length differs from mask size".into()));
    }
    let mt = lam.m_tilde();
    if m < mt {
        return Err(Error::Precondition(format!("target m = {m} below m̃ = {mt}")));
    }
    let mut rep = GhsdReport {
        verdict: GhsdVerdict::Inconclusive,
        sum_rule_order: None,
        lambda_holds: None,
        sm_inf: None,
        reasons: Vec::new(),
        assumptions: vec![format!("φ ∈ C^{m} is certified only through sm_∞ > {m}")],
    };
    let poly = a.symbol_at_zero().char_poly();
    if root_one_multiplicity(&poly) != 1 {
        rep.verdict = GhsdVerdict::NecessaryFail;
        rep.reasons.push("1 is not a simple eigenvalue of â(0)".into());
        return Ok(rep);
    }
    if let Some(n) = dyadic_eigenvalue(&poly) {
        rep.verdict = GhsdVerdict::NecessaryFail;
        rep.reasons.push(format!("2^-{n} is an eigenvalue of â(0)"));
        return Ok(rep);
    }
    let sr = sum_rule_order(a, &spec, DEFAULT_SUM_RULE_CAP.max(mt + 2))?;
    rep.sum_rule_order = Some(sr.order);
    if sr.order < 1 {
        rep.verdict = GhsdVerdict::NecessaryFail;
        rep.reasons.push("no sum rules".into());
        return Ok(rep);
    }
    if sr.order < mt + 1 {
        rep.reasons.push(format!("sum rules of order {} < m̃ + 1 = {}", sr.order, mt + 1));
        return Ok(rep);
    }
    let lc = lambda_matching_check(&sr.jet, lam)?;
    rep.lambda_holds = Some(lc.holds);
    if !lc.holds {
        rep.verdict = GhsdVerdict::NecessaryFail;
        let (l, alpha) = lc.failure.unwrap();
        rep.reasons.push(format!("matching jet component {} has the wrong coefficient at {alpha}", l + 1));
        return Ok(rep);
    }
    let est = rho_estimate(a, &spec, &sr.jet, sr.order, NormP::Inf, n_max)?;
    let sm = SmEstimate { p: NormP::Inf, value: est.sm(), stabilized: est.stabilized, n_max: est.n_max, sum_rule_order: sr.order, rho: est };
    if sm.stabilized && sm.value > m as f64 {
        rep.verdict = GhsdVerdict::Sufficient;
        rep.reasons.push(format!("sm_∞ ≈ {:.4} > {m}", sm.value));
    } else {
        rep.reasons.push(format!(
            "sm_∞ ≈ {:.4}{} does not certify C^{m}",
            sm.value,
            if sm.stabilized { "" } else { " (not stabilized)" }
        ));
    }
    if sm.value > 0.0 {
        rep.assumptions.push("sm_∞ > m from necessity additionally needs stable integer shifts".into());
    }
    rep.sm_inf = Some(sm);
    Ok(rep)
}

/// The r sequences 2^{|ν^l| n} [S^n v] e_l at level n.
pub fn run_hermite<T: Scalar>(
    a: &MatrixFilter<T>,
    spec: &DilationSpec,
    lam: &HermiteType,
    v: &MatrixFilter<T>,
    n: u32,
) -> Result<Vec<SampledGrid<T>>> {
    if spec.m != 2 {
        return Err(Error::Precondition(format!("Hermite schemes use dilation 2, got {}", spec.m)));
    }
    if lam.r() != a.rows() || v.rows() != 1 || v.cols() != a.rows() {
        return Err(Error::DimensionMismatch("data, mask and Hermite type sizes differ".into()));
    }
    let mut w = v.clone();
    for _ in 0..n {
        w = subdivision_apply(a, spec, &w)?;
    }
    Ok(lam
        .nus
        .iter()
        .enumerate()
        .map(|(l, nu)| {
            let s = T::from_i64(2).pow_u32(nu.order() * n);
            SampledGrid::from_filter(w.component(0, l).scale(&s), n, 2, None)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::moments::Jet;
    use crate::scalar::{q, qi};
    use crate::sumrules::matching_jet;

    fn herm_jet() -> MatchingJet<Q> {
        // [1, iξ1, iξ2]: T_{e1}(υ_2) = −1, T_{e2}(υ_3) = −1
        let mut j = Jet::<Q>::zero(2, 2, 1, 3);
        j.set(&MultiIndex(vec![0, 0]), vec![qi(1), qi(0), qi(0)]);
        j.set(&MultiIndex(vec![1, 0]), vec![q(3, 7), qi(-1), qi(0)]);
        j.set(&MultiIndex(vec![0, 1]), vec![qi(0), qi(0), qi(-1)]);
        MatchingJet::from_jet(j).unwrap()
    }

    #[test]
    fn hermite_jet_accepted() {
        let lam = HermiteType::parse("0,0;1,0;0,1").unwrap();
        let c = lambda_matching_check(&herm_jet(), &lam).unwrap();
        assert!(c.holds);
        assert_eq!(c.scale, Some(qi(1)));
        let lag = HermiteType::lagrange(3, 2);
        assert!(!lambda_matching_check(&herm_jet(), &lag).unwrap().holds);
    }

    #[test]
    fn lagrange_checks() {
        let mut j = Jet::<Q>::zero(1, 1, 1, 2);
        j.set(&MultiIndex(vec![0]), vec![qi(1), qi(1)]);
        let v = MatchingJet::from_jet(j).unwrap();
        assert!(lambda_matching_check(&v, &HermiteType::lagrange(2, 1)).unwrap().holds);

        let spec = DilationSpec::new(2, 2).unwrap();
        let v = matching_jet(&fixtures::ex1().mask, &spec, 1).unwrap();
        assert!(!lambda_matching_check(&v, &HermiteType::lagrange(2, 2)).unwrap().holds);
    }

    #[test]
    fn a4_lagrange_type() {
        // both components are 1 + O(ξ): the constant-scale form holds through order 0
        let spec = DilationSpec::new(2, 2).unwrap();
        let v = matching_jet(&fixtures::a4().mask, &spec, 3).unwrap();
        assert!(lambda_matching_check(&v, &HermiteType::lagrange(2, 2)).unwrap().holds);
        let lam = HermiteType::new(vec![MultiIndex::zero(2), MultiIndex(vec![1, 0])]).unwrap();
        assert!(!lambda_matching_check(&v, &lam).unwrap().holds);
    }

    #[test]
    fn bad_types() {
        assert!(HermiteType::parse("1,0;0,0").is_err());
        assert!(HermiteType::parse("0,0;x").is_err());
        assert_eq!(HermiteType::parse("0,0;1,0;0,2").unwrap().m_tilde(), 2);
    }

    #[test]
    fn not_simple_is_necessary_fail() {
        let h = fixtures::hat();
        let z = MatrixFilter::<Q>::zero(1, 1, 1);
        let a = MatrixFilter::from_components(&[vec![h.clone(), z.clone()], vec![z, h]]);
        let r = ghsd_convergence_check(&a, &HermiteType::lagrange(2, 1), 0, 8).unwrap();
        assert_eq!(r.verdict, GhsdVerdict::NecessaryFail);
    }

    #[test]
    fn dyadic_eigenvalue_detected() {
        let a = MatrixFilter::from_entries(1, 2, 2, [(vec![0], vec![qi(1), qi(0), qi(0), q(1, 8)])]);
        let r = ghsd_convergence_check(&a, &HermiteType::lagrange(2, 1), 0, 8).unwrap();
        assert_eq!(r.verdict, GhsdVerdict::NecessaryFail);
        assert!(r.reasons[0].contains("2^-3"));
    }

    #[test]
    fn scalar_cubic_sufficient() {
        let a = crate::constructions::bspline_filter(4);
        let r = ghsd_convergence_check(&a, &HermiteType::lagrange(1, 1), 2, 16).unwrap();
        assert_eq!(r.verdict, GhsdVerdict::Sufficient);
        let r = ghsd_convergence_check(&a, &HermiteType::lagrange(1, 1), 3, 16).unwrap();
        assert_eq!(r.verdict, GhsdVerdict::Inconclusive);
    }

    #[test]
    fn run_hermite_scaling() {
        let spec = DilationSpec::new(2, 1).unwrap();
        let h = fixtures::hat();
        let z = MatrixFilter::<Q>::zero(1, 1, 1);
        let a = MatrixFilter::from_components(&[vec![h.clone(), z.clone()], vec![z, h]]);
        let v = MatrixFilter::from_entries(1, 1, 2, [(vec![0], vec![qi(1), qi(1)])]);
        let g = run_hermite(&a, &spec, &HermiteType::lagrange(2, 1), &v, 3).unwrap();
        for k in -8i64..=8 {
            let want = Q::new((8 - k.abs()).into(), 8.into());
            assert_eq!(g[0].get(&[k]), vec![want.clone()]);
            assert_eq!(g[1].get(&[k]), vec![want]);
        }
        let lam = HermiteType::new(vec![MultiIndex::zero(1), MultiIndex(vec![1])]).unwrap();
        let g1 = run_hermite(&a, &spec, &lam, &v, 3).unwrap();
        assert_eq!(g1[1].get(&[0]), vec![qi(8)]);
        assert!(run_hermite(&a, &DilationSpec::new(3, 1).unwrap(), &lam, &v, 1).is_err());
    }
}
