//! Running vector subdivision schemes and cascade refinements.

use crate::error::{Error, Result};
use crate::filter::{subdivision_apply, BoxRange, MatrixFilter};
use crate::lattice::{DilationSpec, LatticePoint, MultiIndex};
use crate::linalg::Mat;
use crate::moments::{inv_factorial, jet_at_zero, jet_product, sign_pow};
use crate::scalar::Scalar;
use crate::spaces::mom_check;
use crate::sumrules::{matching_jet, MatchingJet};

/// Samples k ↦ f(m^{−n}k) of an r-vector function on a box of Z^d.
#[derive(Clone, Debug)]
pub struct SampledGrid<T> {
    pub level: u32,
    pub m: i64,
    pub comps: usize,
    /// Index box at scale m^{−n}; samples outside are zero.
    pub bx: BoxRange,
    /// Set for grids whose limit is discontinuous, where integer values are a convention.
    pub formal: bool,
    data: MatrixFilter<T>,
}

impl<T: Scalar> SampledGrid<T> {
    /// Wrap an r×1 filter of samples; the box is its support (or `bx` if larger).
    pub fn from_filter(data: MatrixFilter<T>, level: u32, m: i64, bx: Option<BoxRange>) -> Self {
        assert_eq!(data.cols(), 1, "grid data must be a column filter");
        let d = data.dim();
        let bx = match (bx, data.support()) {
            (Some(b), Some(s)) => b.hull(&s),
            (Some(b), None) => b,
            (None, Some(s)) => s,
            (None, None) => BoxRange::point(&vec![0; d]),
        };
        SampledGrid { level, m, comps: data.rows(), bx, formal: false, data }
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn get(&self, k: &[i64]) -> Vec<T> {
        match self.data.get(k) {
            Some(b) => b.to_vec(),
            None => vec![T::zero(); self.comps],
        }
    }

    /// Nonzero samples.
    pub fn iter(&self) -> impl Iterator<Item = (LatticePoint, &[T])> + '_ {
        self.data.iter_nonzero()
    }

    pub fn as_filter(&self) -> &MatrixFilter<T> {
        &self.data
    }

    /// Physical coordinates m^{−n}k.
    pub fn coords(&self, k: &[i64]) -> Vec<f64> {
        let h = (self.m as f64).powi(-(self.level as i32));
        k.iter().map(|&c| c as f64 * h).collect()
    }

    pub fn component(&self, c: usize) -> SampledGrid<T> {
        let mut g = SampledGrid::from_filter(self.data.component(c, 0), self.level, self.m, Some(self.bx.clone()));
        g.formal = self.formal;
        g
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SampledGrid<U> {
        SampledGrid {
            level: self.level,
            m: self.m,
            comps: self.comps,
            bx: self.bx.clone(),
            formal: self.formal,
            data: self.data.map(f),
        }
    }

    pub fn scale(&self, c: &T) -> SampledGrid<T> {
        let mut g = self.clone();
        g.data = g.data.scale(c);
        g
    }
}

impl SampledGrid<f64> {
    /// Sup-norm difference over all components; grids must share level, m and size.
    pub fn sup_diff(&self, other: &SampledGrid<f64>) -> Result<f64> {
        if self.level != other.level || self.m != other.m || self.comps != other.comps || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("grids at different levels or shapes".into()));
        }
        Ok(self.data.sub(&other.data)?.max_abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.max_abs()
    }
}

/// Smallest box B with m·B ⊇ B + supp(a), by support endpoints over m − 1.
pub fn invariant_box(support: &BoxRange, m: i64) -> BoxRange {
    let div = m - 1;
    let lo: Vec<i64> = support.lo.iter().map(|&l| l.div_euclid(div) + i64::from(l.rem_euclid(div) != 0)).collect();
    // half-open on the right: [lo/(m−1), hi/(m−1))
    let hi: Vec<i64> = support
        .hi
        .iter()
        .zip(&lo)
        .map(|(&h, &l)| {
            let c = h.div_euclid(div) + i64::from(h.rem_euclid(div) != 0) - 1;
            c.max(l)
        })
        .collect();
    BoxRange::new(lo, hi)
}

/// Size limit for the exact null-space solve of the transition matrix.
pub const EXACT_EIGEN_LIMIT: usize = 400;

/// φ on the integers: the eigenvalue-1 vector of v(j) = m^d Σ_i a(mj − i) v(i),
/// normalized so that υ̂(0)·Σ_k v(k) = 1.
pub fn phi_integer_values<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, v: &MatchingJet<T>) -> Result<SampledGrid<T>> {
    let r = a.rows();
    let d = a.dim();
    let Some(supp) = a.support() else {
        return Err(Error::Precondition("zero mask has no refinable function".into()));
    };
    let bx = invariant_box(&supp, spec.m);
    let pts = bx.points();
    let n = pts.len() * r;
    let md = T::from_i64(spec.det());
    let index = |k: &[i64]| -> Option<usize> {
        if !bx.contains(k) {
            return None;
        }
        let dims = bx.dims();
        let mut idx = 0usize;
        for i in 0..k.len() {
            idx = idx * dims[i] + (k[i] - bx.lo[i]) as usize;
        }
        Some(idx)
    };
    let v0 = v.value();
    let vec = if n < EXACT_EIGEN_LIMIT {
        let mut t = Mat::<T>::zeros(n, n);
        for (jp, j) in pts.iter().enumerate() {
            for (ip, i) in pts.iter().enumerate() {
                let k: Vec<i64> = j.iter().zip(i).map(|(jj, ii)| spec.m * jj - ii).collect();
                if let Some(b) = a.get(&k) {
                    for row in 0..r {
                        for col in 0..r {
                            t.set(jp * r + row, ip * r + col, b[row * r + col].clone() * md.clone());
                        }
                    }
                }
            }
        }
        let ns = t.sub(&Mat::identity(n)).null_space();
        if ns.is_empty() {
            return Err(Error::Precondition("transition matrix has no eigenvalue 1".into()));
        }
        if ns.len() > 1 {
            return Err(Error::Precondition(format!(
                "eigenvalue 1 of the transition matrix has a {}-dimensional eigenspace",
                ns.len()
            )));
        }
        ns.into_iter().next().unwrap()
    } else {
        power_iteration(a, spec, &pts, &index, v, r)?
    };
    let mut total = T::zero();
    for p in 0..pts.len() {
        for c in 0..r {
            T::mul_acc(&mut total, &v0[c], &vec[p * r + c]);
        }
    }
    if total.is_negligible() {
        return Err(Error::Precondition("eigenvector is orthogonal to the matching vector; cannot normalize".into()));
    }
    let inv = T::one() / total;
    let entries = pts.iter().enumerate().map(|(p, k)| (k.clone(), (0..r).map(|c| vec[p * r + c].clone() * inv.clone()).collect()));
    let data = MatrixFilter::from_entries(d, r, 1, entries);
    let mut g = SampledGrid::from_filter(data, 0, spec.m, Some(bx.clone()));
    g.formal = crate::sumrules::sum_rule_order(a, spec, 2).map(|s| s.order < 2).unwrap_or(true);
    Ok(g)
}

/// Cascade iteration on the integer box, started from a vector with υ̂(0)·Σ = 1.
fn power_iteration<T: Scalar>(
    a: &MatrixFilter<T>,
    spec: &DilationSpec,
    pts: &[LatticePoint],
    index: &dyn Fn(&[i64]) -> Option<usize>,
    v: &MatchingJet<T>,
    r: usize,
) -> Result<Vec<T>> {
    let md = (spec.det()) as f64;
    let p0 = v.pinned;
    let v0 = v.value()[p0].to_c64();
    let mask: Vec<(LatticePoint, Vec<crate::scalar::C64>)> =
        a.iter_nonzero().map(|(k, b)| (k, b.iter().map(|x| x.to_c64() * md).collect())).collect();
    let n = pts.len() * r;
    let mut cur = vec![crate::scalar::C64::new(0.0, 0.0); n];
    let zero: Vec<i64> = vec![0; a.dim()];
    let start = index(&zero).unwrap_or(0);
    cur[start * r + p0] = crate::scalar::C64::new(1.0, 0.0) / v0;
    let mut next = cur.clone();
    for _ in 0..20_000 {
        next.iter_mut().for_each(|x| *x = crate::scalar::C64::new(0.0, 0.0));
        for (jp, j) in pts.iter().enumerate() {
            for (k, b) in &mask {
                // i = m j − k
                let i: Vec<i64> = j.iter().zip(k).map(|(jj, kk)| spec.m * jj - kk).collect();
                if let Some(ip) = index(&i) {
                    for row in 0..r {
                        for col in 0..r {
                            next[jp * r + row] += b[row * r + col] * cur[ip * r + col];
                        }
                    }
                }
            }
        }
        let diff = next.iter().zip(&cur).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        std::mem::swap(&mut cur, &mut next);
        if diff < 1e-14 {
            return Ok(cur.into_iter().map(|z| T::from_f64(z.re)).collect());
        }
    }
    Err(Error::Precondition("power iteration for integer values did not settle".into()))
}

/// One cascade step on samples: f_{n+1} = m^d (a ↑ m^n) ∗ f_n.
pub fn refine<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, grid: &SampledGrid<T>) -> Result<SampledGrid<T>> {
    if grid.comps != a.rows() {
        return Err(Error::DimensionMismatch("grid components differ from mask size".into()));
    }
    let up = spec
        .m
        .checked_pow(grid.level)
        .ok_or_else(|| Error::Resource("upsampling factor overflow".into()))?;
    let step = a.upsample(up).scale(&T::from_i64(spec.det()));
    let data = step.convolve(&grid.data)?;
    let bx = match a.support() {
        Some(s) => grid.bx.minkowski(&s.scaled(up)),
        None => grid.bx.clone(),
    };
    let mut g = SampledGrid::from_filter(data, grid.level + 1, spec.m, Some(bx));
    g.formal = grid.formal;
    Ok(g)
}

/// `refine` applied `n` times.
pub fn refine_n<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, grid: &SampledGrid<T>, n: u32) -> Result<SampledGrid<T>> {
    let mut g = grid.clone();
    for _ in 0..n {
        g = refine(a, spec, &g)?;
    }
    Ok(g)
}

/// Output of [`run_scheme`].
#[derive(Clone, Debug)]
pub struct SchemeRun<T> {
    pub grid: SampledGrid<T>,
    pub beta: T,
    pub mu: MultiIndex,
    /// Human-readable target of the approximation.
    pub interpretation: String,
}

/// m^{|μ|n} [S^n v] ∗ u as a level-n scalar grid.
pub fn run_scheme<T: Scalar>(
    a: &MatrixFilter<T>,
    spec: &DilationSpec,
    v: &MatrixFilter<T>,
    u: &MatrixFilter<T>,
    mu: &MultiIndex,
    n: u32,
) -> Result<SchemeRun<T>> {
    let r = a.rows();
    if v.rows() != 1 || v.cols() != r {
        return Err(Error::DimensionMismatch("initial data must be a 1×r filter".into()));
    }
    if u.rows() != r || u.cols() != 1 {
        return Err(Error::DimensionMismatch("u must be an r×1 filter".into()));
    }
    let vj = matching_jet(a, spec, mu.order())?;
    let beta = match mom_check(&vj, u, mu)? {
        Ok(b) => b,
        Err(nu) => {
            return Err(Error::NotMember(format!(
                "u is not in mom_{{υ,{mu}}}: T_{nu}(υ∗u) ≠ 0 at jet order {}",
                nu.order()
            )))
        }
    };
    let mut w = v.clone();
    for _ in 0..n {
        w = subdivision_apply(a, spec, &w)?;
    }
    let scale = T::from_i64(spec.m).pow_u32(mu.order() * n);
    let out = w.convolve(u)?.scale(&scale);
    let grid = SampledGrid::from_filter(out.transpose(), n, spec.m, None);
    let interpretation = if mu.is_zero() {
        "β·(v∗φ)(m^{-n}k)".to_string()
    } else {
        format!("β·∂^{mu}(v∗φ)(m^{{-n}}k)")
    };
    Ok(SchemeRun { grid, beta, mu: mu.clone(), interpretation })
}

/// w(k) = grid(m^n k): restriction to the integer nodes.
pub fn integer_derivative_samples<T: Scalar>(grid: &SampledGrid<T>) -> MatrixFilter<T> {
    let s = grid.m.pow(grid.level);
    let entries = grid
        .iter()
        .filter(|(k, _)| k.iter().all(|c| c.rem_euclid(s) == 0))
        .map(|(k, b)| (k.iter().map(|c| c / s).collect::<Vec<_>>(), b.to_vec()))
        .collect::<Vec<_>>();
    MatrixFilter::from_entries(grid.dim(), grid.comps, 1, entries)
}

/// drv(υ∗u): first order N > |μ| where υ̂û deviates from β(iξ)^μ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Drv {
    Finite(u32),
    /// No deviation through the given jet order.
    Beyond(u32),
}

impl Drv {
    pub fn value(self) -> f64 {
        match self {
            Drv::Finite(n) => n as f64,
            Drv::Beyond(_) => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Drv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Drv::Finite(n) => write!(f, "{n}"),
            Drv::Beyond(n) => write!(f, ">{n}"),
        }
    }
}

pub fn drv_index<T: Scalar>(v: &MatchingJet<T>, u: &MatrixFilter<T>, mu: &MultiIndex) -> Result<Drv> {
    if v.order() <= mu.order() {
        return Err(Error::Precondition(format!(
            "matching jet order {} too low; raise it above {}",
            v.order(),
            mu.order()
        )));
    }
    let beta = match mom_check(v, u, mu)? {
        Ok(b) => b,
        Err(nu) => return Err(Error::NotMember(format!("T_{nu}(υ∗u) ≠ 0"))),
    };
    let j = jet_product(&v.jet, &jet_at_zero(u, v.order()))?;
    let want_mu = beta * sign_pow::<T>(mu.order()) / inv_factorial::<T>(mu);
    for nu in j.indices() {
        if nu.order() <= mu.order() {
            continue;
        }
        let want = if nu == mu { want_mu.clone() } else { T::zero() };
        if !j.get(nu)[0].approx_eq(&want) {
            return Ok(Drv::Finite(nu.order()));
        }
    }
    Ok(Drv::Beyond(v.order()))
}

/// Theory side of a rate measurement.
#[derive(Clone, Debug)]
pub struct RateTheory {
    pub drv: Drv,
    pub sm_inf: Option<f64>,
    pub sum_rule_order: u32,
    pub mu_order: u32,
}

impl RateTheory {
    /// S_{μ,u} = min(drv − |μ|, sm_∞ − |μ|).
    pub fn s(&self) -> f64 {
        let a = self.drv.value() - self.mu_order as f64;
        match self.sm_inf {
            Some(s) => a.min(s - self.mu_order as f64),
            None => a,
        }
    }

    /// The rate statement assumes drv ≤ m + 1 with sum rules of order m + 1.
    pub fn within_hypothesis(&self) -> bool {
        self.drv.value() <= self.sum_rule_order as f64
    }
}

#[derive(Clone, Debug)]
pub struct RateReport {
    pub levels: Vec<u32>,
    pub errors: Vec<f64>,
    /// Fitted decay exponent s in e_n ≈ C m^{−sn}.
    pub exponent: f64,
    pub theory: Option<RateTheory>,
    pub epsilon: Option<f64>,
    pub tags: Vec<String>,
}

impl RateReport {
    pub fn monotone(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }
    pub fn exact(&self) -> bool {
        self.tags.iter().any(|t| t == "exact")
    }
}

/// Errors below this are treated as exact reproduction.
pub const EXACT_RATE_TOL: f64 = 1e-11;

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Sup errors of the scheme against β·`oracle` for levels n0..=n1 and the fitted exponent.
/// The oracle supplies ∂^μ(v∗φ) on the level-n grid.
#[allow(clippy::too_many_arguments)]
pub fn measure_rate(
    a: &MatrixFilter<f64>,
    spec: &DilationSpec,
    v: &MatrixFilter<f64>,
    u: &MatrixFilter<f64>,
    mu: &MultiIndex,
    oracle: &dyn Fn(u32) -> Result<SampledGrid<f64>>,
    levels: (u32, u32),
    theory: Option<RateTheory>,
) -> Result<RateReport> {
    let (n0, n1) = levels;
    if n1 < n0 + 2 {
        return Err(Error::Precondition("rate fit needs at least 3 levels".into()));
    }
    let mut errs = Vec::new();
    let mut w = v.clone();
    for _ in 0..n0 {
        w = subdivision_apply(a, spec, &w)?;
    }
    let vj = matching_jet(a, spec, mu.order())?;
    let beta = mom_check(&vj, u, mu)?.map_err(|nu| Error::NotMember(format!("u is not in mom_{{υ,{mu}}}: T_{nu}(υ∗u) ≠ 0")))?;
    for n in n0..=n1 {
        if n > n0 {
            w = subdivision_apply(a, spec, &w)?;
        }
        let scale = (spec.m as f64).powi((mu.order() * n) as i32);
        let data = w.convolve(u)?.scale(&scale).transpose();
        let run = SampledGrid::from_filter(data, n, spec.m, None);
        let want = oracle(n)?.scale(&beta);
        errs.push(run.sup_diff(&want)?);
    }
    let levels: Vec<u32> = (n0..=n1).collect();
    let mut tags = Vec::new();
    let exponent = if errs.iter().all(|e| *e < EXACT_RATE_TOL) {
        tags.push("exact".to_string());
        f64::INFINITY
    } else {
        let x: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
        let y: Vec<f64> = errs.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
        -ls_slope(&x, &y) / (spec.m as f64).ln()
    };
    if let Some(t) = &theory {
        if !t.within_hypothesis() {
            tags.push("outside rate-theorem hypothesis".to_string());
        }
    }
    let epsilon = theory.as_ref().map(|t| t.s() - exponent).filter(|e| e.is_finite());
    Ok(RateReport { levels, errors: errs, exponent, theory, epsilon, tags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{subdivision_power, to_f64};
    use crate::fixtures;
    use crate::scalar::{q, qi, Q};

    fn d1() -> DilationSpec {
        DilationSpec::new(2, 1).unwrap()
    }

    #[test]
    fn invariant_boxes() {
        // hat support [−1,1], m=2 → [−1, 0]... closed at both ends after rounding: [-1,1)
        let b = invariant_box(&BoxRange::new(vec![-1], vec![1]), 2);
        assert_eq!(b, BoxRange::new(vec![-1], vec![0]));
        let b = invariant_box(&BoxRange::new(vec![0], vec![1]), 2);
        assert_eq!(b, BoxRange::new(vec![0], vec![0]));
        let b = invariant_box(&BoxRange::new(vec![-2], vec![2]), 2);
        assert_eq!(b, BoxRange::new(vec![-2], vec![1]));
        let b = invariant_box(&BoxRange::new(vec![-2], vec![2]), 3);
        assert_eq!(b, BoxRange::new(vec![-1], vec![0]));
    }

    #[test]
    fn hat_integer_values() {
        let a = fixtures::hat();
        let v = matching_jet(&a, &d1(), 1).unwrap();
        let g = phi_integer_values(&a, &d1(), &v).unwrap();
        assert_eq!(g.get(&[0]), vec![qi(1)]);
        assert_eq!(g.get(&[-1]), vec![qi(0)]);
        assert_eq!(g.get(&[1]), vec![qi(0)]);
    }

    #[test]
    fn haar_integer_values() {
        let a = fixtures::haar();
        let v = matching_jet(&a, &d1(), 0).unwrap();
        let g = phi_integer_values(&a, &d1(), &v).unwrap();
        assert_eq!(g.get(&[0]), vec![qi(1)]);
        assert!(g.formal);
    }

    #[test]
    fn cubic_integer_values() {
        let a = crate::constructions::bspline_filter(4);
        let v = matching_jet(&a, &d1(), 3).unwrap();
        let g = phi_integer_values(&a, &d1(), &v).unwrap();
        assert_eq!(g.get(&[0]), vec![q(2, 3)]);
        assert_eq!(g.get(&[1]), vec![q(1, 6)]);
        assert_eq!(g.get(&[-1]), vec![q(1, 6)]);
    }

    #[test]
    fn hat_refinement_is_sample_exact() {
        let a = fixtures::hat();
        let v = matching_jet(&a, &d1(), 1).unwrap();
        let mut g = phi_integer_values(&a, &d1(), &v).unwrap();
        for n in 1..=5u32 {
            g = refine(&a, &d1(), &g).unwrap();
            let s = 1i64 << n;
            for k in -s..=s {
                let want = Q::new((s - k.abs()).into(), s.into());
                assert_eq!(g.get(&[k]), vec![want], "level {n} index {k}");
            }
        }
    }

    #[test]
    fn refine_delta_matches_subdivision_power() {
        let spec = DilationSpec::new(2, 2).unwrap();
        let a = fixtures::ex1().mask;
        for l in 0..2 {
            let seed = SampledGrid::from_filter(MatrixFilter::<Q>::delta_col(2, 2, l), 0, 2, None);
            for n in 0..=2u32 {
                let g = refine_n(&a, &spec, &seed, n).unwrap();
                let q = subdivision_power(&a, &spec, n).unwrap();
                assert_eq!(g.as_filter(), &q.column(l));
            }
        }
    }

    #[test]
    fn run_scheme_hat() {
        let a = to_f64(&fixtures::hat());
        let e = MatrixFilter::<f64>::delta(1, 1);
        let run = run_scheme(&a, &d1(), &e, &e, &MultiIndex::zero(1), 3).unwrap();
        assert_eq!(run.beta, 1.0);
        for k in -8i64..=8 {
            assert_eq!(run.grid.get(&[k])[0], 1.0 - (k.abs() as f64) / 8.0);
        }
    }

    #[test]
    fn run_scheme_membership_failure() {
        let a = fixtures::hat();
        let e = MatrixFilter::<Q>::delta(1, 1);
        let err = run_scheme(&a, &d1(), &e, &e, &MultiIndex(vec![1]), 2).unwrap_err();
        assert!(matches!(err, Error::NotMember(_)), "{err}");
    }

    #[test]
    fn integer_samples_of_hat() {
        let a = fixtures::hat();
        let v = matching_jet(&a, &d1(), 1).unwrap();
        let g = refine_n(&a, &d1(), &phi_integer_values(&a, &d1(), &v).unwrap(), 3).unwrap();
        assert_eq!(integer_derivative_samples(&g), MatrixFilter::delta(1, 1));
    }

    #[test]
    fn drv_scalar_difference() {
        let a = crate::constructions::bspline_filter(4);
        let v = matching_jet(&a, &d1(), 5).unwrap();
        // υ̂ = 1 + O(ξ²) for the centred cubic, so u = δ has drv 2
        let e = MatrixFilter::<Q>::delta(1, 1);
        assert_eq!(drv_index(&v, &e, &MultiIndex::zero(1)).unwrap(), Drv::Finite(2));
        let one = MatchingJet::from_jet(crate::moments::Jet::<Q>::one(1, 5)).unwrap();
        for k in 1..=3u32 {
            let mu = MultiIndex(vec![k]);
            let u = crate::filter::difference_delta::<Q>(&mu);
            assert_eq!(drv_index(&one, &u, &mu).unwrap(), Drv::Finite(k + 1));
        }
    }

    #[test]
    fn shift_covariance() {
        let spec = DilationSpec::new(2, 2).unwrap();
        let a = fixtures::a4().mask;
        let v = MatrixFilter::<Q>::delta_row(2, 2, 0);
        let u = MatrixFilter::<Q>::delta_col(2, 2, 0);
        let z = vec![1i64, -2];
        let mu = MultiIndex::zero(2);
        let base = run_scheme(&a, &spec, &v, &u, &mu, 2).unwrap();
        let moved = run_scheme(&a, &spec, &v.shift(&z), &u, &mu, 2).unwrap();
        let s: Vec<i64> = z.iter().map(|c| c * 4).collect();
        assert_eq!(moved.grid.as_filter(), &base.grid.as_filter().shift(&s));
    }
}
