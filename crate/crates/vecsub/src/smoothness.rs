//! Finite-n estimates of ρ_m(a, mI_d, υ)_p, sm_p and C^m convergence verdicts.

use crate::config::Exec;
use crate::error::{Error, Result};
use crate::filter::{MatrixFilter, NormP};
use crate::lattice::DilationSpec;
use crate::scalar::{Scalar, C64};
use crate::scheme::ls_slope;
use crate::spaces::{vmy_generators, GeneratorSet};
use crate::sumrules::{check_eigen_condition, sum_rule_order, MatchingJet, DEFAULT_SUM_RULE_CAP};

/// Stabilization threshold on successive window fits, in sm units.
pub const STABLE_TOL: f64 = 0.05;

pub fn default_n_max(d: usize) -> u32 {
    if d == 1 {
        16
    } else {
        8
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorSequence {
    pub name: String,
    /// s_n for n = 1..=len.
    pub s: Vec<f64>,
    /// s_{n+1}/s_n.
    pub ratios: Vec<f64>,
    pub rho: f64,
}

#[derive(Clone, Debug)]
pub struct RhoEstimate {
    pub p: NormP,
    pub m: i64,
    pub d: usize,
    /// Order k of the difference space V_{k−1,υ}.
    pub order: u32,
    pub n_max: u32,
    pub sequences: Vec<GeneratorSequence>,
    pub rho: f64,
    /// The same fit with the window ending one level earlier.
    pub rho_prev: Option<f64>,
    pub stabilized: bool,
    /// Iteration stopped early at the support cap.
    pub truncated: bool,
    /// Every maximal sequence is exactly constant: ρ = 1 with no estimation error.
    pub exact_unit: bool,
}

impl RhoEstimate {
    /// d/p − log_m ρ̂.
    pub fn sm(&self) -> f64 {
        sm_from_rho(self.rho, self.p, self.d, self.m)
    }
}

pub fn sm_from_rho(rho: f64, p: NormP, d: usize, m: i64) -> f64 {
    if rho <= 0.0 {
        return f64::INFINITY;
    }
    p.d_over_p(d) - rho.ln() / (m as f64).ln()
}

/// Trailing-window fit of ln s_n ending at index `end` (exclusive); `None` when all zero.
fn window_rho(s: &[f64], end: usize, width: usize) -> Option<f64> {
    if end < width || width < 2 {
        return None;
    }
    let win = &s[end - width..end];
    if win.iter().all(|x| *x == 0.0) {
        return None;
    }
    if win.iter().any(|x| *x == 0.0) {
        return Some(0.0);
    }
    let x: Vec<f64> = (end - width..end).map(|n| (n + 1) as f64).collect();
    let y: Vec<f64> = win.iter().map(|v| v.ln()).collect();
    Some(ls_slope(&x, &y).exp())
}

/// ρ̂ over the generators of V_{m−1,υ}. Computed in floating point.
pub fn rho_estimate<T: Scalar>(
    a: &MatrixFilter<T>,
    spec: &DilationSpec,
    v: &MatchingJet<T>,
    m: u32,
    p: NormP,
    n_max: u32,
) -> Result<RhoEstimate> {
    rho_estimate_with(a, spec, v, m, p, n_max, Exec::default())
}

pub fn rho_estimate_with<T: Scalar>(
    a: &MatrixFilter<T>,
    spec: &DilationSpec,
    v: &MatchingJet<T>,
    m: u32,
    p: NormP,
    n_max: u32,
    exec: Exec,
) -> Result<RhoEstimate> {
    if n_max < 3 {
        return Err(Error::Precondition("n_max must be at least 3".into()));
    }
    let gens = vmy_generators(v, m)?;
    let real = a.iter_nonzero().all(|(_, b)| b.iter().all(|x| x.to_c64().im == 0.0))
        && gens.gens.iter().all(|g| g.iter_nonzero().all(|(_, b)| b.iter().all(|x| x.to_c64().im == 0.0)));
    let (seqs, truncated) = if real {
        let af = a.map(|x| x.to_c64().re);
        let gf: Vec<MatrixFilter<f64>> = gens.gens.iter().map(|g| g.map(|x| x.to_c64().re)).collect();
        sequences(&af, spec, &gf, p, n_max, exec)?
    } else {
        let af = a.map(|x| x.to_c64());
        let gf: Vec<MatrixFilter<C64>> = gens.gens.iter().map(|g| g.map(|x| x.to_c64())).collect();
        sequences(&af, spec, &gf, p, n_max, exec)?
    };
    assemble(seqs, &gens, p, spec, m, n_max, truncated)
}

/// s_n(w) for every generator, n = 1..=n_max; stops early at the support cap.
fn sequences<F: Scalar>(
    a: &MatrixFilter<F>,
    spec: &DilationSpec,
    gens: &[MatrixFilter<F>],
    p: NormP,
    n_max: u32,
    exec: Exec,
) -> Result<(Vec<Vec<f64>>, bool)> {
    let md = F::from_i64(spec.det());
    let mut q = MatrixFilter::delta(a.dim(), a.rows());
    let mut out = vec![Vec::new(); gens.len()];
    let mut up = 1i64;
    for n in 1..=n_max {
        let step = a.upsample(up).scale(&md).convolve_with(&q, exec);
        q = match step {
            Ok(x) => x,
            Err(Error::Resource(msg)) => {
                if n <= 3 {
                    return Err(Error::Resource(msg));
                }
                return Ok((out, true));
            }
            Err(e) => return Err(e),
        };
        for (g, seq) in gens.iter().zip(out.iter_mut()) {
            seq.push(q.convolve_norm(g, p, exec)?);
        }
        up = match up.checked_mul(spec.m) {
            Some(x) => x,
            None => return Ok((out, n < n_max)),
        };
    }
    Ok((out, false))
}

fn assemble<T: Scalar>(
    seqs: Vec<Vec<f64>>,
    gens: &GeneratorSet<T>,
    p: NormP,
    spec: &DilationSpec,
    m: u32,
    n_max: u32,
    truncated: bool,
) -> Result<RhoEstimate> {
    let len = seqs.first().map(|s| s.len()).unwrap_or(0);
    let width = n_max.div_ceil(2) as usize;
    let width = width.min(len.saturating_sub(1)).max(2);
    let mut sequences = Vec::new();
    let mut rho = 0.0f64;
    let mut rho_prev: Option<f64> = None;
    let mut exact_unit_all = true;
    let mut any = false;
    for (s, name) in seqs.into_iter().zip(&gens.names) {
        let ratios: Vec<f64> = s.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect();
        let r_now = window_rho(&s, len, width).unwrap_or(0.0);
        let r_prev = window_rho(&s, len.saturating_sub(1), width);
        if r_now >= rho {
            rho = r_now;
        }
        if let Some(x) = r_prev {
            rho_prev = Some(rho_prev.map_or(x, |y: f64| y.max(x)));
        }
        sequences.push(GeneratorSequence { name: name.clone(), s, ratios, rho: r_now });
    }
    for g in &sequences {
        if g.rho == rho && rho > 0.0 {
            any = true;
            let tail = &g.s[len - width..];
            let c = tail[0];
            exact_unit_all &= tail.iter().all(|x| (x - c).abs() <= 1e-12 * c.abs());
        }
    }
    let exact_unit = any && exact_unit_all;
    if exact_unit {
        rho = 1.0;
    }
    let d = spec.d;
    let stabilized = exact_unit
        || match rho_prev {
            Some(rp) => {
                let a = sm_from_rho(rho, p, d, spec.m);
                let b = sm_from_rho(rp, p, d, spec.m);
                (a.is_infinite() && b.is_infinite()) || (a - b).abs() < STABLE_TOL
            }
            None => false,
        };
    Ok(RhoEstimate { p, m: spec.m, d, order: m, n_max: len as u32, sequences, rho, rho_prev, stabilized, truncated, exact_unit })
}

#[derive(Clone, Debug)]
pub struct SmEstimate {
    pub p: NormP,
    pub value: f64,
    pub stabilized: bool,
    pub n_max: u32,
    pub sum_rule_order: u32,
    pub rho: RhoEstimate,
}

/// sm̂_p with k_0 = m_a and the recursion matching jet.
pub fn sm_estimate<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, p: NormP, n_max: u32) -> Result<SmEstimate> {
    let sr = sum_rule_order(a, spec, DEFAULT_SUM_RULE_CAP)?;
    let rho = rho_estimate(a, spec, &sr.jet, sr.order, p, n_max)?;
    Ok(SmEstimate { p, value: rho.sm(), stabilized: rho.stabilized, n_max: rho.n_max, sum_rule_order: sr.order, rho })
}

/// Raise n from `n_start` until the estimate stabilizes or `n_cap` is reached.
pub fn sm_estimate_adaptive<T: Scalar>(
    a: &MatrixFilter<T>,
    spec: &DilationSpec,
    p: NormP,
    n_start: u32,
    n_cap: u32,
) -> Result<SmEstimate> {
    let mut n = n_start;
    loop {
        let e = sm_estimate(a, spec, p, n)?;
        if e.stabilized || n >= n_cap || e.rho.truncated {
            return Ok(e);
        }
        n += 1;
    }
}

/// [sm_2 − d/2, sm_2], the range of sm_∞ implied by sm_2.
pub fn sm_infty_interval(sm2: f64, d: usize) -> (f64, f64) {
    (sm2 - d as f64 / 2.0, sm2)
}

#[derive(Clone, Debug)]
pub struct SmoothnessReport {
    pub entries: Vec<SmEstimate>,
    pub sm_inf_interval: Option<(f64, f64)>,
    pub sum_rule_order: u32,
}

pub fn smoothness_report<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, ps: &[NormP], n_max: u32) -> Result<SmoothnessReport> {
    let sr = sum_rule_order(a, spec, DEFAULT_SUM_RULE_CAP)?;
    let mut entries = Vec::new();
    for &p in ps {
        let rho = rho_estimate(a, spec, &sr.jet, sr.order, p, n_max)?;
        entries.push(SmEstimate { p, value: rho.sm(), stabilized: rho.stabilized, n_max: rho.n_max, sum_rule_order: sr.order, rho });
    }
    let sm_inf_interval = entries.iter().find(|e| e.p == NormP::Two).map(|e| sm_infty_interval(e.value, spec.d));
    Ok(SmoothnessReport { entries, sm_inf_interval, sum_rule_order: sr.order })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// C^m-convergent for the given m.
    Convergent(u32),
    NotConvergent,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Convergent(m) => write!(f, "CONVERGENT(C^{m})"),
            Verdict::NotConvergent => write!(f, "NOT_CONVERGENT"),
            Verdict::Inconclusive => write!(f, "INCONCLUSIVE"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub target: u32,
    pub verdict: Verdict,
    pub sum_rule_order: Option<u32>,
    pub eigen_ok: Option<bool>,
    pub sm_inf: Option<SmEstimate>,
    pub sm2: Option<SmEstimate>,
    pub reasons: Vec<String>,
}

/// C^m convergence from sum rules, the eigenvalue condition and sm̂_∞ (or the sm̂_2 lower bound).
pub fn convergence_check<T: Scalar>(a: &MatrixFilter<T>, spec: &DilationSpec, m: u32, n_max: u32) -> Result<ConvergenceReport> {
    let mut rep = ConvergenceReport {
        target: m,
        verdict: Verdict::Inconclusive,
        sum_rule_order: None,
        eigen_ok: None,
        sm_inf: None,
        sm2: None,
        reasons: Vec::new(),
    };
    let sr = match sum_rule_order(a, spec, DEFAULT_SUM_RULE_CAP.max(m + 2)) {
        Ok(s) => s,
        Err(Error::NotSimple) => {
            rep.eigen_ok = Some(false);
            rep.verdict = Verdict::NotConvergent;
            rep.reasons.push("1 is not a simple eigenvalue of â(0)".into());
            return Ok(rep);
        }
        Err(e) => return Err(e),
    };
    rep.sum_rule_order = Some(sr.order);
    let eig = check_eigen_condition(a, spec, m)?;
    let eigen_ok = eig.holds();
    rep.eigen_ok = Some(eigen_ok);
    if sr.order < m + 1 {
        rep.verdict = Verdict::NotConvergent;
        rep.reasons.push(format!("sum rules of order {} < {}", sr.order, m + 1));
        return Ok(rep);
    }
    if !eigen_ok {
        if eig.near_bound && !T::EXACT {
            rep.reasons.push("eigenvalue within tolerance of the bound m^{-m}".into());
            return Ok(rep);
        }
        rep.verdict = Verdict::NotConvergent;
        rep.reasons.push(format!("eigenvalue condition fails: max other modulus {:.6} vs bound {:.6}", eig.max_other_modulus, eig.bound));
        return Ok(rep);
    }
    let inf = rho_estimate(a, spec, &sr.jet, sr.order, NormP::Inf, n_max)?;
    let inf = SmEstimate { p: NormP::Inf, value: inf.sm(), stabilized: inf.stabilized, n_max: inf.n_max, sum_rule_order: sr.order, rho: inf };
    if inf.rho.exact_unit && inf.value <= m as f64 {
        rep.verdict = Verdict::NotConvergent;
        rep.reasons.push(format!("iterates do not decay: ρ = 1 exactly, sm_∞ = {}", inf.value));
        rep.sm_inf = Some(inf);
        return Ok(rep);
    }
    if inf.stabilized && inf.value > m as f64 {
        rep.verdict = Verdict::Convergent(m);
        rep.reasons.push(format!("sm_∞ ≈ {:.4} > {m}", inf.value));
        rep.sm_inf = Some(inf);
        return Ok(rep);
    }
    let two = rho_estimate(a, spec, &sr.jet, sr.order, NormP::Two, n_max)?;
    let two = SmEstimate { p: NormP::Two, value: two.sm(), stabilized: two.stabilized, n_max: two.n_max, sum_rule_order: sr.order, rho: two };
    let lower = sm_infty_interval(two.value, spec.d).0;
    if two.stabilized && lower > m as f64 {
        rep.verdict = Verdict::Convergent(m);
        rep.reasons.push(format!("sm_2 − d/2 ≈ {lower:.4} > {m}"));
    } else {
        rep.reasons.push(format!(
            "estimates do not certify sm_∞ > {m}: sm_∞ ≈ {:.4}{}, sm_2 − d/2 ≈ {lower:.4}{}",
            inf.value,
            if inf.stabilized { "" } else { " (not stabilized)" },
            if two.stabilized { "" } else { " (not stabilized)" }
        ));
    }
    rep.sm_inf = Some(inf);
    rep.sm2 = Some(two);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::bspline_filter;
    use crate::fixtures;
    use crate::sumrules::matching_jet;

    fn d1() -> DilationSpec {
        DilationSpec::new(2, 1).unwrap()
    }

    #[test]
    fn haar_rho_is_one() {
        let a = fixtures::haar();
        let v = matching_jet(&a, &d1(), 0).unwrap();
        let e = rho_estimate(&a, &d1(), &v, 1, NormP::Inf, 8).unwrap();
        assert!(e.exact_unit);
        assert_eq!(e.rho, 1.0);
        assert_eq!(e.sm(), 0.0);
        for s in &e.sequences[0].s {
            assert_eq!(*s, 1.0);
        }
    }

    #[test]
    fn hat_rho_half() {
        let a = fixtures::hat();
        let v = matching_jet(&a, &d1(), 1).unwrap();
        let e = rho_estimate(&a, &d1(), &v, 2, NormP::Inf, 12).unwrap();
        assert!((e.rho - 0.5).abs() < 0.02, "{}", e.rho);
        assert!((e.sm() - 1.0).abs() < 0.05);
    }

    #[test]
    fn cubic_rho() {
        let a = bspline_filter(4);
        let v = matching_jet(&a, &d1(), 3).unwrap();
        let e = rho_estimate(&a, &d1(), &v, 4, NormP::Inf, 16).unwrap();
        assert!((e.rho - 0.125).abs() < 0.05, "{}", e.rho);
        assert!(e.stabilized);
    }

    #[test]
    fn scalar_multiple_of_matching_jet() {
        let a = bspline_filter(4);
        let v = matching_jet(&a, &d1(), 3).unwrap();
        let x = rho_estimate(&a, &d1(), &v, 4, NormP::Two, 12).unwrap();
        let y = rho_estimate(&a, &d1(), &v.scale(&crate::scalar::q(-7, 3)), 4, NormP::Two, 12).unwrap();
        assert!((x.sm() - y.sm()).abs() < 0.05);
    }

    #[test]
    fn interval() {
        assert_eq!(sm_infty_interval(3.5, 2), (2.5, 3.5));
        assert_eq!(sm_infty_interval(0.0, 2), (-1.0, 0.0));
        let (lo, hi) = sm_infty_interval(2.4408, 2);
        assert!((lo - 1.4408).abs() < 1e-12 && hi == 2.4408);
    }

    #[test]
    fn haar_not_convergent() {
        let r = convergence_check(&fixtures::haar(), &d1(), 0, 8).unwrap();
        assert_eq!(r.verdict, Verdict::NotConvergent);
    }

    #[test]
    fn cubic_c2() {
        let a = bspline_filter(4);
        let r = convergence_check(&a, &d1(), 2, 16).unwrap();
        assert_eq!(r.verdict, Verdict::Convergent(2));
        let r = convergence_check(&a, &d1(), 4, 16).unwrap();
        assert_eq!(r.verdict, Verdict::NotConvergent);
    }

    #[test]
    fn not_simple_is_not_convergent() {
        let a = MatrixFilter::<crate::scalar::Q>::delta(1, 2).scale(&crate::scalar::q(1, 2));
        let r = convergence_check(&a, &d1(), 0, 8).unwrap();
        assert_eq!(r.verdict, Verdict::NotConvergent);
    }
}
