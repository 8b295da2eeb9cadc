//! Slower deterministic invariants of the smoothness estimates.

use vecsub::constructions::{balanced_from_scalar, bspline_filter};
use vecsub::filter::{MatrixFilter, NormP};
use vecsub::fixtures;
use vecsub::lattice::{quincunx, DilationSpec};
use vecsub::scalar::{q, qi, Q};
use vecsub::smoothness::{rho_estimate, sm_estimate, sm_estimate_adaptive};
use vecsub::sumrules::sum_rule_order;
use vecsub::transform::{transform_filter, verify_strong};

fn spec(m: i64, d: usize) -> DilationSpec {
    DilationSpec::new(m, d).unwrap()
}

fn diag(a: &MatrixFilter<Q>, b: &MatrixFilter<Q>) -> MatrixFilter<Q> {
    let d = a.dim();
    MatrixFilter::from_components(&[vec![a.clone(), MatrixFilter::zero(d, 1, 1)], vec![MatrixFilter::zero(d, 1, 1), b.clone()]])
}

#[test]
fn rho_ignores_scaling_of_the_matching_jet() {
    let s = spec(2, 2);
    let a = fixtures::a4().mask;
    let sr = sum_rule_order(&a, &s, 10).unwrap();
    let base = rho_estimate(&a, &s, &sr.jet, sr.order, NormP::Two, 7).unwrap();
    for c in [q(-2, 3), qi(7)] {
        let r = rho_estimate(&a, &s, &sr.jet.scale(&c), sr.order, NormP::Two, 7).unwrap();
        assert!((r.rho - base.rho).abs() <= 1e-9 * base.rho, "{} vs {}", r.rho, base.rho);
    }
}

#[test]
fn cubic_bspline_closed_form() {
    // scalar-type vector mask: diag(B_4, δ/256) has the smoothness of B_4, namely 3 + 1/p
    let s = spec(2, 1);
    let b4 = bspline_filter(4);
    let small = MatrixFilter::scalar(1, [(vec![0], q(1, 256))]);
    for a in [b4.clone(), diag(&b4, &small)] {
        for (p, want) in [(NormP::Inf, 3.0), (NormP::Two, 3.5), (NormP::One, 4.0)] {
            let e = sm_estimate_adaptive(&a, &s, p, 12, 18).unwrap();
            assert!((e.value - want).abs() < 0.02, "{p:?}: {} vs {want}", e.value);
        }
    }
}

#[test]
fn balanced_keeps_scalar_smoothness() {
    let s = spec(2, 2);
    let n = quincunx();
    for m in [2u32, 3] {
        let scalar = fixtures::three_direction(m);
        let b = balanced_from_scalar(&scalar, &n).unwrap();
        assert_eq!(sum_rule_order(&b, &s, 10).unwrap().order, sum_rule_order(&scalar, &s, 10).unwrap().order);
        let x = sm_estimate(&scalar, &s, NormP::Two, 7).unwrap().value;
        let y = sm_estimate(&b, &s, NormP::Two, 7).unwrap().value;
        assert!((x - y).abs() < 0.1, "m={m}: {x} vs {y}");
    }
}

#[test]
fn smoothness_invariant_under_transform() {
    let s = spec(2, 2);
    let a = fixtures::a4().mask;
    let c = MatrixFilter::scalar(2, [(vec![0, 0], q(1, 2)), (vec![1, 0], q(-1, 4)), (vec![0, -1], q(1, 3))]);
    let u = MatrixFilter::from_components(&[
        vec![MatrixFilter::delta(2, 1), MatrixFilter::zero(2, 1, 1)],
        vec![c, MatrixFilter::delta(2, 1)],
    ]);
    let t = transform_filter(&a, &s, &verify_strong(&u).unwrap().unwrap()).unwrap();
    let x = sm_estimate(&a, &s, NormP::Two, 7).unwrap().value;
    let y = sm_estimate(&t, &s, NormP::Two, 7).unwrap().value;
    assert!((x - y).abs() < 0.05, "{x} vs {y}");
}
