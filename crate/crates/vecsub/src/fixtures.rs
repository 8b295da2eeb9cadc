//! Transcribed example masks with their published metadata.
//!
//! Two-dimensional blocks are entered the way they are usually printed: the
//! top row holds the largest second coordinate and columns run left to right
//! in the first coordinate.

use crate::constructions::{bspline_filter, three_direction_filter};
use crate::filter::{MatrixFilter, NormP};
use crate::scalar::{q, qi, Q};

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub mask: MatrixFilter<Q>,
    pub dilation: i64,
    pub sum_rule_order: u32,
    /// υ̂(0) (before any scaling).
    pub matching_value: Vec<Q>,
    /// Symmetry group name and centre set.
    pub symmetry: Option<(&'static str, Vec<Vec<Q>>)>,
    /// Published smoothness values: (p, value, exact?).
    pub smoothness: Vec<(NormP, f64, bool)>,
}

/// Scalar 2-D block `num/den · rows` on `[x0, x1] × [y0, y1]`.
pub fn printed_block(num: i64, den: i64, rows: &[&[i64]], x: (i64, i64), y: (i64, i64)) -> MatrixFilter<Q> {
    assert_eq!(rows.len() as i64, y.1 - y.0 + 1, "row count vs y range");
    let c = q(num, den);
    let mut entries = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len() as i64, x.1 - x.0 + 1, "column count vs x range");
        let yy = y.1 - i as i64;
        for (j, &v) in row.iter().enumerate() {
            if v != 0 {
                entries.push((vec![x.0 + j as i64, yy], &c * qi(v)));
            }
        }
    }
    MatrixFilter::scalar(2, entries)
}

fn assemble(blocks: Vec<Vec<MatrixFilter<Q>>>) -> MatrixFilter<Q> {
    MatrixFilter::from_components(&blocks)
}

fn zero2() -> MatrixFilter<Q> {
    MatrixFilter::zero(2, 1, 1)
}

fn origin_pair() -> Vec<Vec<Q>> {
    vec![vec![qi(0), qi(0)], vec![qi(0), qi(0)]]
}

pub fn quincunx_centres() -> Vec<Vec<Q>> {
    vec![vec![qi(0), qi(0)], vec![q(1, 2), q(1, 2)]]
}

pub fn sqrt3_centres() -> Vec<Vec<Q>> {
    vec![vec![qi(0), qi(0)], vec![q(1, 3), q(2, 3)], vec![q(2, 3), q(1, 3)]]
}

pub fn ex1() -> Fixture {
    let a11 = printed_block(
        1,
        64,
        &[
            &[0, 0, 0, 0, -1, -1, 0],
            &[0, 0, -1, 0, 2, 0, -1],
            &[0, -1, 2, 8, 8, 2, -1],
            &[0, 0, 8, 16, 8, 0, 0],
            &[-1, 2, 8, 8, 2, -1, 0],
            &[-1, 0, 2, 0, -1, 0, 0],
            &[0, -1, -1, 0, 0, 0, 0],
        ],
        (-3, 3),
        (-3, 3),
    );
    let a21 = printed_block(
        1,
        32,
        &[
            &[0, 0, 0, -1, 0, 0, -1],
            &[0, 0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 0, 0, 0, 0],
            &[-1, 0, 0, 0, 0, 0, -1],
            &[0, 0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 0, 0, 0, 0],
            &[-1, 0, 0, -1, 0, 0, 0],
        ],
        (-3, 3),
        (-3, 3),
    );
    let a22 = printed_block(
        1,
        64,
        &[&[0, 0, -1, 0, -1], &[0, 0, 0, 0, 0], &[-1, 0, 0, 0, -1], &[0, 0, 0, 0, 0], &[-1, 0, -1, 0, 0]],
        (-2, 2),
        (-2, 2),
    );
    Fixture {
        name: "ex1",
        mask: assemble(vec![vec![a11, zero2()], vec![a21, a22]]),
        dilation: 2,
        sum_rule_order: 4,
        matching_value: vec![qi(1), qi(0)],
        symmetry: Some(("D6", origin_pair())),
        smoothness: vec![(NormP::Two, 2.4408, false)],
    }
}

pub fn ex2() -> Fixture {
    let a11 = printed_block(
        1,
        2048,
        &[
            &[0, 0, 0, 0, 3, 6, 3, 0, 0, 0, 0],
            &[0; 11],
            &[0, 0, 2, 0, -27, -50, -27, 0, 2, 0, 0],
            &[0; 11],
            &[3, 0, -27, 0, 174, 300, 174, 0, -27, 0, 3],
            &[6, 0, -50, 0, 300, 512, 300, 0, -50, 0, 6],
            &[3, 0, -27, 0, 174, 300, 174, 0, -27, 0, 3],
            &[0; 11],
            &[0, 0, 2, 0, -27, -50, -27, 0, 2, 0, 0],
            &[0; 11],
            &[0, 0, 0, 0, 3, 6, 3, 0, 0, 0, 0],
        ],
        (-5, 5),
        (-5, 5),
    );
    let a22 = printed_block(
        1,
        2048,
        &[
            &[0, 0, -1, -2, -1, 0, 0],
            &[0; 7],
            &[-1, 0, 0, 0, 0, 0, -1],
            &[2, 0, 0, 0, 0, 0, 2],
            &[-1, 0, 0, 0, 0, 0, -1],
            &[0; 7],
            &[0, 0, -1, -2, -1, 0, 0],
        ],
        (-3, 3),
        (-3, 3),
    );
    Fixture {
        name: "ex2",
        mask: assemble(vec![vec![a11, zero2()], vec![zero2(), a22]]),
        dilation: 2,
        sum_rule_order: 6,
        matching_value: vec![qi(1), qi(0)],
        symmetry: Some(("D4", origin_pair())),
        smoothness: vec![(NormP::Two, 3.1751, false)],
    }
}

const A4_BIG: [&[i64]; 5] = [&[0, 0, 1, 0, 0], &[0, 6, 16, 6, 0], &[1, 16, 36, 16, 1], &[0, 6, 16, 6, 0], &[0, 0, 1, 0, 0]];
const A4_SMALL: [&[i64]; 4] = [&[0, 1, 1, 0], &[1, 6, 6, 1], &[1, 6, 6, 1], &[0, 1, 1, 0]];

pub fn a4() -> Fixture {
    let a11 = printed_block(1, 256, &A4_BIG, (-2, 2), (-2, 2));
    let a12 = printed_block(1, 64, &A4_SMALL, (-2, 1), (-2, 1));
    let a21 = printed_block(1, 256, &A4_BIG, (-1, 3), (-1, 3));
    let a22 = printed_block(1, 64, &A4_SMALL, (-1, 2), (-1, 2));
    Fixture {
        name: "a4",
        mask: assemble(vec![vec![a11, a12], vec![a21, a22]]),
        dilation: 2,
        sum_rule_order: 4,
        matching_value: vec![qi(1), qi(1)],
        symmetry: Some(("D4", quincunx_centres())),
        smoothness: vec![(NormP::Inf, 3.0, true), (NormP::Two, 3.5, true)],
    }
}

const A6_BIG: [&[i64]; 7] = [
    &[0, 0, 0, 1, 0, 0, 0],
    &[0, 0, 15, 36, 15, 0, 0],
    &[0, 15, 120, 225, 120, 15, 0],
    &[1, 36, 225, 400, 225, 36, 1],
    &[0, 15, 120, 225, 120, 15, 0],
    &[0, 0, 15, 36, 15, 0, 0],
    &[0, 0, 0, 1, 0, 0, 0],
];
const A6_SMALL: [&[i64]; 6] = [
    &[0, 0, 3, 3, 0, 0],
    &[0, 10, 45, 45, 10, 0],
    &[3, 45, 150, 150, 45, 3],
    &[3, 45, 150, 150, 45, 3],
    &[0, 10, 45, 45, 10, 0],
    &[0, 0, 3, 3, 0, 0],
];

pub fn a6() -> Fixture {
    let a11 = printed_block(1, 4096, &A6_BIG, (-3, 3), (-3, 3));
    let a12 = printed_block(1, 2048, &A6_SMALL, (-3, 2), (-3, 2));
    let a21 = printed_block(1, 4096, &A6_BIG, (-2, 4), (-2, 4));
    let a22 = printed_block(1, 2048, &A6_SMALL, (-2, 3), (-2, 3));
    Fixture {
        name: "a6",
        mask: assemble(vec![vec![a11, a12], vec![a21, a22]]),
        dilation: 2,
        sum_rule_order: 6,
        matching_value: vec![qi(1), qi(1)],
        symmetry: Some(("D4", quincunx_centres())),
        smoothness: vec![(NormP::Inf, 5.0, true), (NormP::Two, 5.5, true)],
    }
}

const U2_P: [&[i64]; 3] = [&[0, 1, 1], &[1, 5, 1], &[1, 1, 0]];
const U2_Q: [&[i64]; 3] = [&[1, 6, 1], &[6, 6, 0], &[1, 0, 0]];
const U2_R: [&[i64]; 3] = [&[0, 0, 1], &[0, 6, 6], &[1, 6, 1]];

pub fn au2() -> Fixture {
    let p = |x, y| printed_block(1, 32, &U2_P, x, y);
    let qq = |x, y| printed_block(1, 64, &U2_Q, x, y);
    let r = |x, y| printed_block(1, 64, &U2_R, x, y);
    let blocks = vec![
        vec![p((-1, 1), (-1, 1)), qq((-1, 1), (-2, 0)), r((-2, 0), (-1, 1))],
        vec![qq((0, 2), (0, 2)), r((-1, 1), (0, 2)), p((-1, 1), (0, 2))],
        vec![r((0, 2), (0, 2)), p((0, 2), (-1, 1)), qq((0, 2), (-1, 1))],
    ];
    Fixture {
        name: "au2",
        mask: assemble(blocks),
        dilation: 2,
        sum_rule_order: 4,
        matching_value: vec![qi(1), qi(1), qi(1)],
        symmetry: Some(("H", sqrt3_centres())),
        smoothness: vec![(NormP::Two, 3.5, false)],
    }
}

const U3_P: [&[i64]; 5] =
    [&[0, 0, 0, 1, 0], &[0, 1, 18, 18, 1], &[0, 18, 56, 18, 0], &[1, 18, 18, 1, 0], &[0, 1, 0, 0, 0]];
const U3_Q: [&[i64]; 4] = [&[0, 0, 1, 1], &[0, 4, 13, 4], &[1, 13, 13, 1], &[1, 4, 1, 0]];
const U3_R: [&[i64]; 4] = [&[0, 1, 4, 1], &[1, 13, 13, 1], &[4, 13, 4, 0], &[1, 1, 0, 0]];

pub fn au3() -> Fixture {
    let p = |x, y| printed_block(1, 512, &U3_P, x, y);
    let qq = |x, y| printed_block(3, 512, &U3_Q, x, y);
    let r = |x, y| printed_block(3, 512, &U3_R, x, y);
    let blocks = vec![
        vec![p((-2, 2), (-2, 2)), qq((-2, 1), (-2, 1)), r((-2, 1), (-2, 1))],
        vec![qq((-1, 2), (0, 3)), r((-1, 2), (-1, 2)), p((-2, 2), (-1, 3))],
        vec![r((0, 3), (-1, 2)), p((-1, 3), (-2, 2)), qq((-1, 2), (-1, 2))],
    ];
    Fixture {
        name: "au3",
        mask: assemble(blocks),
        dilation: 2,
        sum_rule_order: 6,
        matching_value: vec![qi(1), qi(1), qi(1)],
        symmetry: Some(("H", sqrt3_centres())),
        smoothness: vec![(NormP::Two, 5.5, false)],
    }
}

/// The six two-dimensional fixtures.
pub fn all() -> Vec<Fixture> {
    vec![ex1(), ex2(), a4(), a6(), au2(), au3()]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    match name {
        "ex1" => Some(ex1()),
        "ex2" => Some(ex2()),
        "a4" => Some(a4()),
        "a6" => Some(a6()),
        "au2" => Some(au2()),
        "au3" => Some(au3()),
        _ => None,
    }
}

/// Scalar hat mask {1/4, 1/2, 1/4} on [−1, 1].
pub fn hat() -> MatrixFilter<Q> {
    bspline_filter(2)
}

/// Scalar Haar mask {1/2, 1/2} on [0, 1].
pub fn haar() -> MatrixFilter<Q> {
    MatrixFilter::scalar(1, [(vec![0], q(1, 2)), (vec![1], q(1, 2))])
}

/// Tensor product B-spline mask A^B_{2m} on Z^2.
pub fn tensor_bspline(order: u32) -> MatrixFilter<Q> {
    let b = bspline_filter(order);
    crate::constructions::tensor_filter(&b, &b)
}

pub fn three_direction(m: u32) -> MatrixFilter<Q> {
    three_direction_filter(m)
}
