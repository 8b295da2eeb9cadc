//! Closed-form B-spline reference values, kept independent of the scheme code.

use crate::error::{Error, Result};
use crate::filter::{BoxRange, MatrixFilter};
use crate::lattice::{int_inverse, IntMatrix, LatticePoint, MultiIndex};
use crate::scalar::{q_to_f64, Q};
use crate::scheme::SampledGrid;
use num::{One, Signed, Zero};

/// Uncentred cardinal B-spline N_k on [0, k), with N_1 the indicator of [0, 1).
pub fn cardinal_bspline(k: u32, x: &Q) -> Q {
    if k == 1 {
        return if !x.is_negative() && x < &Q::one() { Q::one() } else { Q::zero() };
    }
    let kq = Q::from_integer(k.into());
    let km1 = Q::from_integer((k - 1).into());
    let left = x * cardinal_bspline(k - 1, x);
    let right = (&kq - x) * cardinal_bspline(k - 1, &(x - Q::one()));
    (left + right) / km1
}

/// j-th derivative of N_k: Σ_i (−1)^i binom(j,i) N_{k−j}(x − i).
pub fn cardinal_bspline_derivative(k: u32, j: u32, x: &Q) -> Result<Q> {
    if j == 0 {
        return Ok(cardinal_bspline(k, x));
    }
    if j + 2 > k {
        return Err(Error::Precondition(format!("derivative order {j} too high for order-{k} B-spline")));
    }
    let mut acc = Q::zero();
    let mut binom = Q::one();
    for i in 0..=j {
        let term = &binom * cardinal_bspline(k - j, &(x - Q::from_integer(i.into())));
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
        binom = binom * Q::from_integer((j - i).into()) / Q::from_integer((i + 1).into());
    }
    Ok(acc)
}

/// Tensor centred B-spline of order k in d variables, optionally composed with x ↦ Nx − γ.
#[derive(Clone, Debug)]
pub struct SplineOracle {
    pub order: u32,
    pub d: usize,
    pub change: Option<IntMatrix>,
    pub shift: Vec<i64>,
}

impl SplineOracle {
    pub fn tensor(order: u32, d: usize) -> Self {
        SplineOracle { order, d, change: None, shift: vec![0; d] }
    }

    pub fn composed(order: u32, n: IntMatrix, shift: Vec<i64>) -> Self {
        let d = n.len();
        SplineOracle { order, d, change: Some(n), shift }
    }

    fn axis(&self, y: &Q, j: u32) -> Result<Q> {
        let half = Q::new(self.order.into(), 2.into());
        cardinal_bspline_derivative(self.order, j, &(y + half))
    }

    /// Exact ∂^μ of x ↦ B(Nx − γ) at x.
    pub fn eval(&self, x: &[Q], mu: &MultiIndex) -> Result<Q> {
        if x.len() != self.d || mu.dim() != self.d {
            return Err(Error::DimensionMismatch("oracle point or multi-index has the wrong length".into()));
        }
        if mu.order() + 2 > self.order {
            return Err(Error::Precondition(format!(
                "derivative order {} too high for order-{} B-spline",
                mu.order(),
                self.order
            )));
        }
        let y: Vec<Q> = match &self.change {
            None => x.iter().zip(&self.shift).map(|(a, s)| a - Q::from_integer((*s).into())).collect(),
            Some(n) => (0..self.d)
                .map(|i| {
                    let mut acc = -Q::from_integer(self.shift[i].into());
                    for j in 0..self.d {
                        acc += Q::from_integer(n[i][j].into()) * &x[j];
                    }
                    acc
                })
                .collect(),
        };
        match &self.change {
            None => {
                let mut v = Q::one();
                for i in 0..self.d {
                    v *= self.axis(&y[i], mu.0[i])?;
                    if v.is_zero() {
                        break;
                    }
                }
                Ok(v)
            }
            Some(n) => {
                // ∂_{x_j} = Σ_i N_ij ∂_{y_i}: expand Π_j (Σ_i N_ij ∂_i)^{μ_j} into y-multi-indices
                let mut terms: Vec<(Vec<u32>, Q)> = vec![(vec![0; self.d], Q::one())];
                for j in 0..self.d {
                    for _ in 0..mu.0[j] {
                        let mut next: Vec<(Vec<u32>, Q)> = Vec::new();
                        for (e, c) in &terms {
                            for (i, row) in n.iter().enumerate() {
                                if row[j] == 0 {
                                    continue;
                                }
                                let mut e2 = e.clone();
                                e2[i] += 1;
                                let c2 = c * Q::from_integer(row[j].into());
                                match next.iter_mut().find(|(x, _)| *x == e2) {
                                    Some(slot) => slot.1 += c2,
                                    None => next.push((e2, c2)),
                                }
                            }
                        }
                        terms = next;
                    }
                }
                let mut acc = Q::zero();
                for (e, c) in terms {
                    if c.is_zero() {
                        continue;
                    }
                    let mut v = c;
                    for i in 0..self.d {
                        v *= self.axis(&y[i], e[i])?;
                        if v.is_zero() {
                            break;
                        }
                    }
                    acc += v;
                }
                Ok(acc)
            }
        }
    }

    /// Bounding box in x of the support of x ↦ B(Nx − γ), at scale m^{−n}, closed.
    pub fn support_box(&self, m: i64, level: u32) -> BoxRange {
        let half = Q::new(self.order.into(), 2.into());
        let s = Q::from_integer(m.pow(level).into());
        // corners of the y-box [−k/2, k/2]^d shifted by γ, mapped back by N^{−1}
        let corners: Vec<Vec<Q>> = (0..1usize << self.d)
            .map(|bits| {
                (0..self.d)
                    .map(|i| {
                        let c = if bits >> i & 1 == 1 { half.clone() } else { -half.clone() };
                        c + Q::from_integer(self.shift[i].into())
                    })
                    .collect()
            })
            .collect();
        let back: Vec<Vec<Q>> = match &self.change {
            None => corners,
            Some(n) => {
                let inv = int_inverse(n).expect("change of variables must be invertible");
                corners
                    .iter()
                    .map(|y| (0..self.d).map(|i| (0..self.d).map(|j| &inv[i][j] * &y[j]).sum()).collect())
                    .collect()
            }
        };
        let lo: Vec<i64> = (0..self.d)
            .map(|i| back.iter().map(|c| (&c[i] * &s).floor().to_integer().try_into().unwrap()).min().unwrap())
            .collect();
        let hi: Vec<i64> = (0..self.d)
            .map(|i| back.iter().map(|c| (&c[i] * &s).ceil().to_integer().try_into().unwrap()).max().unwrap())
            .collect();
        BoxRange::new(lo, hi)
    }
}

/// ∂^μ of an oracle or vector of oracles at x.
pub fn eval_spline(oracle: &SplineOracle, x: &[Q], mu: &MultiIndex) -> Result<Q> {
    oracle.eval(x, mu)
}

/// Exact samples ∂^μ φ_l(m^{−n}k) for each component oracle over `bx` (default: union of supports).
pub fn oracle_grid(
    comps: &[SplineOracle],
    mu: &MultiIndex,
    m: i64,
    level: u32,
    bx: Option<BoxRange>,
) -> Result<SampledGrid<f64>> {
    let d = comps[0].d;
    let bx = bx.unwrap_or_else(|| {
        comps.iter().map(|o| o.support_box(m, level)).reduce(|a, b| a.hull(&b)).unwrap()
    });
    let s = Q::from_integer(m.pow(level).into());
    let pts = bx.points();
    let eval_point = |k: &LatticePoint| -> Result<Option<(LatticePoint, Vec<f64>)>> {
        let x: Vec<Q> = k.iter().map(|c| Q::from_integer((*c).into()) / &s).collect();
        let vals: Vec<f64> = comps.iter().map(|o| o.eval(&x, mu).map(|v| q_to_f64(&v))).collect::<Result<_>>()?;
        Ok(if vals.iter().any(|v| *v != 0.0) { Some((k.clone(), vals)) } else { None })
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Option<(LatticePoint, Vec<f64>)>> = {
        use rayon::prelude::*;
        pts.par_iter().map(eval_point).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Option<(LatticePoint, Vec<f64>)>> = pts.iter().map(eval_point).collect::<Result<_>>()?;
    let data = MatrixFilter::from_entries(d, comps.len(), 1, rows.into_iter().flatten());
    Ok(SampledGrid::from_filter(data, level, m, Some(bx)))
}

/// Component oracles φ_l(x) = B(Nx − γ_l) for a balanced filter built from the order-k tensor mask.
pub fn balanced_oracles(order: u32, n: &IntMatrix, gammas: &[LatticePoint]) -> Vec<SplineOracle> {
    gammas.iter().map(|g| SplineOracle::composed(order, n.clone(), g.clone())).collect()
}

/// |x| ≤ 1 hat: 1 − |x|.
pub fn hat_value(x: &Q) -> Q {
    let a = Q::one() - x.abs();
    if a.is_negative() {
        Q::zero()
    } else {
        a
    }
}

/// Indicator of [0, 1).
pub fn haar_value(x: &Q) -> Q {
    cardinal_bspline(1, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::quincunx;
    use crate::scalar::{q, qi};

    #[test]
    fn hat_values() {
        let o = SplineOracle::tensor(2, 1);
        let z = MultiIndex::zero(1);
        assert_eq!(o.eval(&[qi(0)], &z).unwrap(), qi(1));
        assert_eq!(o.eval(&[q(1, 2)], &z).unwrap(), q(1, 2));
        assert_eq!(o.eval(&[q(-1, 3)], &z).unwrap(), hat_value(&q(-1, 3)));
    }

    #[test]
    fn cubic_centre() {
        let o = SplineOracle::tensor(4, 1);
        assert_eq!(o.eval(&[qi(0)], &MultiIndex::zero(1)).unwrap(), q(2, 3));
        assert_eq!(o.eval(&[qi(1)], &MultiIndex::zero(1)).unwrap(), q(1, 6));
    }

    #[test]
    fn tensor_derivative() {
        // B'(1/2) for the centred cubic is −(1/2)(1/2)^... from N_3 differences: N_3(5/2) − N_3(3/2) = 1/8 − 3/4
        let o = SplineOracle::tensor(4, 2);
        let v = o.eval(&[q(1, 2), qi(0)], &MultiIndex(vec![1, 0])).unwrap();
        assert_eq!(v, (q(1, 8) - q(3, 4)) * q(2, 3));
        assert!(o.eval(&[qi(0), qi(0)], &MultiIndex(vec![3, 0])).is_err());
    }

    #[test]
    fn hat_grid_count() {
        let g = oracle_grid(&[SplineOracle::tensor(2, 1)], &MultiIndex::zero(1), 2, 3, None).unwrap();
        assert_eq!(g.bx, BoxRange::new(vec![-8], vec![8]));
        assert_eq!(g.bx.volume(), 17);
        assert_eq!(g.iter().count(), 15);
    }

    #[test]
    fn partition_of_unity() {
        let o = SplineOracle::tensor(4, 1);
        for num in 0..8 {
            let x = q(num, 8);
            let s: Q = (-3..=3).map(|k| o.eval(&[&x - qi(k)], &MultiIndex::zero(1)).unwrap()).sum();
            assert_eq!(s, qi(1));
        }
    }

    #[test]
    fn composed_chain_rule() {
        // d/dx1 B(x1 + x2, x1 − x2) = B_1 + B_2
        let n = quincunx();
        let o = SplineOracle::composed(4, n, vec![0, 0]);
        let t = SplineOracle::tensor(4, 2);
        let x = [q(1, 4), q(-1, 8)];
        let y = [q(1, 8), q(3, 8)];
        let lhs = o.eval(&x, &MultiIndex(vec![1, 0])).unwrap();
        let rhs = t.eval(&y, &MultiIndex(vec![1, 0])).unwrap() + t.eval(&y, &MultiIndex(vec![0, 1])).unwrap();
        assert_eq!(lhs, rhs);
        let lhs = o.eval(&x, &MultiIndex(vec![0, 1])).unwrap();
        let rhs = t.eval(&y, &MultiIndex(vec![1, 0])).unwrap() - t.eval(&y, &MultiIndex(vec![0, 1])).unwrap();
        assert_eq!(lhs, rhs);
    }
}
