//! Exact phase-I simplex for small dense feasibility problems
//! `A x = b, x ≥ 0` over arbitrary-precision rationals. Bland's rule keeps
//! it cycle-free.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::rational::Rational;

pub type Big = BigRational;

pub fn big(x: &Rational) -> Big {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

/// Back to `Ratio<i128>` when it fits.
pub fn small(x: &Big) -> Option<Rational> {
    let n: i128 = x.numer().try_into().ok()?;
    let d: i128 = x.denom().try_into().ok()?;
    Some(Rational::new(n, d))
}

/// A nonnegative solution of `A x = b`, or `None` when the system is
/// infeasible. `a` is row-major with one row per equation.
pub fn feasible_point(a: &[Vec<Big>], b: &[Big]) -> Option<Vec<Big>> {
    let m = a.len();
    assert_eq!(m, b.len(), "one right-hand side per row");
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    let rhs = width - 1;

    // Tableau with artificial columns n..n+m; every row normalized to b ≥ 0.
    let mut tab: Vec<Vec<Big>> = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        assert_eq!(row.len(), n, "ragged constraint matrix");
        let flip = b[i].is_negative();
        let mut t = vec![Big::zero(); width];
        for (j, v) in row.iter().enumerate() {
            t[j] = if flip { -v.clone() } else { v.clone() };
        }
        t[n + i] = Big::from_integer(1.into());
        t[rhs] = if flip { -b[i].clone() } else { b[i].clone() };
        tab.push(t);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Reduced costs of the phase-I objective Σ artificials.
    let mut cost = vec![Big::zero(); width];
    for row in &tab {
        for j in 0..n {
            cost[j] -= &row[j];
        }
        cost[rhs] -= &row[rhs];
    }

    loop {
        let Some(enter) = (0..n + m).find(|&j| cost[j].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Big)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[enter].is_positive() {
                let ratio = &row[rhs] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // Phase-I objective is bounded below by zero, so a pivot row exists.
        let (p, _) = leave.expect("bounded phase-I objective");
        pivot(&mut tab, &mut cost, p, enter);
        basis[p] = enter;
    }

    if !cost[rhs].is_zero() {
        return None;
    }
    let mut x = vec![Big::zero(); n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = tab[i][rhs].clone();
        }
    }
    Some(x)
}

fn pivot(tab: &mut [Vec<Big>], cost: &mut [Big], p: usize, col: usize) {
    let piv = tab[p][col].clone();
    for v in tab[p].iter_mut() {
        *v /= &piv;
    }
    let prow = tab[p].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i == p || row[col].is_zero() {
            continue;
        }
        let factor = row[col].clone();
        for (v, pv) in row.iter_mut().zip(&prow) {
            if !pv.is_zero() {
                *v -= &factor * pv;
            }
        }
    }
    if !cost[col].is_zero() {
        let factor = cost[col].clone();
        for (v, pv) in cost.iter_mut().zip(&prow) {
            if !pv.is_zero() {
                *v -= &factor * pv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn b(p: i128, q: i128) -> Big {
        big(&rat(p, q))
    }

    fn residual_ok(a: &[Vec<Big>], rhs: &[Big], x: &[Big]) -> bool {
        x.iter().all(|v| !v.is_negative())
            && a.iter().zip(rhs).all(|(row, r)| {
                row.iter().zip(x).fold(Big::zero(), |acc, (c, v)| acc + c * v) == *r
            })
    }

    #[test]
    fn finds_convex_weights() {
        // w1·1 + w2·2 = 3/2, w1 + w2 = 1.
        let a = vec![vec![b(1, 1), b(2, 1)], vec![b(1, 1), b(1, 1)]];
        let rhs = vec![b(3, 2), b(1, 1)];
        let x = feasible_point(&a, &rhs).unwrap();
        assert_eq!(x, vec![b(1, 2), b(1, 2)]);
    }

    #[test]
    fn detects_infeasibility() {
        // x1 + x2 = 1 and x1 + x2 = 2.
        let a = vec![vec![b(1, 1), b(1, 1)], vec![b(1, 1), b(1, 1)]];
        assert!(feasible_point(&a, &[b(1, 1), b(2, 1)]).is_none());
        // x = −1 with x ≥ 0.
        assert!(feasible_point(&[vec![b(1, 1)]], &[b(-1, 1)]).is_none());
    }

    #[test]
    fn handles_redundant_rows_and_negative_rhs() {
        let a = vec![
            vec![b(1, 1), b(0, 1), b(1, 1)],
            vec![b(2, 1), b(0, 1), b(2, 1)],
            vec![b(0, 1), b(-1, 1), b(1, 1)],
        ];
        let rhs = vec![b(1, 1), b(2, 1), b(-1, 3)];
        let x = feasible_point(&a, &rhs).unwrap();
        assert!(residual_ok(&a, &rhs, &x));
    }

    #[test]
    fn round_trips_small_values() {
        assert_eq!(small(&b(-7, 12)), Some(rat(-7, 12)));
    }
}
