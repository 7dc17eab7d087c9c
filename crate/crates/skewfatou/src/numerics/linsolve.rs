//! Small linear solves by fraction-free (Bareiss) elimination. On the exact
//! path every division is exact and the residual A x - y is exactly zero.

use crate::error::{Error, Result};
use crate::numerics::Scalar;

pub const MAX_DIM: usize = 8;

/// Solve A x = y for square A of size <= 8.
pub fn exact_solve_linear<S: Scalar>(a: &[Vec<S>], y: &[S]) -> Result<Vec<S>> {
    let n = a.len();
    if n == 0 || n > MAX_DIM || a.iter().any(|r| r.len() != n) || y.len() != n {
        return Err(Error::Usage(format!(
            "expected square system of size 1..={MAX_DIM}"
        )));
    }
    // augmented matrix
    let mut m: Vec<Vec<S>> = a
        .iter()
        .zip(y)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();

    let one = y[0].one_like();
    let mut prev = one;
    for i in 0..n {
        // pivot: first row with a nonzero entry in column i, preferring the
        // largest magnitude for the floating path
        let piv = (i..n)
            .filter(|&r| !m[r][i].is_zero())
            .max_by(|&r1, &r2| {
                m[r1][i]
                    .log2_abs()
                    .partial_cmp(&m[r2][i].log2_abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .ok_or(Error::SingularSystem)?;
        m.swap(i, piv);
        for r in (i + 1)..n {
            for c in (i + 1)..=n {
                let t = m[i][i].mul(&m[r][c]).sub(&m[r][i].mul(&m[i][c]));
                m[r][c] = t.div(&prev)?;
            }
            m[r][i] = m[r][i].zero_like();
        }
        prev = m[i][i].clone();
    }

    // back substitution
    let mut x = vec![y[0].zero_like(); n];
    for i in (0..n).rev() {
        if m[i][i].is_zero() {
            return Err(Error::SingularSystem);
        }
        let mut acc = m[i][n].clone();
        for c in (i + 1)..n {
            acc = acc.sub(&m[i][c].mul(&x[c]));
        }
        x[i] = acc.div(&m[i][i])?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{GaussianRational, Rational};

    fn q(n: i64, d: i64) -> GaussianRational {
        GaussianRational::real(Rational::from((n, d)))
    }

    #[test]
    fn identity_returns_rhs() {
        let a = vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]];
        let y = vec![q(3, 7), q(-2, 5)];
        assert_eq!(exact_solve_linear(&a, &y).unwrap(), y);
    }

    #[test]
    fn diagonal_solve() {
        let a = vec![vec![q(2, 1), q(0, 1)], vec![q(0, 1), q(4, 1)]];
        let y = vec![q(1, 1), q(1, 1)];
        let x = exact_solve_linear(&a, &y).unwrap();
        assert_eq!(x, vec![q(1, 2), q(1, 4)]);
    }

    #[test]
    fn singular_detected() {
        let a = vec![vec![q(1, 1), q(1, 1)], vec![q(2, 1), q(2, 1)]];
        let y = vec![q(1, 1), q(1, 1)];
        assert!(matches!(
            exact_solve_linear(&a, &y),
            Err(Error::SingularSystem)
        ));
    }

    #[test]
    fn residual_exactly_zero_on_random_system() {
        use crate::numerics::Scalar;
        // fixed pseudo-random rational matrix
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as i64 % 19) - 9
        };
        for _ in 0..20 {
            let n = 4;
            let a: Vec<Vec<GaussianRational>> = (0..n)
                .map(|_| (0..n).map(|_| q(next(), 1 + next().abs())).collect())
                .collect();
            let y: Vec<GaussianRational> = (0..n).map(|_| q(next(), 1 + next().abs())).collect();
            match exact_solve_linear(&a, &y) {
                Ok(x) => {
                    for i in 0..n {
                        let mut acc = y[i].neg();
                        for c in 0..n {
                            acc = acc.add(&a[i][c].mul(&x[c]));
                        }
                        assert!(acc.is_zero(), "residual must be exactly zero");
                    }
                }
                Err(Error::SingularSystem) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn oversized_rejected() {
        let a: Vec<Vec<GaussianRational>> = (0..9).map(|_| vec![q(1, 1); 9]).collect();
        let y = vec![q(1, 1); 9];
        assert!(matches!(exact_solve_linear(&a, &y), Err(Error::Usage(_))));
    }
}
