//! One-sided (Hestenes) Jacobi SVD.
//!
//! Columns of `A V` are orthogonalized by plane rotations until every pair is
//! numerically orthogonal; the column norms are then the singular values. The
//! method keeps small singular values accurate, which the kernel tests rely on.

use super::matrix::{inner, vec_norm, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone)]
pub struct Svd {
    /// Singular values, descending.
    pub values: Vec<f64>,
    /// Left singular vectors as columns (`rows x k`), zero columns for zero values.
    pub u: Vec<Vec<C64>>,
    /// Right singular vectors as columns (`cols x cols`).
    pub v: Vec<Vec<C64>>,
}

impl Svd {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let (rows, cols) = (a.rows(), a.cols());
        let mut w: Vec<Vec<C64>> = (0..cols).map(|j| a.column(j)).collect();
        let mut v: Vec<Vec<C64>> = (0..cols)
            .map(|j| {
                let mut e = vec![ZERO; cols];
                e[j] = ONE;
                e
            })
            .collect();

        let floor = (1e-18 * a.frobenius_norm()).powi(2);
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..cols {
                for q in p + 1..cols {
                    let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                    let gamma = inner(&w[p], &w[q]);
                    let g = gamma.norm();
                    if g == 0.0 || alpha.min(beta) <= floor || g <= f64::EPSILON * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    // Rotate the phase out of gamma, then apply a real rotation.
                    let phase = gamma.conj() / g;
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut w, p, q, phase, c, s);
                    rotate(&mut v, p, q, phase, c, s);
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence("Jacobi SVD exceeded sweep limit".into()));
        }

        let mut order: Vec<(usize, f64)> = w.iter().map(|col| vec_norm(col)).enumerate().collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        let values: Vec<f64> = order.iter().map(|&(_, s)| s).collect();
        let u = order
            .iter()
            .map(|&(j, s)| {
                if s > 0.0 {
                    w[j].iter().map(|z| z / s).collect()
                } else {
                    vec![ZERO; rows]
                }
            })
            .collect();
        let v = order.iter().map(|&(j, _)| v[j].clone()).collect();
        Ok(Self { values, u, v })
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Right singular vectors whose singular value is at most `threshold`,
    /// ordered from smallest singular value upward.
    pub fn null_vectors(&self, threshold: f64) -> Vec<Vec<C64>> {
        let mut out: Vec<(f64, &Vec<C64>)> = self
            .values
            .iter()
            .zip(&self.v)
            .filter(|(&s, _)| s <= threshold)
            .map(|(&s, v)| (s, v))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.into_iter().map(|(_, v)| v.clone()).collect()
    }

    /// Minimum-norm least-squares solution of `A x = b`, discarding singular
    /// values below `rel_cutoff * max`.
    pub fn solve_least_squares(&self, b: &[C64], rel_cutoff: f64) -> Vec<C64> {
        let n = self.v.len();
        let cutoff = rel_cutoff * self.max_value();
        let mut x = vec![ZERO; n];
        for ((&s, u), v) in self.values.iter().zip(&self.u).zip(&self.v) {
            if s <= cutoff || s == 0.0 {
                continue;
            }
            let coef = inner(u, b) / s;
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += coef * vi;
            }
        }
        x
    }
}

fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, phase: C64, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let yq = *y * phase;
        let xp = *x;
        *x = xp * c - yq * s;
        *y = xp * s + yq * c;
    }
}

/// Orthonormal basis of `{v : |M v| <= tol * |M|_2}`.
pub fn nullspace(m: &ComplexMatrix, tol: f64) -> Result<Vec<Vec<C64>>> {
    let svd = Svd::new(m)?;
    Ok(svd.null_vectors(tol * svd.max_value()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &Svd, rows: usize, cols: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(rows, cols);
        for ((s, u), v) in svd.values.iter().zip(&svd.u).zip(&svd.v) {
            for i in 0..rows {
                for j in 0..cols {
                    out[(i, j)] += u[i] * *s * v[j].conj();
                }
            }
        }
        out
    }

    #[test]
    fn reconstructs_rectangular_matrices() {
        let tall = ComplexMatrix::from_fn(5, 3, |i, j| {
            C64::new((i * 3 + j) as f64 * 0.3 - 1.0, (i as f64 - j as f64).sin())
        });
        let svd = Svd::new(&tall).unwrap();
        assert!(reconstruct(&svd, 5, 3).distance(&tall) < 1e-12);
        let wide = tall.adjoint();
        let svd = Svd::new(&wide).unwrap();
        assert!(reconstruct(&svd, 3, 5).distance(&wide) < 1e-12);
        assert!(svd.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn zero_matrix_has_full_kernel() {
        let basis = nullspace(&ComplexMatrix::zeros(2, 2), 1e-9).unwrap();
        assert_eq!(basis.len(), 2);
    }

    #[test]
    fn identity_has_trivial_kernel() {
        assert!(nullspace(&ComplexMatrix::identity(3), 1e-9).unwrap().is_empty());
    }

    #[test]
    fn rank_one_kernel() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let basis = nullspace(&m, 1e-9).unwrap();
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        // proportional to (1, -1)/sqrt(2)
        let r = 0.5f64.sqrt();
        let overlap = (v[0] * r - v[1] * r).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
        assert!(vec_norm(&m.mul_vec(v)) < 1e-12);
    }

    #[test]
    fn least_squares_matches_exact_solution() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0], &[1.0, 1.0]]);
        let x_true = [C64::new(1.0, -1.0), C64::new(0.5, 2.0)];
        let b = a.mul_vec(&x_true);
        let x = Svd::new(&a).unwrap().solve_least_squares(&b, 1e-14);
        assert!((x[0] - x_true[0]).norm() < 1e-13 && (x[1] - x_true[1]).norm() < 1e-13);
    }
}
