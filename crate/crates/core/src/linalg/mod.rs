//! Dense complex linear-algebra kernels.

pub mod eigen;
pub mod lu;
pub mod matrix;
pub mod svd;
pub mod sylvester;

pub use eigen::{eigen_decompose, eigenvalues, EigenPair, OrderedSpectrum};
pub use matrix::{ComplexMatrix, C64};
pub use svd::{nullspace, Svd};
pub use sylvester::solve_sylvester;

use crate::error::Result;
use crate::polyfactor::MatrixPolynomial;

/// Roots of `det P(t)` via the block-companion linearization, in canonical order.
pub fn poly_eigenvalues(p: &MatrixPolynomial) -> Result<OrderedSpectrum> {
    let values = eigenvalues(&p.companion())?;
    OrderedSpectrum::canonical(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::ONE;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn linear_diagonal_polynomial() {
        let p = MatrixPolynomial::new(vec![ComplexMatrix::diag(&[c(1.0), c(2.0)])]).unwrap();
        let s = poly_eigenvalues(&p).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.values()[0] - ONE).norm() < 1e-13);
        assert!((s.values()[1] - c(2.0)).norm() < 1e-13);
    }

    #[test]
    fn scalar_quadratic() {
        // t^2 - 5t + 6: a1 = 5, a2 = 6
        let p = MatrixPolynomial::new(vec![ComplexMatrix::scalar(c(5.0)), ComplexMatrix::scalar(c(6.0))]).unwrap();
        let s = poly_eigenvalues(&p).unwrap();
        assert!((s.values()[0] - c(2.0)).norm() < 1e-12);
        assert!((s.values()[1] - c(3.0)).norm() < 1e-12);
    }

    #[test]
    fn product_of_diagonal_factors() {
        // (t - diag(1,2))(t - diag(3,4)): a1 = diag(4,6), a2 = diag(3,8)
        let p = MatrixPolynomial::new(vec![
            ComplexMatrix::diag(&[c(4.0), c(6.0)]),
            ComplexMatrix::diag(&[c(3.0), c(8.0)]),
        ])
        .unwrap();
        let s = poly_eigenvalues(&p).unwrap();
        for (got, want) in s.values().iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((got - c(want)).norm() < 1e-12, "{got} vs {want}");
        }
    }
}
