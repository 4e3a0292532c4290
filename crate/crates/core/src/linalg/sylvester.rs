use super::eigen::{eigenvalues, fmt_c};
use super::lu::Lu;
use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};
use crate::tol::{SEP_MIN, SOLVE_TOL};

/// Solves `a2 L - L a1 = I` by vectorizing to an `m^2 x m^2` linear system.
///
/// Row-major vectorization gives `(a2 (x) I - I (x) a1^T) vec(L) = vec(I)`.
pub fn solve_sylvester(a1: &ComplexMatrix, a2: &ComplexMatrix) -> Result<ComplexMatrix> {
    let m = a1.rows();
    if !a1.is_square() || !a2.is_square() || a2.rows() != m {
        return Err(Error::InvalidInput(format!(
            "solve_sylvester needs two square matrices of equal size, got {}x{} and {}x{}",
            a1.rows(),
            a1.cols(),
            a2.rows(),
            a2.cols()
        )));
    }
    let id = ComplexMatrix::identity(m);
    let system = &a2.kron(&id) - &id.kron(&a1.transpose());
    let lu = Lu::new(&system)?;
    if lu.is_singular(1e-12) {
        return Err(Error::SpectraOverlap(format!(
            "vectorized Sylvester system is singular (pivot ratio {:e})",
            lu.pivot_ratio()
        )));
    }
    let rhs: Vec<C64> = id.entries().to_vec();
    let x = lu.solve_vec(&rhs);
    let lambda = ComplexMatrix::from_row_major(m, m, x)
        .map_err(|_| Error::SpectraOverlap("non-finite Sylvester solution".into()))?;
    let resid = (&(a2 * &lambda) - &(&lambda * a1)) - &id;
    let bound = SOLVE_TOL * (a1.frobenius_norm() + a2.frobenius_norm() + 1.0);
    if resid.frobenius_norm() > bound {
        return Err(Error::SpectraOverlap(format!(
            "Sylvester residual {:e} exceeds {bound:e}",
            resid.frobenius_norm()
        )));
    }
    Ok(lambda)
}

/// Checks that the spectra of `a` and `b` stay `SEP_MIN` apart (scaled).
pub fn check_spectral_gap(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    let ea = eigenvalues(a)?;
    let eb = eigenvalues(b)?;
    let scale = ea.iter().chain(&eb).map(|z| z.norm()).fold(1.0, f64::max);
    for x in &ea {
        for y in &eb {
            if (x - y).norm() < SEP_MIN * scale {
                return Err(Error::SpectraOverlap(format!(
                    "eigenvalues {} and {} coincide",
                    fmt_c(*x),
                    fmt_c(*y)
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_equation() {
        let a1 = ComplexMatrix::scalar(C64::new(3.0, 0.0));
        let a2 = ComplexMatrix::scalar(C64::new(7.0, 0.0));
        let l = solve_sylvester(&a1, &a2).unwrap();
        assert!((l[(0, 0)] - C64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn identical_spectra_overlap() {
        let a = ComplexMatrix::from_real_rows(&[&[0.3, -1.2], &[0.7, 0.4]]);
        let err = solve_sylvester(&a, &a).unwrap_err();
        assert_eq!(err.name(), "SpectraOverlap");
        assert!(check_spectral_gap(&a, &a).is_err());
    }

    #[test]
    fn diagonal_decouples() {
        let a1 = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]);
        let a2 = ComplexMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 5.0]]);
        let l = solve_sylvester(&a1, &a2).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.25]]);
        assert!(l.distance(&expected) < 1e-14);
    }

    #[test]
    fn non_commuting_residual() {
        let a1 = ComplexMatrix::from_fn(3, 3, |i, j| {
            C64::new((i + 2 * j) as f64 * 0.2 - 0.5, (i * j) as f64 * 0.1)
        });
        let a2 = ComplexMatrix::from_fn(3, 3, |i, j| {
            C64::new(if i == j { 3.0 } else { 0.4 }, (i as f64) - (j as f64) * 0.3)
        });
        let l = solve_sylvester(&a1, &a2).unwrap();
        let resid = (&(&a2 * &l) - &(&l * &a1)) - &ComplexMatrix::identity(3);
        assert!(resid.frobenius_norm() < 1e-12);
    }
}
