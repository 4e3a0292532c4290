//! Interpolation by prescribed kernels, and least-squares fits of sampled
//! matrix functions in a basis of `MTheta_(n,m,c)`.

use super::lattice::Lattice;
use super::space::{mtheta_basis, ThetaSection};
use crate::error::{Error, Result};
use crate::linalg::matrix::{vec_norm, ComplexMatrix, C64, ZERO};
use crate::linalg::svd::Svd;
use crate::tol::{CONSTRAINT_TOL, SEP_MIN, THETA_FACT_TOL};

/// Samples bounded away from these points (in cell units) when fitting quotients.
const AVOID_RADIUS: f64 = 0.1;
const FIT_GRID: usize = 6;
const HOLDOUT_GRID: usize = 5;

/// The section of `MTheta_(n,m,c)` with `f(lambda_k) v_k = 0`, where `c` is
/// fixed by the zero-sum rule as `sum(lambda) - n/2`.
pub fn interpolate(lambdas: &[C64], vs: &[Vec<C64>], n: usize, m: usize, lattice: &Lattice) -> Result<ThetaSection> {
    let c = lambdas.iter().sum::<C64>() - n as f64 / 2.0;
    interpolate_with_c(lambdas, vs, n, m, c, lattice)
}

/// As [`interpolate`] with an explicit `c`; `c` must satisfy the zero-sum rule
/// modulo `(1/m) Gamma`, otherwise the system has only the trivial solution.
pub fn interpolate_with_c(
    lambdas: &[C64],
    vs: &[Vec<C64>],
    n: usize,
    m: usize,
    c: C64,
    lattice: &Lattice,
) -> Result<ThetaSection> {
    if lambdas.len() != m * n || vs.len() != m * n {
        return Err(Error::InvalidInput(format!(
            "need {} points and kernel vectors, got {} and {}",
            m * n,
            lambdas.len(),
            vs.len()
        )));
    }
    if vs.iter().any(|v| v.len() != m || vec_norm(v) == 0.0) {
        return Err(Error::InvalidInput(format!(
            "kernel vectors must be nonzero of length {m}"
        )));
    }
    let cell = lattice.cell_size(m);
    for i in 0..lambdas.len() {
        for j in i + 1..lambdas.len() {
            if lattice.periodic_distance(lambdas[i], lambdas[j], m) < SEP_MIN * cell {
                return Err(Error::InvalidInput(
                    "interpolation points coincide modulo the lattice".into(),
                ));
            }
        }
    }
    let basis = mtheta_basis(n, m, c, lattice)?;
    // rows: sum_k x_k B_k(lambda) v = 0, one m-block per point, each block scaled
    let mut a = ComplexMatrix::zeros(m * lambdas.len(), basis.len());
    for (p, (&lambda, v)) in lambdas.iter().zip(vs).enumerate() {
        let cols: Vec<Vec<C64>> = basis.iter().map(|b| b.eval(lambda).mul_vec(v)).collect();
        let scale = cols.iter().map(|col| vec_norm(col)).fold(0.0, f64::max);
        if scale == 0.0 {
            continue;
        }
        for (k, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                a[(p * m + i, k)] = x / scale;
            }
        }
    }
    let svd = Svd::new(&a)?;
    let null = svd.null_vectors(CONSTRAINT_TOL * svd.max_value().max(f64::MIN_POSITIVE));
    // the system is square; the zero-sum rule makes one equation dependent
    if null.len() != 1 {
        return Err(Error::NonUniqueSolution(null.len()));
    }
    Ok(ThetaSection::combination(&basis, &null[0])?.normalized())
}

/// Jittered grid points in the `(1/m) Gamma` cell, avoiding `avoid`.
pub(crate) fn sample_points(lattice: &Lattice, m: usize, grid: usize, offset: f64, avoid: &[C64]) -> Vec<C64> {
    let cell = lattice.cell_size(m);
    let mut out = Vec::new();
    for a in 0..grid {
        for b in 0..grid {
            // deterministic irrational jitter keeps points off symmetric lines
            let ja = ((a * 7 + b * 3) as f64 * 0.618_033_988_75 + offset).fract() - 0.5;
            let jb = ((a * 5 + b * 11) as f64 * 0.414_213_562_37 + offset).fract() - 0.5;
            let z = lattice.from_coordinates(
                (a as f64 + 0.5 + 0.4 * ja) / grid as f64,
                (b as f64 + 0.5 + 0.4 * jb) / grid as f64,
                m,
            );
            if avoid
                .iter()
                .all(|&w| lattice.periodic_distance(z, w, m) >= AVOID_RADIUS * cell)
            {
                out.push(z);
            }
        }
    }
    out
}

/// Fit points and disjoint held-out points for a section size `m`.
pub(crate) fn fit_and_holdout(lattice: &Lattice, m: usize, avoid: &[C64]) -> (Vec<C64>, Vec<C64>) {
    (
        sample_points(lattice, m, FIT_GRID, 0.0, avoid),
        sample_points(lattice, m, HOLDOUT_GRID, 0.37, avoid),
    )
}

/// Least-squares fit of `g` in `MTheta_(n,m,c)` with `g(z) right(z) = target(z)`
/// at sample points (`right = None` means the identity). Each sample is
/// weighted by `1/|target(z)|`. Returns the fit and its largest relative
/// residual at held-out points.
pub fn fit_section(
    n: usize,
    m: usize,
    c: C64,
    lattice: &Lattice,
    target: &(dyn Fn(C64) -> ComplexMatrix + Sync),
    right: Option<&ThetaSection>,
    avoid: &[C64],
) -> Result<(ThetaSection, f64)> {
    let basis = mtheta_basis(n, m, c, lattice)?;
    let (fit_pts, hold_pts) = fit_and_holdout(lattice, m, avoid);
    let mm = m * m;
    let mut a = ComplexMatrix::zeros(fit_pts.len() * mm, basis.len());
    let mut rhs = vec![ZERO; fit_pts.len() * mm];
    for (p, &z) in fit_pts.iter().enumerate() {
        let t = target(z);
        let w = 1.0 / t.frobenius_norm().max(f64::MIN_POSITIVE);
        let r = right.map(|s| s.eval(z));
        for (k, b) in basis.iter().enumerate() {
            let bz = b.eval(z);
            let col = match &r {
                Some(r) => &bz * r,
                None => bz,
            };
            for (e, x) in col.entries().iter().enumerate() {
                a[(p * mm + e, k)] = x * w;
            }
        }
        for (e, x) in t.entries().iter().enumerate() {
            rhs[p * mm + e] = x * w;
        }
    }
    let x = Svd::new(&a)?.solve_least_squares(&rhs, 1e-14);
    let g = ThetaSection::combination(&basis, &x)?;
    let resid = hold_pts
        .iter()
        .map(|&z| {
            let t = target(z);
            let gz = g.eval(z);
            let lhs = match right {
                Some(r) => &gz * &r.eval(z),
                None => gz,
            };
            lhs.distance(&t) / t.frobenius_norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    Ok((g, resid))
}

/// Pointwise product `f_1(z) ... f_k(z)` as a section of
/// `MTheta_(sum n, m, sum c)`, residual-checked at held-out points.
pub fn multiply(fs: &[ThetaSection]) -> Result<ThetaSection> {
    let first = fs
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to multiply".into()))?;
    let (m, lattice) = (first.m(), *first.lattice());
    if fs.iter().any(|f| f.m() != m || *f.lattice() != lattice) {
        return Err(Error::InvalidInput("factors live over different (m, tau)".into()));
    }
    let n: usize = fs.iter().map(ThetaSection::n).sum();
    let c: C64 = fs.iter().map(ThetaSection::c).sum();
    let target = |z: C64| product_at(fs, z);
    let (g, resid) = fit_section(n, m, c, &lattice, &target, None, &[])?;
    if resid > THETA_FACT_TOL {
        return Err(Error::QuotientResidual {
            residual: resid,
            tol: THETA_FACT_TOL,
        });
    }
    Ok(g.normalized())
}

/// `f_1(z) ... f_k(z)` as a matrix.
pub fn product_at(fs: &[ThetaSection], z: C64) -> ComplexMatrix {
    let mut acc = fs[0].eval(z);
    for f in &fs[1..] {
        acc = &acc * &f.eval(z);
    }
    acc
}

/// Largest relative residual `|a(z) - s b(z)| / |a(z)|` over `points`, with
/// the single scalar `s` fitted by weighted least squares.
pub fn rescaled_residual(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> f64 {
    let mut num = ZERO;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        let w = 1.0 / x.frobenius_norm().powi(2).max(f64::MIN_POSITIVE);
        num += y
            .entries()
            .iter()
            .zip(x.entries())
            .map(|(p, q)| p.conj() * q)
            .sum::<C64>()
            * w;
        den += y.frobenius_norm().powi(2) * w;
    }
    if den == 0.0 {
        return f64::INFINITY;
    }
    let s = num / den;
    a.iter()
        .zip(b)
        .map(|(x, y)| x.distance(&y.scale(s)) / x.frobenius_norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Held-out comparison of two matrix-valued functions of the same size `m`,
/// up to one global scalar.
pub fn sampled_product_residual(lattice: &Lattice, m: usize, a: &[ThetaSection], b: &[ThetaSection]) -> f64 {
    let (_, pts) = fit_and_holdout(lattice, m, &[]);
    let va: Vec<ComplexMatrix> = pts.iter().map(|&z| product_at(a, z)).collect();
    let vb: Vec<ComplexMatrix> = pts.iter().map(|&z| product_at(b, z)).collect();
    rescaled_residual(&va, &vb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::zeros::{det_and_derivative, det_zeros};
    use crate::tol::ZERO_TOL;

    fn lattice() -> Lattice {
        Lattice::new(C64::new(0.0, 1.0)).unwrap()
    }

    fn points_and_vectors() -> (Vec<C64>, Vec<Vec<C64>>) {
        let l = lattice();
        let lambdas = vec![l.from_coordinates(0.21, 0.33, 2), l.from_coordinates(0.64, 0.71, 2)];
        let vs = vec![
            vec![C64::new(1.0, 0.2), C64::new(-0.4, 0.9)],
            vec![C64::new(0.3, -0.5), C64::new(1.0, 0.0)],
        ];
        (lambdas, vs)
    }

    #[test]
    fn interpolation_kills_prescribed_vectors() {
        let l = lattice();
        let (lambdas, vs) = points_and_vectors();
        let f = interpolate(&lambdas, &vs, 1, 2, &l).unwrap();
        for (lambda, v) in lambdas.iter().zip(&vs) {
            let fv = f.eval(*lambda).mul_vec(v);
            assert!(vec_norm(&fv) < 1e-10, "{:e}", vec_norm(&fv));
            let (d, dd) = det_and_derivative(&f, *lambda);
            assert!((d / dd).norm() < ZERO_TOL);
        }
        // round trip: the zeros of det f are the prescribed points
        let zs = det_zeros(&f).unwrap();
        for lambda in &lambdas {
            assert!(zs.points.iter().any(|&z| l.periodic_distance(z, *lambda, 2) < ZERO_TOL));
        }
    }

    #[test]
    fn interpolation_is_homogeneous_in_the_vectors() {
        let l = lattice();
        let (lambdas, vs) = points_and_vectors();
        let f = interpolate(&lambdas, &vs, 1, 2, &l).unwrap();
        let scaled: Vec<Vec<C64>> = vs
            .iter()
            .zip([C64::new(2.0, 1.0), C64::new(0.0, -3.0)])
            .map(|(v, s)| v.iter().map(|x| x * s).collect())
            .collect();
        let g = interpolate(&lambdas, &scaled, 1, 2, &l).unwrap();
        assert!(f.ray_distance(&g) < 1e-10);
    }

    #[test]
    fn wrong_c_has_no_solution() {
        let l = lattice();
        let (lambdas, vs) = points_and_vectors();
        let c = lambdas.iter().sum::<C64>() - 0.5 + 0.1;
        let err = interpolate_with_c(&lambdas, &vs, 1, 2, c, &l).unwrap_err();
        assert_eq!(err, Error::NonUniqueSolution(0));
    }

    #[test]
    fn product_fit_reproduces_pointwise_product() {
        let l = lattice();
        let (lambdas, vs) = points_and_vectors();
        let f = interpolate(&lambdas, &vs, 1, 2, &l).unwrap();
        let g = mtheta_basis(1, 2, C64::new(0.3, 0.1), &l).unwrap()[1].clone();
        let h = multiply(&[f.clone(), g.clone()]).unwrap();
        assert_eq!(h.n(), 2);
        assert!(h.constraint_residual() < 1e-9);
        assert!(sampled_product_residual(&l, 2, &[h], &[f, g]) < 1e-9);
    }
}
