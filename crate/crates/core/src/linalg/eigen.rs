//! Eigenvalues of dense complex matrices.
//!
//! Householder reduction to upper Hessenberg form followed by the single-shift
//! complex QR iteration with Wilkinson shifts. Eigenvectors come from inverse
//! iteration on `M - lambda I`, which is adequate for the simple spectra this
//! crate works with.

use serde::{Deserialize, Serialize};

use super::lu::Lu;
use super::matrix::{complex_pair, normalize, vec_norm, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::tol::{EIG_TOL, SEP_MIN};

const MAX_QR_ITERS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    #[serde(with = "complex_pair")]
    pub value: C64,
    #[serde(with = "complex_pair::vec")]
    pub vector: Vec<C64>,
}

/// Canonical order: ascending real part, then imaginary part.
pub fn canonical_cmp(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Ordered list of pairwise-separated complex values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedSpectrum {
    #[serde(with = "complex_pair::vec")]
    values: Vec<C64>,
    separation: f64,
}

impl OrderedSpectrum {
    /// Keeps the given order; rejects near-collisions.
    pub fn new(values: Vec<C64>) -> Result<Self> {
        let separation = min_separation(&values);
        let scale = spectral_scale(&values);
        if let Some((a, b)) = closest_pair(&values) {
            if separation < SEP_MIN * scale {
                return Err(Error::DegenerateSpectrum {
                    first: fmt_c(values[a]),
                    second: fmt_c(values[b]),
                    sep_min: SEP_MIN * scale,
                });
            }
        }
        Ok(Self { values, separation })
    }

    /// Sorts into canonical order, then validates.
    pub fn canonical(mut values: Vec<C64>) -> Result<Self> {
        values.sort_by(canonical_cmp);
        Self::new(values)
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn fmt_c(z: C64) -> String {
    format!("{:.6e}{:+.6e}i", z.re, z.im)
}

fn spectral_scale(values: &[C64]) -> f64 {
    values.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

fn closest_pair(values: &[C64]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let d = (values[i] - values[j]).norm();
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((i, j, d));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

pub fn min_separation(values: &[C64]) -> f64 {
    closest_pair(values).map_or(f64::INFINITY, |(i, j)| (values[i] - values[j]).norm())
}

/// All eigenvalues, in no particular order, without any separation check.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut h = hessenberg(m);
    hessenberg_qr(&mut h)
}

/// Eigenpairs in canonical order. The spectrum must be simple at `SEP_MIN`.
pub fn eigen_decompose(m: &ComplexMatrix) -> Result<Vec<EigenPair>> {
    let values = eigenvalues(m)?;
    let spectrum = OrderedSpectrum::canonical(values)?;
    let norm = m.frobenius_norm();
    spectrum
        .values()
        .iter()
        .map(|&lambda| {
            let vector = inverse_iteration(m, lambda)?;
            let resid = vec_norm(&residual(m, lambda, &vector));
            if resid > EIG_TOL * norm.max(f64::MIN_POSITIVE) {
                return Err(Error::NoConvergence(format!(
                    "eigenvector residual {resid:e} for eigenvalue {}",
                    fmt_c(lambda)
                )));
            }
            Ok(EigenPair { value: lambda, vector })
        })
        .collect()
}

fn residual(m: &ComplexMatrix, lambda: C64, v: &[C64]) -> Vec<C64> {
    m.mul_vec(v).iter().zip(v).map(|(mv, x)| mv - lambda * x).collect()
}

fn inverse_iteration(m: &ComplexMatrix, lambda: C64) -> Result<Vec<C64>> {
    let n = m.rows();
    let scale = m.frobenius_norm().max(1.0);
    // shifting off the exact eigenvalue keeps the LU factors finite
    let shifted = m.sub_identity_scaled(lambda + C64::new(1e-13, 7e-14) * scale);
    let lu = Lu::new(&shifted)?;
    let mut x: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + 0.1 * i as f64, 0.3 - 0.05 * i as f64))
        .collect();
    normalize(&mut x);
    for _ in 0..3 {
        x = lu.solve_vec(&x);
        if normalize(&mut x) == 0.0 || x.iter().any(|z| !z.is_finite()) {
            return Err(Error::NoConvergence("inverse iteration broke down".into()));
        }
    }
    // fix the phase so the largest component is real and positive
    let (imax, _) = x
        .iter()
        .enumerate()
        .fold((0, -1.0), |b, (i, z)| if z.norm() > b.1 { (i, z.norm()) } else { b });
    let phase = x[imax].conj() / x[imax].norm();
    Ok(x.into_iter().map(|z| z * phase).collect())
}

/// Householder reduction to upper Hessenberg form (similarity transform).
fn hessenberg(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let mut h = m.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let alpha = vec_norm(&x);
        if alpha == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let mut v = x;
        v[0] += phase * alpha;
        if normalize(&mut v) == 0.0 {
            continue;
        }
        // H <- (I - 2 v v*) H (I - 2 v v*)
        for j in 0..n {
            let s: C64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= 2.0 * v[i] * s;
            }
        }
        for i in 0..n {
            let s: C64 = (0..v.len()).map(|j| h[(i, k + 1 + j)] * v[j]).sum();
            for j in 0..v.len() {
                h[(i, k + 1 + j)] -= 2.0 * s * v[j].conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    h
}

fn givens(a: C64, b: C64) -> (f64, C64) {
    // returns (c, s) with [c s; -conj(s) c] [a; b] = [r; 0]
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, (b / nb).conj());
    }
    let r = (na * na + nb * nb).sqrt();
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (c, s)
}

fn hessenberg_qr(h: &mut ComplexMatrix) -> Result<Vec<C64>> {
    let n = h.rows();
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let mut hi = n - 1;
    let mut iter = 0;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // locate the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { h.frobenius_norm() } else { s };
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_QR_ITERS {
            return Err(Error::NoConvergence(format!("QR iteration stalled at index {hi}")));
        }
        let shift = if iter % 11 == 0 {
            // exceptional shift
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm(), 0.0) * 0.75
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        qr_step(h, lo, hi, shift);
    }
    Ok(eig)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_step(h: &mut ComplexMatrix, lo: usize, hi: usize, shift: C64) {
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        rots.push((c, s));
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        let top = (k + 2).min(hi);
        for i in lo..=top {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s.conj();
            h[(i, k + 1)] = -x * s + y * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(canonical_cmp);
        v
    }

    #[test]
    fn identity_is_degenerate() {
        let err = eigen_decompose(&ComplexMatrix::identity(2)).unwrap_err();
        assert_eq!(err.name(), "DegenerateSpectrum");
    }

    #[test]
    fn diagonal_pairs() {
        let m = ComplexMatrix::diag(&[ONE, C64::new(0.0, 2.0)]);
        let pairs = eigen_decompose(&m).unwrap();
        // canonical order puts 2i (real part 0) first
        assert!((pairs[0].value - C64::new(0.0, 2.0)).norm() < 1e-14);
        assert!((pairs[1].value - ONE).norm() < 1e-14);
        assert!((pairs[0].vector[1] - ONE).norm() < 1e-12);
        assert!((pairs[1].vector[0] - ONE).norm() < 1e-12);
    }

    #[test]
    fn companion_of_quadratic() {
        // t^2 - 5t + 6 = (t - 2)(t - 3)
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-6.0, 5.0]]);
        let pairs = eigen_decompose(&m).unwrap();
        assert!((pairs[0].value - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((pairs[1].value - C64::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotation_has_conjugate_pair() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let vals = sorted(eigenvalues(&m).unwrap());
        assert!((vals[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((vals[1] - C64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn upper_triangular_with_known_diagonal() {
        let m = ComplexMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                C64::new(i as f64, -(i as f64) * 0.5)
            } else if j > i {
                C64::new(0.3 * (i + j) as f64, 0.1)
            } else {
                ZERO
            }
        });
        let pairs = eigen_decompose(&m).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            assert!((p.value - C64::new(k as f64, -(k as f64) * 0.5)).norm() < 1e-10);
        }
    }
}
