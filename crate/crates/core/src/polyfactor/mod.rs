//! Factorizations of monic matrix polynomials.
//!
//! A generic monic polynomial of degree `d` with `m x m` coefficients has `md`
//! simple spectral roots, and every split of those roots into `d` blocks of
//! size `m` determines a unique ordered factorization
//! `(t - b1) ... (t - bd)` with `S(b_i)` equal to the i-th block. The rightmost
//! factor is recovered from kernel vectors of `P(lambda)`; dividing it off and
//! recursing yields the rest.

mod polynomial;

pub use polynomial::MatrixPolynomial;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eigen::{canonical_cmp, eigenvalues, fmt_c, min_separation, OrderedSpectrum};
use crate::linalg::lu::Lu;
use crate::linalg::matrix::{complex_pair, ComplexMatrix, C64};
use crate::linalg::svd::Svd;
use crate::linalg::{poly_eigenvalues, solve_sylvester, sylvester};
use crate::tol::{EIG_TOL, FACT_TOL, SEP_MIN};
use crate::transpositions::{BraidWord, CarrierKind, TwistedMap};

/// Ordered factors `b1, ..., bd` together with their ordered spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorizationRepr", into = "FactorizationRepr")]
pub struct Factorization {
    m: usize,
    factors: Vec<ComplexMatrix>,
    spectra: Vec<OrderedSpectrum>,
}

#[derive(Serialize, Deserialize)]
struct FactorizationRepr {
    m: usize,
    d: usize,
    factors: Vec<ComplexMatrix>,
    #[serde(with = "complex_pair::vec_vec")]
    spectra: Vec<Vec<C64>>,
}

impl TryFrom<FactorizationRepr> for Factorization {
    type Error = Error;
    fn try_from(r: FactorizationRepr) -> Result<Self> {
        if r.factors.len() != r.d || r.spectra.len() != r.d {
            return Err(Error::InvalidInput(format!(
                "declared d={} but {} factors and {} spectra",
                r.d,
                r.factors.len(),
                r.spectra.len()
            )));
        }
        if r.factors.iter().any(|b| b.rows() != r.m || b.cols() != r.m) {
            return Err(Error::InvalidInput(format!("factors must be {0}x{0}", r.m)));
        }
        Factorization::with_spectra(r.factors, r.spectra)
    }
}

impl From<Factorization> for FactorizationRepr {
    fn from(f: Factorization) -> Self {
        FactorizationRepr {
            m: f.m,
            d: f.factors.len(),
            factors: f.factors,
            spectra: f.spectra.into_iter().map(OrderedSpectrum::into_values).collect(),
        }
    }
}

impl Factorization {
    /// Computes each factor's spectrum in canonical order.
    pub fn new(factors: Vec<ComplexMatrix>) -> Result<Self> {
        let spectra = factors
            .iter()
            .map(|b| OrderedSpectrum::canonical(eigenvalues(b)?))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(factors, spectra)
    }

    /// Uses the given eigenvalue order for each factor after checking that it
    /// matches the computed spectrum.
    pub fn with_spectra(factors: Vec<ComplexMatrix>, spectra: Vec<Vec<C64>>) -> Result<Self> {
        if factors.len() != spectra.len() {
            return Err(Error::InvalidInput("one spectrum per factor required".into()));
        }
        let mut ordered = Vec::with_capacity(spectra.len());
        for (b, labels) in factors.iter().zip(spectra) {
            let computed = eigenvalues(b)?;
            let matched = match_values(&labels, &computed, label_tol(b))
                .map_err(|e| Error::InvalidInput(format!("spectrum labels: {e}")))?;
            ordered.push(OrderedSpectrum::new(matched)?);
        }
        Self::from_parts(factors, ordered)
    }

    fn from_parts(factors: Vec<ComplexMatrix>, spectra: Vec<OrderedSpectrum>) -> Result<Self> {
        let m = factors
            .first()
            .ok_or_else(|| Error::InvalidInput("factorization needs at least one factor".into()))?
            .rows();
        if factors.iter().any(|b| b.rows() != m || b.cols() != m) {
            return Err(Error::InvalidInput("factors must share one square size".into()));
        }
        let all: Vec<C64> = spectra.iter().flat_map(|s| s.values().iter().copied()).collect();
        OrderedSpectrum::new(all)?;
        Ok(Self { m, factors, spectra })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[ComplexMatrix] {
        &self.factors
    }

    pub fn spectra(&self) -> &[OrderedSpectrum] {
        &self.spectra
    }

    /// Concatenated ordered spectrum over all `md` strands.
    pub fn strand_labels(&self) -> Vec<C64> {
        self.spectra.iter().flat_map(|s| s.values().iter().copied()).collect()
    }

    /// Largest factor distance (Frobenius).
    pub fn distance(&self, other: &Self) -> f64 {
        self.factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

fn label_tol(b: &ComplexMatrix) -> f64 {
    1e-6 * (1.0 + b.frobenius_norm())
}

/// Replaces each requested value by its nearest computed value, rejecting
/// misses and collisions.
fn match_values(requested: &[C64], computed: &[C64], tol: f64) -> Result<Vec<C64>> {
    if requested.len() != computed.len() {
        return Err(Error::PartitionMismatch(format!(
            "{} values requested, {} available",
            requested.len(),
            computed.len()
        )));
    }
    let mut taken = vec![false; computed.len()];
    let mut out = Vec::with_capacity(requested.len());
    for &want in requested {
        let (idx, dist) = computed
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (z - want).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if dist > tol {
            return Err(Error::PartitionMismatch(format!(
                "{} is not among the roots (nearest at distance {dist:e})",
                fmt_c(want)
            )));
        }
        if std::mem::replace(&mut taken[idx], true) {
            return Err(Error::PartitionMismatch(format!(
                "two requested values match the root {}",
                fmt_c(computed[idx])
            )));
        }
        out.push(computed[idx]);
    }
    Ok(out)
}

/// Disjoint blocks `A1, ..., Ad` of equal size covering a root set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPartition {
    #[serde(with = "complex_pair::vec_vec")]
    blocks: Vec<Vec<C64>>,
}

impl SpectrumPartition {
    pub fn new(blocks: Vec<Vec<C64>>) -> Result<Self> {
        let size = blocks
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidInput("partition needs at least one block".into()))?;
        if size == 0 || blocks.iter().any(|b| b.len() != size) {
            return Err(Error::InvalidInput(
                "partition blocks must be non-empty and of equal size".into(),
            ));
        }
        let all: Vec<C64> = blocks.iter().flatten().copied().collect();
        let scale = all.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if min_separation(&all) < SEP_MIN * scale {
            return Err(Error::PartitionMismatch("partition blocks overlap".into()));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<C64>] {
        &self.blocks
    }

    pub fn block_size(&self) -> usize {
        self.blocks[0].len()
    }
}

/// Coefficients of the ordered product `(t - b1) ... (t - bd)`.
pub fn expand_factors(factors: &[ComplexMatrix]) -> Result<MatrixPolynomial> {
    let m = factors
        .first()
        .ok_or_else(|| Error::InvalidInput("no factors to expand".into()))?
        .rows();
    // standard coefficients, lowest degree first, leading identity included
    let mut poly = vec![ComplexMatrix::identity(m)];
    for b in factors {
        let d = poly.len();
        let mut next = vec![ComplexMatrix::zeros(m, m); d + 1];
        for (k, p) in poly.iter().enumerate() {
            next[k + 1] = &next[k + 1] + p;
            next[k] = &next[k] - &(p * b);
        }
        poly = next;
    }
    poly.pop();
    MatrixPolynomial::from_standard(m, &poly)
}

/// Right division `P(t) = Q(t) (t - b) + R` by the right Horner recurrence.
pub fn right_divide(p: &MatrixPolynomial, b: &ComplexMatrix) -> Result<(MatrixPolynomial, ComplexMatrix)> {
    let d = p.degree();
    if d == 0 {
        return Err(Error::InvalidInput("cannot divide a degree-0 polynomial".into()));
    }
    let m = p.m();
    let std = p.standard();
    // q_(d-1) = I, q_(k-1) = p_k + q_k b
    let mut q = vec![ComplexMatrix::zeros(m, m); d];
    q[d - 1] = ComplexMatrix::identity(m);
    for k in (1..d).rev() {
        q[k - 1] = &std[k] + &(&q[k] * b);
    }
    let rem = &std[0] + &(&q[0] * b);
    q.pop();
    Ok((MatrixPolynomial::from_standard(m, &q)?, rem))
}

/// The unique factorization `P = (t - b1) ... (t - bd)` with `S(b_i) = A_i`.
pub fn refactor(p: &MatrixPolynomial, partition: &SpectrumPartition) -> Result<Factorization> {
    let (m, d) = (p.m(), p.degree());
    if d == 0 {
        return Err(Error::InvalidInput("degree-0 polynomial has no factors".into()));
    }
    if partition.blocks().len() != d || partition.block_size() != m {
        return Err(Error::PartitionMismatch(format!(
            "need {d} blocks of size {m}, got {} blocks of size {}",
            partition.blocks().len(),
            partition.block_size()
        )));
    }
    let roots = poly_eigenvalues(p)?;
    let requested: Vec<C64> = partition.blocks().iter().flatten().copied().collect();
    let tol = SEP_MIN * roots.values().iter().map(|z| z.norm()).fold(1.0, f64::max);
    let matched = match_values(&requested, roots.values(), tol)?;
    let blocks: Vec<Vec<C64>> = matched.chunks(m).map(<[C64]>::to_vec).collect();

    let scale = p.max_coeff_norm().max(1.0);
    let mut current = p.clone();
    let mut factors = vec![ComplexMatrix::zeros(m, m); d];
    for alpha in (0..d).rev() {
        let b = if alpha == 0 {
            current.coeffs()[0].clone()
        } else {
            right_factor(&current, &blocks[alpha])?
        };
        if alpha > 0 {
            let (q, rem) = right_divide(&current, &b)?;
            if rem.frobenius_norm() > FACT_TOL * scale {
                return Err(Error::DegenerateInstance(format!(
                    "division remainder {:e} for factor {}",
                    rem.frobenius_norm(),
                    alpha + 1
                )));
            }
            current = q;
        }
        factors[alpha] = b;
    }

    let expanded = expand_factors(&factors)?;
    let resid = expanded.distance(p);
    if resid > FACT_TOL * scale {
        return Err(Error::DegenerateInstance(format!("factor product residual {resid:e}")));
    }
    let spectra = blocks
        .into_iter()
        .map(OrderedSpectrum::new)
        .collect::<Result<Vec<_>>>()?;
    for (b, s) in factors.iter().zip(&spectra) {
        let computed = eigenvalues(b)?;
        match_values(s.values(), &computed, label_tol(b))
            .map_err(|_| Error::DegenerateInstance("factor spectrum drifted from its block".into()))?;
    }
    Factorization::from_parts(factors, spectra)
}

/// Builds `b` with eigenpairs `(lambda, v_lambda)`, `P(lambda) v_lambda = 0`.
fn right_factor(p: &MatrixPolynomial, block: &[C64]) -> Result<ComplexMatrix> {
    let m = p.m();
    let mut vectors = Vec::with_capacity(m);
    for &lambda in block {
        let svd = Svd::new(&p.evaluate(lambda))?;
        let n = svd.values.len();
        let smax = svd.max_value().max(f64::MIN_POSITIVE);
        if n >= 2 && svd.values[n - 2] < 10.0 * EIG_TOL * smax {
            return Err(Error::DegenerateInstance(format!(
                "kernel of P({}) is not one-dimensional",
                fmt_c(lambda)
            )));
        }
        vectors.push(svd.v[n - 1].clone());
    }
    let v = ComplexMatrix::from_columns(&vectors);
    let lu = Lu::new(&v)?;
    if lu.is_singular(1e-10) {
        return Err(Error::DegenerateInstance("eigenvector matrix is singular".into()));
    }
    let vd = &v * &ComplexMatrix::diag(block);
    // b = V diag(lambda) V^-1, i.e. solve b V = V diag(lambda) from the right
    let b_t = Lu::new(&v.transpose())?.solve(&vd.transpose());
    Ok(b_t.transpose())
}

/// `(t - a1)(t - a2) = (t - b1)(t - b2)` with `S(b1) = S(a2)`, `S(b2) = S(a1)`:
/// `b1 = a1 + L^-1`, `b2 = a2 - L^-1` where `a2 L - L a1 = 1`.
pub fn sylvester_swap(a1: &ComplexMatrix, a2: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    sylvester::check_spectral_gap(a1, a2)?;
    let lambda = solve_sylvester(a1, a2)?;
    let lu = Lu::new(&lambda)?;
    if lu.is_singular(1e-10) {
        return Err(Error::SingularLambda);
    }
    let inv = lu.inverse();
    Ok((a1 + &inv, a2 - &inv))
}

/// The twisted transposition `mu(a1, a2) = (b1, b2)` on `Mat_m`.
pub fn mu_matrix(m: usize) -> TwistedMap<ComplexMatrix> {
    TwistedMap::new(
        "matrix-swap",
        CarrierKind::SquareMatrix(m),
        move |a1: &ComplexMatrix, a2: &ComplexMatrix| {
            if a1.rows() != m || a2.rows() != m {
                return Err(Error::InvalidInput(format!("matrix-swap expects {m}x{m} matrices")));
            }
            sylvester_swap(a1, a2).map_err(|e| match e {
                Error::SpectraOverlap(_) | Error::SingularLambda => Error::OutsideDomain(format!("{}: {e}", e.name())),
                other => other,
            })
        },
    )
}

/// Local action of `S_(mN)` on ordered factorizations.
///
/// Strand positions `(a-1)m+1 ..= am` belong to factor `a`. A letter strictly
/// inside a factor only reorders that factor's spectrum labels; the letter
/// `am` refactors factors `a` and `a+1` after exchanging the last label of
/// the first with the first label of the second.
pub fn local_action(word: &BraidWord, f: &Factorization) -> Result<Factorization> {
    let m = f.m();
    if word.n_strands() != m * f.d() {
        return Err(Error::InvalidInput(format!(
            "word acts on {} strands, factorization has {}",
            word.n_strands(),
            m * f.d()
        )));
    }
    let mut factors = f.factors.clone();
    let mut labels: Vec<Vec<C64>> = f.spectra.iter().map(|s| s.values().to_vec()).collect();
    for &i in word.letters() {
        if i % m != 0 {
            let alpha = i / m;
            let p = i % m - 1;
            labels[alpha].swap(p, p + 1);
            continue;
        }
        let alpha = i / m - 1;
        let mut left = labels[alpha].clone();
        let mut right = labels[alpha + 1].clone();
        std::mem::swap(&mut left[m - 1], &mut right[0]);
        let pair = expand_factors(&factors[alpha..alpha + 2])?;
        let partition = SpectrumPartition::new(vec![left, right])?;
        let refactored = refactor(&pair, &partition)?;
        factors[alpha] = refactored.factors[0].clone();
        factors[alpha + 1] = refactored.factors[1].clone();
        labels[alpha] = refactored.spectra[0].values().to_vec();
        labels[alpha + 1] = refactored.spectra[1].values().to_vec();
    }
    let spectra = labels
        .into_iter()
        .map(OrderedSpectrum::new)
        .collect::<Result<Vec<_>>>()?;
    Factorization::from_parts(factors, spectra)
}

/// Word exchanging the two `m`-blocks of a `2m`-strand sequence,
/// `(1, m+1)(2, m+2) ... (m, 2m)`, written in adjacent transpositions.
pub fn block_swap_word(m: usize) -> BraidWord {
    let target: Vec<usize> = (m..2 * m).chain(0..m).collect();
    BraidWord::from_arrangement(&target).expect("valid arrangement")
}

/// Canonically ordered roots of `det P`, as plain values.
pub fn sorted_roots(p: &MatrixPolynomial) -> Result<Vec<C64>> {
    let mut v = poly_eigenvalues(p)?.into_values();
    v.sort_by(canonical_cmp);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::ONE;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn scalar(x: f64) -> ComplexMatrix {
        ComplexMatrix::scalar(c(x))
    }

    fn generic(m: usize, seed: f64) -> ComplexMatrix {
        ComplexMatrix::from_fn(m, m, |i, j| {
            let x = seed + 1.7 * i as f64 + 0.9 * j as f64;
            C64::new(x.sin(), (1.3 * x).cos() * 0.7)
        })
    }

    #[test]
    fn expand_zero_factors() {
        let p = expand_factors(&[ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(2, 2)]).unwrap();
        assert!(p.coeffs().iter().all(|a| a.max_abs() == 0.0));
    }

    #[test]
    fn expand_scalar_pair() {
        let p = expand_factors(&[scalar(2.0), scalar(3.0)]).unwrap();
        assert!((p.coeffs()[0][(0, 0)] - c(5.0)).norm() < 1e-15);
        assert!((p.coeffs()[1][(0, 0)] - c(6.0)).norm() < 1e-15);
    }

    #[test]
    fn expand_respects_order() {
        let b1 = generic(2, 0.1);
        let b2 = generic(2, 2.3);
        let p12 = expand_factors(&[b1.clone(), b2.clone()]).unwrap();
        let p21 = expand_factors(&[b2.clone(), b1.clone()]).unwrap();
        assert!(p12.coeffs()[0].distance(&(&b1 + &b2)) < 1e-14);
        assert!(p12.coeffs()[1].distance(&(&b1 * &b2)) < 1e-14);
        assert!(p12.coeffs()[1].distance(&p21.coeffs()[1]) > 1e-3);
    }

    #[test]
    fn right_divide_examples() {
        let b = generic(2, 0.4);
        let p = expand_factors(std::slice::from_ref(&b)).unwrap();
        let (q, r) = right_divide(&p, &b).unwrap();
        assert_eq!(q.degree(), 0);
        assert!(r.max_abs() < 1e-15);

        // t^2 = (t + 1)(t - 1) + 1
        let p = MatrixPolynomial::new(vec![scalar(0.0), scalar(0.0)]).unwrap();
        let (q, r) = right_divide(&p, &scalar(1.0)).unwrap();
        assert_eq!(q.degree(), 1);
        // Q = t + 1 means a1 = -1
        assert!((q.coeffs()[0][(0, 0)] + ONE).norm() < 1e-15);
        assert!((r[(0, 0)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn refactor_scalar_quadratic() {
        let p = MatrixPolynomial::new(vec![scalar(5.0), scalar(6.0)]).unwrap();
        let part = SpectrumPartition::new(vec![vec![c(3.0)], vec![c(2.0)]]).unwrap();
        let f = refactor(&p, &part).unwrap();
        assert!((f.factors()[0][(0, 0)] - c(3.0)).norm() < 1e-12);
        assert!((f.factors()[1][(0, 0)] - c(2.0)).norm() < 1e-12);
    }

    #[test]
    fn refactor_degree_one_echoes() {
        let a = generic(3, 0.7);
        let p = MatrixPolynomial::new(vec![a.clone()]).unwrap();
        let roots = poly_eigenvalues(&p).unwrap().into_values();
        let f = refactor(&p, &SpectrumPartition::new(vec![roots]).unwrap()).unwrap();
        assert_eq!(f.factors()[0], a);
    }

    #[test]
    fn refactor_rejects_foreign_value() {
        let p = MatrixPolynomial::new(vec![scalar(5.0), scalar(6.0)]).unwrap();
        let part = SpectrumPartition::new(vec![vec![c(3.0)], vec![c(2.5)]]).unwrap();
        assert_eq!(refactor(&p, &part).unwrap_err().name(), "PartitionMismatch");
    }

    #[test]
    fn expand_then_refactor_round_trip() {
        let f = Factorization::new(vec![generic(2, 0.3), generic(2, 1.9), generic(2, 4.1)]).unwrap();
        let p = expand_factors(f.factors()).unwrap();
        let part = SpectrumPartition::new(f.spectra().iter().map(|s| s.values().to_vec()).collect()).unwrap();
        let g = refactor(&p, &part).unwrap();
        assert!(g.distance(&f) < 1e-9, "distance {}", g.distance(&f));
    }

    #[test]
    fn sylvester_swap_examples() {
        let (b1, b2) = sylvester_swap(&scalar(3.0), &scalar(7.0)).unwrap();
        assert!((b1[(0, 0)] - c(7.0)).norm() < 1e-14 && (b2[(0, 0)] - c(3.0)).norm() < 1e-14);

        let a1 = ComplexMatrix::diag(&[c(1.0), c(2.0)]);
        let a2 = ComplexMatrix::diag(&[c(3.0), c(4.0)]);
        let (b1, b2) = sylvester_swap(&a1, &a2).unwrap();
        assert!(b1.distance(&a2) < 1e-14 && b2.distance(&a1) < 1e-14);
    }

    #[test]
    fn sylvester_swap_agrees_with_refactor() {
        let a1 = generic(2, 0.2);
        let a2 = generic(2, 3.3);
        let (b1, b2) = sylvester_swap(&a1, &a2).unwrap();
        let p = expand_factors(&[a1.clone(), a2.clone()]).unwrap();
        let s1 = eigenvalues(&a1).unwrap();
        let s2 = eigenvalues(&a2).unwrap();
        let f = refactor(&p, &SpectrumPartition::new(vec![s2, s1]).unwrap()).unwrap();
        assert!(f.factors()[0].distance(&b1) < 1e-9);
        assert!(f.factors()[1].distance(&b2) < 1e-9);
    }

    #[test]
    fn local_action_interior_and_boundary() {
        let f = Factorization::new(vec![generic(2, 0.3), generic(2, 1.9)]).unwrap();
        let g = local_action(&BraidWord::new(4, vec![1]).unwrap(), &f).unwrap();
        assert_eq!(g.factors(), f.factors());
        assert_eq!(g.spectra()[0].values()[0], f.spectra()[0].values()[1]);

        let twice = local_action(&BraidWord::new(4, vec![2, 2]).unwrap(), &f).unwrap();
        assert!(twice.distance(&f) < 1e-9);

        let swapped = local_action(&block_swap_word(2), &f).unwrap();
        let (b1, b2) = sylvester_swap(&f.factors()[0], &f.factors()[1]).unwrap();
        assert!(swapped.factors()[0].distance(&b1) < 1e-8);
        assert!(swapped.factors()[1].distance(&b2) < 1e-8);
    }

    #[test]
    fn factorization_json_round_trip() {
        let f = Factorization::new(vec![generic(2, 0.3), generic(2, 1.9)]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        let back: Factorization = serde_json::from_str(&s).unwrap();
        assert!(back.distance(&f) == 0.0);
        assert!(s.contains("\"spectra\""));
    }
}
