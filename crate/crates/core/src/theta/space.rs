//! The matrix theta space `MTheta_(n,m,c)`: holomorphic `f: C -> Mat_m` with
//! `f(z + 1/m) = g1^-1 f(z) g1` and
//! `f(z + tau/m) = e^(-2 pi i (m n z - c)) g2^-1 f(z) g2`.
//!
//! Entries of such `f` lie in the scalar space of degree `N = m^2 n` with
//! parameter `c1 = m c - m n (m - 1) tau / 2`, so `f = sum_alpha phi_alpha theta_alpha`
//! and the two conditions become linear constraints on the `phi_alpha`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use super::lattice::{root_of_unity, HeisenbergPair, Lattice};
use super::scalar::{theta_basis_all, theta_basis_all_with_derivative};
use crate::error::{Error, Result};
use crate::linalg::matrix::{complex_pair, ComplexMatrix, C64, ONE, ZERO};
use crate::linalg::svd::Svd;
use crate::tol::CONSTRAINT_TOL;

const I: C64 = C64::new(0.0, 1.0);

/// An element of `MTheta_(n,m,c)` stored by its coefficient matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SectionRepr", into = "SectionRepr")]
pub struct ThetaSection {
    n: usize,
    m: usize,
    c: C64,
    lattice: Lattice,
    coeffs: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct SectionRepr {
    n: usize,
    m: usize,
    #[serde(with = "complex_pair")]
    c: C64,
    #[serde(with = "complex_pair")]
    tau: C64,
    coeffs: Vec<ComplexMatrix>,
}

impl TryFrom<SectionRepr> for ThetaSection {
    type Error = Error;
    fn try_from(r: SectionRepr) -> Result<Self> {
        let s = ThetaSection::new(r.n, r.m, r.c, Lattice::new(r.tau)?, r.coeffs)?;
        let resid = s.constraint_residual();
        if resid > 10.0 * CONSTRAINT_TOL {
            return Err(Error::InvalidInput(format!(
                "coefficients violate the quasi-periodicity constraints (residual {resid:e})"
            )));
        }
        Ok(s)
    }
}

impl From<ThetaSection> for SectionRepr {
    fn from(s: ThetaSection) -> Self {
        SectionRepr {
            n: s.n,
            m: s.m,
            c: s.c,
            tau: s.lattice.tau(),
            coeffs: s.coeffs,
        }
    }
}

impl ThetaSection {
    /// Wraps coefficient matrices; shapes are checked, constraints are not
    /// (see [`ThetaSection::constraint_residual`]).
    pub fn new(n: usize, m: usize, c: C64, lattice: Lattice, coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput("theta sections need n, m >= 1".into()));
        }
        if !c.is_finite() {
            return Err(Error::InvalidInput("c must be finite".into()));
        }
        let big_n = m * m * n;
        if coeffs.len() != big_n {
            return Err(Error::DimensionMismatch {
                expected: big_n,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|p| p.rows() != m || p.cols() != m || !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coefficients must be finite {m}x{m} matrices"
            )));
        }
        Ok(Self {
            n,
            m,
            c,
            lattice,
            coeffs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn c(&self) -> C64 {
        self.c
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[ComplexMatrix] {
        &self.coeffs
    }

    /// Degree `m^2 n` of the scalar basis.
    pub fn scalar_degree(&self) -> usize {
        self.m * self.m * self.n
    }

    /// Parameter of the scalar basis the coefficients refer to.
    pub fn c1(&self) -> C64 {
        scalar_parameter(self.n, self.m, self.c, &self.lattice)
    }

    pub fn same_space(&self, other: &Self) -> bool {
        self.n == other.n && self.m == other.m && self.c == other.c && self.lattice == other.lattice
    }

    /// `f(z) = sum_alpha phi_alpha theta_alpha(z)`.
    pub fn eval(&self, z: C64) -> ComplexMatrix {
        let th = theta_basis_all(self.scalar_degree(), self.c1(), &self.lattice, z);
        combine(&self.coeffs, &th, self.m)
    }

    /// `(f(z), f'(z))`.
    pub fn eval_with_derivative(&self, z: C64) -> (ComplexMatrix, ComplexMatrix) {
        let (th, dth) = theta_basis_all_with_derivative(self.scalar_degree(), self.c1(), &self.lattice, z);
        (combine(&self.coeffs, &th, self.m), combine(&self.coeffs, &dth, self.m))
    }

    /// Flattened coefficients, `phi_alpha` row-major in order of `alpha`.
    pub fn coefficient_vector(&self) -> Vec<C64> {
        self.coeffs.iter().flat_map(|p| p.entries().iter().copied()).collect()
    }

    pub fn with_coefficient_vector(&self, x: &[C64]) -> Result<Self> {
        let mm = self.m * self.m;
        let coeffs = x
            .chunks(mm)
            .map(|ch| ComplexMatrix::from_row_major(self.m, self.m, ch.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n, self.m, self.c, self.lattice, coeffs)
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|p| p.scale(s)).collect(),
            ..self.clone()
        }
    }

    /// Scales so that the largest-magnitude coefficient entry is exactly 1;
    /// near-ties go to the lowest flattened index.
    pub fn normalized(&self) -> Self {
        let x = self.coefficient_vector();
        match gauge_index(&x) {
            Some(k) if x[k] != ONE => self.scaled(ONE / x[k]),
            _ => self.clone(),
        }
    }

    /// Distance between the rays spanned by two sections of the same space:
    /// `other` is rescaled to agree with `self` at `self`'s gauge entry.
    pub fn ray_distance(&self, other: &Self) -> f64 {
        if self.n != other.n || self.m != other.m || self.lattice != other.lattice {
            return f64::INFINITY;
        }
        let a = self.coefficient_vector();
        let b = other.coefficient_vector();
        let Some(k) = gauge_index(&a) else {
            return f64::INFINITY;
        };
        if b[k] == ZERO {
            return f64::INFINITY;
        }
        let s = a[k] / b[k];
        let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - s * y).norm_sqr()).sum();
        let den: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        (num / den).sqrt() + (self.c - other.c).norm()
    }

    /// Largest violation of the two coefficient constraint families,
    /// relative to the largest coefficient.
    pub fn constraint_residual(&self) -> f64 {
        let (m, big_n) = (self.m, self.scalar_degree());
        let h = HeisenbergPair::new(m);
        let s = m * self.n;
        let link = shift_factor(self.n, m, self.c, &self.lattice);
        let scale = self.coeffs.iter().map(ComplexMatrix::max_abs).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for alpha in 0..big_n {
            let phi = &self.coeffs[alpha];
            let r1 = phi.scale(root_of_unity(alpha, m)).distance(&h.conj1(phi));
            let prev = &self.coeffs[(alpha + big_n - s) % big_n];
            let r2 = h.conj2(phi).distance(&prev.scale(link));
            worst = worst.max(r1).max(r2);
        }
        worst / scale
    }

    /// Relative residuals of both lines of the quasi-periodicity law at `z`.
    pub fn quasi_periodicity_residuals(&self, z: C64) -> (f64, f64) {
        let h = HeisenbergPair::new(self.m);
        let mf = self.m as f64;
        let fz = self.eval(z);
        let a = self.eval(z + 1.0 / mf);
        let b = self.eval(z + self.lattice.tau() / mf);
        let r1 = a.distance(&h.conj1(&fz)) / a.frobenius_norm().max(f64::MIN_POSITIVE);
        let factor = (-2.0 * PI * I * (mf * self.n as f64 * z - self.c)).exp();
        let r2 = b.distance(&h.conj2(&fz).scale(factor)) / b.frobenius_norm().max(f64::MIN_POSITIVE);
        (r1, r2)
    }

    /// `sum_k x_k basis_k` in this section's space.
    pub fn combination(basis: &[ThetaSection], x: &[C64]) -> Result<Self> {
        let first = basis.first().ok_or_else(|| Error::InvalidInput("empty basis".into()))?;
        let mut acc = vec![ZERO; first.coefficient_vector().len()];
        for (b, &xk) in basis.iter().zip(x) {
            for (a, v) in acc.iter_mut().zip(b.coefficient_vector()) {
                *a += xk * v;
            }
        }
        first.with_coefficient_vector(&acc)
    }
}

fn combine(coeffs: &[ComplexMatrix], th: &[C64], m: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(m, m);
    for (phi, &t) in coeffs.iter().zip(th) {
        for (o, p) in out.entries_mut().iter_mut().zip(phi.entries()) {
            *o += p * t;
        }
    }
    out
}

fn gauge_index(x: &[C64]) -> Option<usize> {
    let max = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 || !max.is_finite() {
        return None;
    }
    x.iter().position(|z| z.norm() >= max * (1.0 - 1e-12))
}

/// `c1 = m c - m n (m - 1) tau / 2`.
pub fn scalar_parameter(n: usize, m: usize, c: C64, lattice: &Lattice) -> C64 {
    let (nf, mf) = (n as f64, m as f64);
    mf * c - mf * nf * (mf - 1.0) * lattice.tau() / 2.0
}

/// The factor `k` in `g2^-1 phi_alpha g2 = k phi_(alpha - mn)`.
///
/// Shifting by `tau/m` moves `theta_alpha` to `theta_(alpha+s)`, `s = mn`, times
/// `exp(-2 pi i (s z + tau s(s-1)/2N - s(N-1) tau/2N - s c1/N))`; matching the
/// right-hand side of the law leaves this constant times `e^(-2 pi i c)`.
fn shift_factor(n: usize, m: usize, c: C64, lattice: &Lattice) -> C64 {
    let big_n = (m * m * n) as f64;
    let s = (m * n) as f64;
    let tau = lattice.tau();
    let c1 = scalar_parameter(n, m, c, lattice);
    let k = (-2.0
        * PI
        * I
        * (tau * s * (s - 1.0) / (2.0 * big_n) - s * (big_n - 1.0) * tau / (2.0 * big_n) - s * c1 / big_n))
        .exp();
    k * (-2.0 * PI * I * c).exp()
}

type SparseRow = Vec<(usize, C64)>;

/// Constraint rows over the unknowns `phi_alpha[i][j]`, flattened as
/// `alpha m^2 + i m + j`.
fn constraint_rows(n: usize, m: usize, link: C64) -> Vec<SparseRow> {
    let big_n = m * m * n;
    let s = m * n;
    let h = HeisenbergPair::new(m);
    let idx = |alpha: usize, i: usize, j: usize| alpha * m * m + i * m + j;
    // conj by a monomial matrix sends unit matrix E_ab to a multiple of one E_ij
    let unit = |a: usize, b: usize| ComplexMatrix::from_fn(m, m, |i, j| if (i, j) == (a, b) { ONE } else { ZERO });
    let mut rows = Vec::new();
    for alpha in 0..big_n {
        let phase = root_of_unity(alpha, m);
        let prev = (alpha + big_n - s) % big_n;
        for i in 0..m {
            for j in 0..m {
                // e^(2 pi i alpha/m) phi - g1^-1 phi g1 = 0, entrywise
                let g = h.conj1(&unit(i, j))[(i, j)];
                rows.push(vec![(idx(alpha, i, j), phase - g)]);
            }
        }
        // g2^-1 phi_alpha g2 - k phi_prev = 0
        let mut second: Vec<SparseRow> = (0..m * m).map(|_| Vec::new()).collect();
        for a in 0..m {
            for b in 0..m {
                let img = h.conj2(&unit(a, b));
                for i in 0..m {
                    for j in 0..m {
                        if img[(i, j)] != ZERO {
                            second[i * m + j].push((idx(alpha, a, b), img[(i, j)]));
                        }
                    }
                }
            }
        }
        for (e, mut row) in second.into_iter().enumerate() {
            row.push((idx(prev, e / m, e % m), -link));
            rows.push(row);
        }
    }
    rows
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Orthonormal nullspace of the constraint system, solved block by block over
/// the connected components of the unknown-sharing graph.
fn constraint_nullspace(n: usize, m: usize, c: C64, lattice: &Lattice) -> Result<Vec<Vec<C64>>> {
    let unknowns = m * m * m * m * n;
    let rows = constraint_rows(n, m, shift_factor(n, m, c, lattice));
    let scale = rows
        .iter()
        .map(|r| r.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt())
        .fold(1.0, f64::max);
    let mut parent: Vec<usize> = (0..unknowns).collect();
    for row in &rows {
        for w in row.windows(2) {
            let (a, b) = (find(&mut parent, w[0].0), find(&mut parent, w[1].0));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut comp_members: HashMap<usize, Vec<usize>> = HashMap::new();
    for u in 0..unknowns {
        let r = find(&mut parent, u);
        comp_members.entry(r).or_default().push(u);
    }
    let mut comp_rows: HashMap<usize, Vec<&SparseRow>> = HashMap::new();
    for row in &rows {
        if let Some(&(u, _)) = row.first() {
            let r = find(&mut parent, u);
            comp_rows.entry(r).or_default().push(row);
        }
    }
    let mut roots: Vec<usize> = comp_members.keys().copied().collect();
    roots.sort_unstable();
    let mut basis = Vec::new();
    for root in roots {
        let members = &comp_members[&root];
        let local: HashMap<usize, usize> = members.iter().enumerate().map(|(k, &u)| (u, k)).collect();
        let crows = comp_rows.get(&root).map(Vec::as_slice).unwrap_or(&[]);
        let mut a = ComplexMatrix::zeros(crows.len().max(1), members.len());
        for (r, row) in crows.iter().enumerate() {
            for &(u, v) in row.iter() {
                a[(r, local[&u])] += v;
            }
        }
        let svd = Svd::new(&a)?;
        for v in svd.null_vectors(CONSTRAINT_TOL * scale) {
            let mut full = vec![ZERO; unknowns];
            for (k, &u) in members.iter().enumerate() {
                full[u] = v[k];
            }
            basis.push(full);
        }
    }
    Ok(basis)
}

type BasisKey = (usize, usize, [u64; 4]);

fn basis_cache() -> &'static RwLock<HashMap<BasisKey, Arc<Vec<ThetaSection>>>> {
    static CACHE: OnceLock<RwLock<HashMap<BasisKey, Arc<Vec<ThetaSection>>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// A basis of `MTheta_(n,m,c)`; errors with `DimensionMismatch` unless the
/// constraint nullspace has dimension `m^2 n`. Results are memoized.
pub fn mtheta_basis(n: usize, m: usize, c: C64, lattice: &Lattice) -> Result<Arc<Vec<ThetaSection>>> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("theta sections need n, m >= 1".into()));
    }
    let tau = lattice.tau();
    let key = (
        n,
        m,
        [c.re.to_bits(), c.im.to_bits(), tau.re.to_bits(), tau.im.to_bits()],
    );
    if let Some(hit) = basis_cache().read().ok().and_then(|g| g.get(&key).cloned()) {
        return Ok(hit);
    }
    let vectors = constraint_nullspace(n, m, c, lattice)?;
    if vectors.len() != m * m * n {
        return Err(Error::DimensionMismatch {
            expected: m * m * n,
            found: vectors.len(),
        });
    }
    let zero = vec![ComplexMatrix::zeros(m, m); m * m * n];
    let template = ThetaSection::new(n, m, c, *lattice, zero)?;
    let sections = vectors
        .iter()
        .map(|v| template.with_coefficient_vector(v).map(|s| s.normalized()))
        .collect::<Result<Vec<_>>>()?;
    let sections = Arc::new(sections);
    if let Ok(mut g) = basis_cache().write() {
        g.entry(key).or_insert_with(|| Arc::clone(&sections));
    }
    Ok(sections)
}

/// Dimension of the constraint nullspace, without the `m^2 n` check.
pub fn constraint_dimension(n: usize, m: usize, c: C64, lattice: &Lattice) -> Result<usize> {
    Ok(constraint_nullspace(n, m, c, lattice)?.len())
}

/// `f(z)` for a section; free-function form of [`ThetaSection::eval`].
pub fn mtheta_eval(f: &ThetaSection, z: C64) -> ComplexMatrix {
    f.eval(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattices() -> [Lattice; 2] {
        [
            Lattice::new(C64::new(0.0, 1.0)).unwrap(),
            Lattice::new(C64::new(0.3, 0.8)).unwrap(),
        ]
    }

    #[test]
    fn dimension_is_m_squared_n() {
        for l in lattices() {
            for (m, n) in [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (1, 3)] {
                let c = C64::new(0.13, -0.07);
                let basis = mtheta_basis(n, m, c, &l).unwrap();
                assert_eq!(basis.len(), m * m * n, "(m, n) = ({m}, {n})");
            }
        }
    }

    #[test]
    fn basis_sections_satisfy_both_laws() {
        let l = lattices()[1];
        let basis = mtheta_basis(2, 2, C64::new(0.2, 0.1), &l).unwrap();
        for f in basis.iter() {
            assert!(f.constraint_residual() < CONSTRAINT_TOL);
            for k in 0..5 {
                let z = C64::new(0.13 * k as f64 - 0.2, 0.07 * k as f64);
                let (r1, r2) = f.quasi_periodicity_residuals(z);
                assert!(
                    r1 < 10.0 * CONSTRAINT_TOL && r2 < 10.0 * CONSTRAINT_TOL,
                    "{r1:e} {r2:e}"
                );
            }
        }
    }

    #[test]
    fn wrong_link_factor_loses_dimension() {
        // a link factor inconsistent with c1 admits no closed orbits
        let l = lattices()[0];
        let (n, m) = (1, 2);
        let link = shift_factor(n, m, C64::new(0.1, 0.0), &l);
        assert!((link - ONE).norm() < 1e-12);
        let rows = constraint_rows(n, m, link * 1.5);
        let mut a = ComplexMatrix::zeros(rows.len(), m * m * m * m * n);
        for (i, r) in rows.iter().enumerate() {
            for &(u, v) in r {
                a[(i, u)] += v;
            }
        }
        let svd = Svd::new(&a).unwrap();
        assert_eq!(svd.null_vectors(CONSTRAINT_TOL * svd.max_value()).len(), 0);
    }

    #[test]
    fn normalization_is_idempotent() {
        let l = lattices()[0];
        let basis = mtheta_basis(1, 2, C64::new(0.0, 0.0), &l).unwrap();
        let x = [
            C64::new(0.3, 1.0),
            C64::new(-2.0, 0.5),
            C64::new(0.7, 0.7),
            C64::new(1.1, -0.2),
        ];
        let f = ThetaSection::combination(&basis, &x).unwrap();
        let once = f.normalized();
        assert_eq!(once.normalized(), once);
        let max = once.coefficient_vector().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_layout_and_validation() {
        let l = lattices()[0];
        let f = mtheta_basis(1, 1, C64::new(0.1, 0.0), &l).unwrap()[0].clone();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.starts_with("{\"n\":1,\"m\":1,\"c\":[0.1,0.0],\"tau\":[0.0,1.0],\"coeffs\":["));
        let back: ThetaSection = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        // violating the constraints is rejected
        let bad = r#"{"n":1,"m":2,"c":[0,0],"tau":[0,1],"coeffs":[
            {"rows":2,"cols":2,"entries":[[1,0],[1,0],[1,0],[1,0]]},
            {"rows":2,"cols":2,"entries":[[0,0],[0,0],[0,0],[0,0]]},
            {"rows":2,"cols":2,"entries":[[0,0],[0,0],[0,0],[0,0]]},
            {"rows":2,"cols":2,"entries":[[0,0],[0,0],[0,0],[0,0]]}]}"#;
        assert!(serde_json::from_str::<ThetaSection>(bad).is_err());
    }
}
