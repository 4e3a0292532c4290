//! Zeros of `det f` modulo `(1/m) Gamma`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::space::ThetaSection;
use crate::error::{Error, Result};
use crate::linalg::eigen::{canonical_cmp, fmt_c};
use crate::linalg::lu::determinant;
use crate::linalg::matrix::{complex_pair, ComplexMatrix, C64};
use crate::tol::{SEP_MIN, ZERO_TOL};

/// Seeds per cell side for the Newton search.
pub const GRID: usize = 40;
const MAX_NEWTON: usize = 60;
/// Candidates this close (in cell units) are the same zero.
const MERGE_RADIUS: f64 = 1e-6;
/// Distinct zeros closer than this (in cell units) signal a near-double zero.
const DOUBLE_RADIUS: f64 = 1e-3;

/// Canonical representatives of the zeros of `det f`, canonically ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    #[serde(with = "complex_pair::vec")]
    pub points: Vec<C64>,
}

impl ZeroSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sum(&self) -> C64 {
        self.points.iter().sum()
    }
}

/// `det f(z)` and its derivative, via `(det f)' = sum_k det(f with column k
/// replaced by column k of f')`.
pub fn det_and_derivative(f: &ThetaSection, z: C64) -> (C64, C64) {
    let (v, d) = f.eval_with_derivative(z);
    (determinant(&v), det_derivative(&v, &d))
}

fn det_derivative(v: &ComplexMatrix, d: &ComplexMatrix) -> C64 {
    let m = v.rows();
    (0..m)
        .map(|k| {
            let mut w = v.clone();
            w.set_column(k, &d.column(k));
            determinant(&w)
        })
        .sum()
}

/// Damped Newton iteration on `det f`; `None` unless the final step is
/// below `ZERO_TOL` cell units.
pub fn refine_zero(f: &ThetaSection, z0: C64) -> Option<C64> {
    let cell = f.lattice().cell_size(f.m());
    let max_step = cell / 4.0;
    let mut z = z0;
    for _ in 0..MAX_NEWTON {
        let (d, dd) = det_and_derivative(f, z);
        if d == C64::new(0.0, 0.0) {
            return Some(z);
        }
        if dd == C64::new(0.0, 0.0) || !dd.is_finite() || !d.is_finite() {
            return None;
        }
        let mut step = d / dd;
        if step.norm() > max_step {
            step *= max_step / step.norm();
        }
        z -= step;
        if step.norm() < 1e-14 * cell {
            return Some(z);
        }
    }
    let (d, dd) = det_and_derivative(f, z);
    ((d / dd).norm() < ZERO_TOL * cell).then_some(z)
}

/// Merges `z` into `found` unless an equivalent point is already present.
fn merge(found: &mut Vec<C64>, z: C64, f: &ThetaSection) {
    let (l, m) = (f.lattice(), f.m());
    let cell = l.cell_size(m);
    if found
        .iter()
        .all(|&w| l.periodic_distance(w, z, m) > MERGE_RADIUS * cell)
    {
        found.push(z);
    }
}

/// The zeros of `det f` modulo `(1/m) Gamma`. There are exactly `m n` of them
/// for a section of `MTheta_(n,m,c)`; any other count is an error.
pub fn det_zeros(f: &ThetaSection) -> Result<ZeroSet> {
    let (l, m) = (*f.lattice(), f.m());
    let expected = m * f.n();
    let seeds: Vec<C64> = (0..GRID * GRID)
        .map(|k| {
            let (a, b) = ((k / GRID) as f64, (k % GRID) as f64);
            l.from_coordinates((a + 0.5) / GRID as f64, (b + 0.5) / GRID as f64, m)
        })
        .collect();
    let candidates: Vec<Option<C64>> = seeds.par_iter().map(|&z| refine_zero(f, z)).collect();
    let mut found = Vec::new();
    for z in candidates.into_iter().flatten() {
        merge(&mut found, l.reduce(z, m), f);
    }
    let cell = l.cell_size(m);
    for (i, &a) in found.iter().enumerate() {
        for &b in &found[i + 1..] {
            if l.periodic_distance(a, b, m) < DOUBLE_RADIUS * cell {
                return Err(Error::DegenerateZeros(fmt_c(a)));
            }
        }
    }
    if found.len() != expected {
        return Err(Error::ZeroCountMismatch {
            expected,
            found: found.len(),
        });
    }
    found.sort_by(canonical_cmp);
    Ok(ZeroSet { points: found })
}

/// Residual of the zero-sum congruence `m * sum(lambda) = m c + m n / 2`
/// modulo `Gamma`. Both sides are well defined for zeros taken modulo
/// `(1/m) Gamma`.
pub fn sum_rule_residual(f: &ThetaSection, zeros: &ZeroSet) -> f64 {
    let mf = f.m() as f64;
    let target = mf * f.c() + mf * f.n() as f64 / 2.0;
    f.lattice().lattice_distance(mf * zeros.sum() - target, 1)
}

/// Checks that `values` are distinct zeros of `det f` modulo `(1/m) Gamma`,
/// returning Newton-polished copies.
pub fn match_zeros(f: &ThetaSection, values: &[C64]) -> Result<Vec<C64>> {
    let (l, m) = (f.lattice(), f.m());
    let cell = l.cell_size(m);
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        let z = refine_zero(f, v)
            .filter(|&z| l.periodic_distance(z, v, m) < 1e-6 * cell)
            .ok_or_else(|| Error::PartitionMismatch(format!("{} is not a zero of det f", fmt_c(v))))?;
        out.push(z);
    }
    for i in 0..out.len() {
        for j in i + 1..out.len() {
            if l.periodic_distance(out[i], out[j], m) < SEP_MIN * cell {
                return Err(Error::PartitionMismatch(format!(
                    "{} appears twice modulo the lattice",
                    fmt_c(values[i])
                )));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::lattice::Lattice;
    use crate::theta::space::mtheta_basis;

    fn section(n: usize, m: usize, c: C64, tau: C64, seed: f64) -> ThetaSection {
        let l = Lattice::new(tau).unwrap();
        let basis = mtheta_basis(n, m, c, &l).unwrap();
        let x: Vec<C64> = (0..basis.len())
            .map(|k| {
                let t = seed + 1.3 * k as f64;
                C64::new(t.sin(), (0.7 * t).cos())
            })
            .collect();
        ThetaSection::combination(&basis, &x).unwrap().normalized()
    }

    #[test]
    fn degree_one_scalar_theta_has_one_zero() {
        let f = section(1, 1, C64::new(0.2, 0.1), C64::new(0.0, 1.0), 0.3);
        let zs = det_zeros(&f).unwrap();
        assert_eq!(zs.len(), 1);
        assert!(sum_rule_residual(&f, &zs) < 1e-9);
    }

    #[test]
    fn counts_and_sum_rule() {
        for (m, n) in [(2, 1), (2, 2), (3, 1)] {
            for (k, tau) in [C64::new(0.0, 1.0), C64::new(0.3, 0.8)].into_iter().enumerate() {
                let c = C64::new(0.1 * k as f64, -0.05);
                let f = section(n, m, c, tau, 0.4 + k as f64);
                let zs = det_zeros(&f).unwrap();
                assert_eq!(zs.len(), m * n);
                assert!(sum_rule_residual(&f, &zs) < 1e-8, "(m, n) = ({m}, {n})");
                for &z in &zs.points {
                    let (d, dd) = det_and_derivative(&f, z);
                    assert!((d / dd).norm() < ZERO_TOL);
                }
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let f = section(1, 2, C64::new(0.1, 0.0), C64::new(0.0, 1.0), 1.1);
        let z = C64::new(0.21, 0.13);
        let h = 1e-6;
        let (_, dd) = det_and_derivative(&f, z);
        let fd = (det_and_derivative(&f, z + h).0 - det_and_derivative(&f, z - h).0) / (2.0 * h);
        assert!((fd - dd).norm() < 1e-6 * dd.norm());
    }

    #[test]
    fn rejects_non_zero_values() {
        let f = section(1, 2, C64::new(0.1, 0.0), C64::new(0.0, 1.0), 1.1);
        let zs = det_zeros(&f).unwrap();
        assert!(match_zeros(&f, &zs.points).is_ok());
        let err = match_zeros(&f, &[zs.points[0] + 0.05]).unwrap_err();
        assert_eq!(err.name(), "PartitionMismatch");
    }
}
