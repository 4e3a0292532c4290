use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::{complex_pair, ComplexMatrix, C64, ONE, ZERO};
use crate::tol::{TAU_MIN, ZERO_TOL};

/// The lattice `Gamma = Z + tau Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct Lattice {
    tau: C64,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    #[serde(with = "complex_pair")]
    tau: C64,
}

impl TryFrom<LatticeRepr> for Lattice {
    type Error = Error;
    fn try_from(r: LatticeRepr) -> Result<Self> {
        Lattice::new(r.tau)
    }
}

impl From<Lattice> for LatticeRepr {
    fn from(l: Lattice) -> Self {
        LatticeRepr { tau: l.tau }
    }
}

impl Lattice {
    pub fn new(tau: C64) -> Result<Self> {
        if !tau.is_finite() || tau.im < TAU_MIN {
            return Err(Error::InvalidInput(format!(
                "Im(tau) = {} is below the minimum {TAU_MIN}",
                tau.im
            )));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    /// Coordinates `(a, b)` with `z = (a + b tau) / m`.
    pub fn coordinates(&self, z: C64, m: usize) -> (f64, f64) {
        let w = z * m as f64;
        let b = w.im / self.tau.im;
        let a = w.re - b * self.tau.re;
        (a, b)
    }

    pub fn from_coordinates(&self, a: f64, b: f64, m: usize) -> C64 {
        (C64::new(a, 0.0) + self.tau * b) / m as f64
    }

    /// Representative of `z` modulo `(1/m) Gamma` in `[0, 1/m) + [0, tau/m)`.
    /// Coordinates within `ZERO_TOL` of 1 wrap to 0 so that points on the
    /// boundary reduce deterministically.
    pub fn reduce(&self, z: C64, m: usize) -> C64 {
        let (a, b) = self.coordinates(z, m);
        self.from_coordinates(wrap_unit(a), wrap_unit(b), m)
    }

    /// Distance from `z` to the nearest point of `(1/m) Gamma`.
    pub fn lattice_distance(&self, z: C64, m: usize) -> f64 {
        let r = self.reduce(z, m);
        let (w1, w2) = self.periods(m);
        let mut best = f64::INFINITY;
        for k in 0..=1 {
            for l in 0..=1 {
                best = best.min((r - w1 * k as f64 - w2 * l as f64).norm());
            }
        }
        best
    }

    /// Distance between the classes of `z` and `w` modulo `(1/m) Gamma`.
    pub fn periodic_distance(&self, z: C64, w: C64, m: usize) -> f64 {
        self.lattice_distance(z - w, m)
    }

    /// Generators `(1/m, tau/m)` of `(1/m) Gamma`.
    pub fn periods(&self, m: usize) -> (C64, C64) {
        (C64::new(1.0 / m as f64, 0.0), self.tau / m as f64)
    }

    /// Length scale of the `(1/m) Gamma` cell.
    pub fn cell_size(&self, m: usize) -> f64 {
        let (w1, w2) = self.periods(m);
        w1.norm().min(w2.norm())
    }
}

fn wrap_unit(x: f64) -> f64 {
    let f = x - x.floor();
    if f > 1.0 - ZERO_TOL {
        0.0
    } else {
        f
    }
}

/// Matrices with `g1^m = g2^m = 1` and `g2 g1 = eps g1 g2`, in the basis
/// `g1 v_k = eps^k v_k`, `g2 v_k = v_(k-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergPair {
    m: usize,
    epsilon: C64,
    gamma1: ComplexMatrix,
    gamma2: ComplexMatrix,
}

impl HeisenbergPair {
    pub fn new(m: usize) -> Self {
        let epsilon = root_of_unity(1, m);
        let gamma1 = ComplexMatrix::diag(&(0..m).map(|k| root_of_unity(k, m)).collect::<Vec<_>>());
        let gamma2 = ComplexMatrix::from_fn(m, m, |i, j| if (i + 1) % m == j { ONE } else { ZERO });
        Self {
            m,
            epsilon,
            gamma1,
            gamma2,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn epsilon(&self) -> C64 {
        self.epsilon
    }

    pub fn gamma1(&self) -> &ComplexMatrix {
        &self.gamma1
    }

    pub fn gamma2(&self) -> &ComplexMatrix {
        &self.gamma2
    }

    /// `g1^-1 x g1`; `g1` is unitary and diagonal.
    pub fn conj1(&self, x: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.m, self.m, |i, j| {
            x[(i, j)] * self.gamma1[(i, i)].conj() * self.gamma1[(j, j)]
        })
    }

    /// `g2^-1 x g2`; `g2` is a cyclic permutation.
    pub fn conj2(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let m = self.m;
        // g2 e_j = e_(j-1), so (g2^-1 x g2)_(i,j) = x_(i-1, j-1)
        ComplexMatrix::from_fn(m, m, |i, j| x[((i + m - 1) % m, (j + m - 1) % m)])
    }
}

/// `exp(2 pi i k / m)`, exact for the cardinal points.
pub fn root_of_unity(k: usize, m: usize) -> C64 {
    let k = k % m;
    if (4 * k).is_multiple_of(m) {
        return [ONE, C64::new(0.0, 1.0), -ONE, C64::new(0.0, -1.0)][4 * k / m];
    }
    C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_relations_hold_exactly() {
        for m in 1..=4 {
            let h = HeisenbergPair::new(m);
            let id = ComplexMatrix::identity(m);
            assert!(h.gamma1().pow(m).distance(&id) < 1e-14);
            assert_eq!(h.gamma2().pow(m), id);
            let lhs = h.gamma2() * h.gamma1();
            let rhs = (h.gamma1() * h.gamma2()).scale(h.epsilon());
            assert!(lhs.distance(&rhs) < 1e-15, "m = {m}");
        }
    }

    #[test]
    fn conjugation_helpers_match_products() {
        let h = HeisenbergPair::new(3);
        let x = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 + 0.3, j as f64 - 1.0));
        let g1inv = crate::linalg::lu::inverse(h.gamma1(), 1e-12).unwrap();
        let g2inv = crate::linalg::lu::inverse(h.gamma2(), 1e-12).unwrap();
        assert!(h.conj1(&x).distance(&(&(&g1inv * &x) * h.gamma1())) < 1e-14);
        assert!(h.conj2(&x).distance(&(&(&g2inv * &x) * h.gamma2())) < 1e-14);
    }

    #[test]
    fn reduce_lands_in_cell() {
        let l = Lattice::new(C64::new(0.3, 0.8)).unwrap();
        let z = C64::new(2.71, -1.3);
        let r = l.reduce(z, 2);
        let (a, b) = l.coordinates(r, 2);
        assert!((0.0..1.0).contains(&a) && (0.0..1.0).contains(&b));
        assert!(l.periodic_distance(z, r, 2) < 1e-12);
        // boundary dead-band
        let edge = l.from_coordinates(1.0 - 1e-9, 0.5, 2);
        assert!(l.coordinates(l.reduce(edge, 2), 2).0.abs() < 1e-12);
    }

    #[test]
    fn rejects_small_imaginary_part() {
        assert!(Lattice::new(C64::new(0.0, 0.01)).is_err());
    }
}
