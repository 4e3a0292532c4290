use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::{ComplexMatrix, ONE};

/// Monic matrix polynomial `t^d - a1 t^(d-1) + a2 t^(d-2) - ... + (-1)^d a_d`.
///
/// `coeffs` holds `a1, ..., a_d`; the leading identity is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct MatrixPolynomial {
    m: usize,
    coeffs: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    m: usize,
    d: usize,
    coeffs: Vec<ComplexMatrix>,
}

impl TryFrom<PolyRepr> for MatrixPolynomial {
    type Error = Error;
    fn try_from(r: PolyRepr) -> Result<Self> {
        if r.coeffs.len() != r.d {
            return Err(Error::InvalidInput(format!(
                "declared degree {} but {} coefficients",
                r.d,
                r.coeffs.len()
            )));
        }
        if r.d == 0 {
            return Ok(MatrixPolynomial::one(r.m));
        }
        let p = MatrixPolynomial::new(r.coeffs)?;
        if p.m != r.m {
            return Err(Error::InvalidInput(format!(
                "declared size {} but coefficients are {}x{}",
                r.m, p.m, p.m
            )));
        }
        Ok(p)
    }
}

impl From<MatrixPolynomial> for PolyRepr {
    fn from(p: MatrixPolynomial) -> Self {
        PolyRepr {
            m: p.m,
            d: p.coeffs.len(),
            coeffs: p.coeffs,
        }
    }
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        let m = coeffs
            .first()
            .ok_or_else(|| Error::InvalidInput("polynomial needs degree >= 1".into()))?
            .rows();
        if coeffs.iter().any(|c| c.rows() != m || c.cols() != m) {
            return Err(Error::InvalidInput(
                "all coefficients must be square of equal size".into(),
            ));
        }
        Ok(Self { m, coeffs })
    }

    /// The degree-0 monic polynomial `1`.
    pub fn one(m: usize) -> Self {
        Self { m, coeffs: Vec::new() }
    }

    /// Builds from the standard form `t^d + p_(d-1) t^(d-1) + ... + p_0`,
    /// with `lower = [p_0, ..., p_(d-1)]`.
    pub fn from_standard(m: usize, lower: &[ComplexMatrix]) -> Result<Self> {
        let d = lower.len();
        if d == 0 {
            return Ok(Self::one(m));
        }
        let coeffs = (1..=d)
            .map(|k| {
                let p = &lower[d - k];
                if k % 2 == 0 {
                    p.clone()
                } else {
                    -p
                }
            })
            .collect();
        Self::new(coeffs)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// The signed coefficients `a1, ..., a_d`.
    pub fn coeffs(&self) -> &[ComplexMatrix] {
        &self.coeffs
    }

    /// Standard-form lower coefficients `[p_0, ..., p_(d-1)]`,
    /// `p_(d-k) = (-1)^k a_k`.
    pub fn standard(&self) -> Vec<ComplexMatrix> {
        let d = self.degree();
        (0..d)
            .map(|i| {
                let k = d - i;
                let a = &self.coeffs[k - 1];
                if k.is_multiple_of(2) {
                    a.clone()
                } else {
                    -a
                }
            })
            .collect()
    }

    pub fn evaluate(&self, t: crate::linalg::C64) -> ComplexMatrix {
        let std = self.standard();
        let mut acc = ComplexMatrix::identity(self.m);
        for p in std.iter().rev() {
            acc = &acc.scale(t) + p;
        }
        acc
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(ComplexMatrix::frobenius_norm)
            .fold(0.0, f64::max)
    }

    /// Largest coefficient difference (Frobenius).
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.degree(), other.degree());
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }

    /// Block companion matrix whose characteristic polynomial is `det P(t)`.
    pub fn companion(&self) -> ComplexMatrix {
        let (m, d) = (self.m, self.degree());
        let mut c = ComplexMatrix::zeros(m * d, m * d);
        let id = ComplexMatrix::identity(m);
        for k in 0..d.saturating_sub(1) {
            c.set_block(k * m, (k + 1) * m, &id);
        }
        for (j, p) in self.standard().iter().enumerate() {
            c.set_block((d - 1) * m, j * m, &p.scale(-ONE));
        }
        c
    }
}
