//! Factorization of matrix theta functions along a partition of the zero
//! set, the twisted transposition `mu(f, g) = (f1, g1)` with
//! `f g = f1 g1`, `S(f1) = S(g)`, `S(g1) = S(f)`, and the local action of
//! `S_(mN)` on chains of degree-one sections with ordered zero sets.

use serde::{Deserialize, Serialize};

use super::interp::{fit_section, interpolate_with_c, multiply, sampled_product_residual};
use super::lattice::Lattice;
use super::space::{mtheta_basis, ThetaSection};
use super::zeros::{det_zeros, match_zeros};
use crate::error::{Error, Result};
use crate::linalg::eigen::fmt_c;
use crate::linalg::matrix::{complex_pair, C64};
use crate::linalg::svd::Svd;
use crate::polyfactor::SpectrumPartition;
use crate::tol::{EIG_TOL, THETA_FACT_TOL};
use crate::transpositions::{BraidWord, Carrier, CarrierKind, TwistedMap};

/// Zero sets of `f` and `g` closer than this (in cell units) are treated as
/// intersecting.
const OVERLAP_RADIUS: f64 = 1e-4;

/// Default parameters for the factors of a section with parameter `c`: each
/// factor gets `sum(A_alpha) - 1/2` except the first, which absorbs the rest
/// so that the parameters add up to `c` exactly.
pub fn default_parameters(c: C64, blocks: &[Vec<C64>]) -> Vec<C64> {
    let mut out: Vec<C64> = blocks.iter().map(|b| b.iter().sum::<C64>() - 0.5).collect();
    let rest: C64 = out[1..].iter().sum();
    out[0] = c - rest;
    out
}

/// `f = f_1 ... f_n` with `S(f_alpha)` the `alpha`-th block, parameters from
/// [`default_parameters`].
pub fn theta_refactor(f: &ThetaSection, partition: &SpectrumPartition) -> Result<Vec<ThetaSection>> {
    theta_refactor_with_c(f, partition, None)
}

/// As [`theta_refactor`] with explicit factor parameters `c_alpha`; they must
/// add up to `c` and satisfy the zero-sum rule of their blocks.
pub fn theta_refactor_with_c(
    f: &ThetaSection,
    partition: &SpectrumPartition,
    params: Option<&[C64]>,
) -> Result<Vec<ThetaSection>> {
    let (n, m, lattice) = (f.n(), f.m(), *f.lattice());
    if partition.blocks().len() != n || partition.block_size() != m {
        return Err(Error::PartitionMismatch(format!(
            "need {n} blocks of size {m}, got {} blocks of size {}",
            partition.blocks().len(),
            partition.block_size()
        )));
    }
    let requested: Vec<C64> = partition.blocks().iter().flatten().copied().collect();
    let polished = match_zeros(f, &requested)?;
    let blocks: Vec<Vec<C64>> = polished.chunks(m).map(<[C64]>::to_vec).collect();
    let cs = match params {
        None => default_parameters(f.c(), &blocks),
        Some(p) => {
            if p.len() != n {
                return Err(Error::InvalidInput(format!(
                    "need {n} factor parameters, got {}",
                    p.len()
                )));
            }
            let total: C64 = p.iter().sum();
            if (total - f.c()).norm() > 1e-9 * (1.0 + f.c().norm()) {
                return Err(Error::InvalidInput(format!(
                    "factor parameters add up to {}, section has c = {}",
                    fmt_c(total),
                    fmt_c(f.c())
                )));
            }
            p.to_vec()
        }
    };
    if n == 1 {
        return Ok(vec![f.normalized()]);
    }

    let mut current = f.clone();
    let mut factors = vec![f.clone(); n];
    for alpha in (1..n).rev() {
        let block = &blocks[alpha];
        let vs = block
            .iter()
            .map(|&lambda| kernel_vector(&current, lambda))
            .collect::<Result<Vec<_>>>()?;
        let right = interpolate_with_c(block, &vs, 1, m, cs[alpha], &lattice)?;
        let target = |z: C64| current.eval(z);
        let (g, resid) = fit_section(
            alpha,
            m,
            current.c() - cs[alpha],
            &lattice,
            &target,
            Some(&right),
            block,
        )?;
        if resid > THETA_FACT_TOL {
            return Err(Error::QuotientResidual {
                residual: resid,
                tol: THETA_FACT_TOL,
            });
        }
        factors[alpha] = right;
        current = g.normalized();
    }
    // the remaining quotient carries c minus the other parameters, which
    // equals cs[0] up to rounding; keep the caller's value verbatim
    factors[0] = ThetaSection::new(1, m, cs[0], lattice, current.coeffs().to_vec())?;

    let resid = sampled_product_residual(&lattice, m, std::slice::from_ref(f), &factors);
    if resid > THETA_FACT_TOL {
        return Err(Error::QuotientResidual {
            residual: resid,
            tol: THETA_FACT_TOL,
        });
    }
    Ok(factors)
}

/// Unit vector spanning the kernel of `f(lambda)`, which must be one-dimensional.
fn kernel_vector(f: &ThetaSection, lambda: C64) -> Result<Vec<C64>> {
    let svd = Svd::new(&f.eval(lambda))?;
    let k = svd.values.len();
    let smax = svd.max_value().max(f64::MIN_POSITIVE);
    if k >= 2 && svd.values[k - 2] < 10.0 * EIG_TOL * smax {
        return Err(Error::DegenerateInstance(format!(
            "kernel of f({}) is not one-dimensional",
            fmt_c(lambda)
        )));
    }
    Ok(svd.v[k - 1].clone())
}

impl Carrier for ThetaSection {
    fn distance(&self, other: &Self) -> f64 {
        self.ray_distance(other)
    }

    fn magnitude(&self) -> f64 {
        let x = self.normalized().coefficient_vector();
        x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Adds `eps` times the first basis section of the same space.
    fn perturbed(&self, eps: f64) -> Self {
        let Ok(basis) = mtheta_basis(self.n(), self.m(), self.c(), self.lattice()) else {
            return self.clone();
        };
        let a = self.normalized().coefficient_vector();
        let b = basis[0].coefficient_vector();
        let sum: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x + eps * y).collect();
        self.with_coefficient_vector(&sum)
            .map(|s| s.normalized())
            .unwrap_or_else(|_| self.clone())
    }
}

fn as_domain_error(e: Error) -> Error {
    match e {
        Error::InvalidInput(_) => e,
        other => Error::OutsideDomain(format!("{}: {other}", other.name())),
    }
}

/// The twisted transposition on degree-one sections of size `m`: refactor
/// `f g` so that the left factor carries the zeros of `g` (and `g`'s
/// parameter) and the right factor those of `f`.
pub fn mu_theta(m: usize, lattice: Lattice) -> TwistedMap<ThetaSection> {
    TwistedMap::new(
        "theta",
        CarrierKind::ThetaSection(m),
        move |f: &ThetaSection, g: &ThetaSection| {
            for s in [f, g] {
                if s.m() != m || s.n() != 1 || *s.lattice() != lattice {
                    return Err(Error::InvalidInput(format!(
                        "theta map expects degree-one {m}x{m} sections over tau = {}",
                        fmt_c(lattice.tau())
                    )));
                }
            }
            let zf = det_zeros(f).map_err(as_domain_error)?;
            let zg = det_zeros(g).map_err(as_domain_error)?;
            let cell = lattice.cell_size(m);
            for &a in &zf.points {
                for &b in &zg.points {
                    if lattice.periodic_distance(a, b, m) < OVERLAP_RADIUS * cell {
                        return Err(Error::OutsideDomain(format!("zero sets meet near {}", fmt_c(a))));
                    }
                }
            }
            let h = multiply(&[f.clone(), g.clone()]).map_err(as_domain_error)?;
            let partition = SpectrumPartition::new(vec![zg.points, zf.points]).map_err(as_domain_error)?;
            let parts = theta_refactor_with_c(&h, &partition, Some(&[g.c(), f.c()])).map_err(as_domain_error)?;
            Ok((parts[0].clone(), parts[1].clone()))
        },
    )
}

/// A degree-one section together with an ordering of its zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaFactor {
    pub section: ThetaSection,
    #[serde(with = "complex_pair::vec")]
    pub zeros: Vec<C64>,
}

impl ThetaFactor {
    /// Orders the zeros canonically.
    pub fn new(section: ThetaSection) -> Result<Self> {
        let zeros = det_zeros(&section)?.points;
        Ok(Self { section, zeros })
    }

    /// Uses the given order; every value must be a zero of `det f`.
    pub fn with_order(section: ThetaSection, zeros: Vec<C64>) -> Result<Self> {
        if section.n() != 1 || zeros.len() != section.m() {
            return Err(Error::InvalidInput(format!(
                "a degree-one factor of size {} needs {} ordered zeros",
                section.m(),
                section.m()
            )));
        }
        let zeros = match_zeros(&section, &zeros)?;
        Ok(Self { section, zeros })
    }
}

/// Local action of `S_(mN)` on chains of degree-one sections. Letters inside
/// a factor reorder its zero labels; the letter `alpha m` refactors the pair
/// `(alpha, alpha + 1)` after exchanging the last zero of the left factor
/// with the first zero of the right one, moving the parameters along.
pub fn theta_local_action(word: &BraidWord, fs: &[ThetaFactor]) -> Result<Vec<ThetaFactor>> {
    let m = fs
        .first()
        .ok_or_else(|| Error::InvalidInput("empty chain".into()))?
        .section
        .m();
    if word.n_strands() != m * fs.len() {
        return Err(Error::InvalidInput(format!(
            "word acts on {} strands, chain has {}",
            word.n_strands(),
            m * fs.len()
        )));
    }
    let mut out = fs.to_vec();
    for &i in word.letters() {
        if i % m != 0 {
            let p = i % m - 1;
            out[i / m].zeros.swap(p, p + 1);
            continue;
        }
        let alpha = i / m - 1;
        let (a, b) = (&out[alpha], &out[alpha + 1]);
        let mut left = a.zeros.clone();
        let mut right = b.zeros.clone();
        let (outgoing, incoming) = (left[m - 1], right[0]);
        std::mem::swap(&mut left[m - 1], &mut right[0]);
        let shift = incoming - outgoing;
        let params = [a.section.c() + shift, b.section.c() - shift];
        let pair = multiply(&[a.section.clone(), b.section.clone()])?;
        let partition = SpectrumPartition::new(vec![left.clone(), right.clone()])?;
        let parts = theta_refactor_with_c(&pair, &partition, Some(&params))?;
        out[alpha] = ThetaFactor {
            section: parts[0].clone(),
            zeros: left,
        };
        out[alpha + 1] = ThetaFactor {
            section: parts[1].clone(),
            zeros: right,
        };
    }
    Ok(out)
}

/// Relative distance between the products of two chains at held-out points,
/// up to one global scalar.
pub fn chain_product_residual(a: &[ThetaFactor], b: &[ThetaFactor]) -> f64 {
    let sa: Vec<ThetaSection> = a.iter().map(|f| f.section.clone()).collect();
    let sb: Vec<ThetaSection> = b.iter().map(|f| f.section.clone()).collect();
    sampled_product_residual(sa[0].lattice(), sa[0].m(), &sa, &sb)
}
