//! Twisted transpositions and numerical checks of their defining relations.
//!
//! A twisted transposition is a map `mu(u, v) = (phi(u, v), psi(u, v))` whose
//! slot-wise extensions `s1 = mu x id` and `s2 = id x mu` are involutions that
//! satisfy the braid relation `s1 s2 s1 = s2 s1 s2`. The checkers here measure
//! how far a concrete map is from satisfying each identity.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lu::Lu;
use crate::linalg::matrix::{ComplexMatrix, C64, ONE};

/// Element type a twisted transposition acts on.
pub trait Carrier: Clone + Send + Sync + 'static {
    /// Distance in the carrier's metric.
    fn distance(&self, other: &Self) -> f64;
    fn magnitude(&self) -> f64;
    /// A copy moved by `eps` in a fixed direction; used by mutation tests.
    fn perturbed(&self, eps: f64) -> Self;
}

impl Carrier for C64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn perturbed(&self, eps: f64) -> Self {
        self + eps
    }
}

impl Carrier for ComplexMatrix {
    fn distance(&self, other: &Self) -> f64 {
        ComplexMatrix::distance(self, other)
    }
    fn magnitude(&self) -> f64 {
        self.frobenius_norm()
    }
    fn perturbed(&self, eps: f64) -> Self {
        self.sub_identity_scaled(C64::new(-eps, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarrierKind {
    ScalarComplex,
    SquareMatrix(usize),
    AutomorphismPair,
    ThetaSection(usize),
}

type MapFn<T> = dyn Fn(&T, &T) -> Result<(T, T)> + Send + Sync;

/// `mu(u, v) = (phi(u, v), psi(u, v))`; the domain guard lives inside `apply`,
/// which reports [`Error::OutsideDomain`] where the rational maps are undefined.
pub struct TwistedMap<T> {
    tag: String,
    carrier: CarrierKind,
    f: Arc<MapFn<T>>,
}

impl<T> Clone for TwistedMap<T> {
    fn clone(&self) -> Self {
        Self {
            tag: self.tag.clone(),
            carrier: self.carrier,
            f: Arc::clone(&self.f),
        }
    }
}

impl<T> fmt::Debug for TwistedMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwistedMap")
            .field("tag", &self.tag)
            .field("carrier", &self.carrier)
            .finish()
    }
}

impl<T: Carrier> TwistedMap<T> {
    pub fn new(
        tag: impl Into<String>,
        carrier: CarrierKind,
        f: impl Fn(&T, &T) -> Result<(T, T)> + Send + Sync + 'static,
    ) -> Self {
        Self {
            tag: tag.into(),
            carrier,
            f: Arc::new(f),
        }
    }

    /// The plain transposition `(u, v) -> (v, u)`.
    pub fn swap(carrier: CarrierKind) -> Self {
        Self::new("swap", carrier, |u: &T, v: &T| Ok((v.clone(), u.clone())))
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn carrier(&self) -> CarrierKind {
        self.carrier
    }

    pub fn apply(&self, u: &T, v: &T) -> Result<(T, T)> {
        (self.f)(u, v)
    }

    pub fn phi(&self, u: &T, v: &T) -> Result<T> {
        self.apply(u, v).map(|(p, _)| p)
    }

    pub fn psi(&self, u: &T, v: &T) -> Result<T> {
        self.apply(u, v).map(|(_, q)| q)
    }

    /// The map with `psi` replaced by `psi + eps` (carrier-specific direction).
    pub fn with_perturbed_psi(&self, eps: f64) -> Self {
        let inner = Arc::clone(&self.f);
        Self::new(
            format!("{}+psi*{eps:e}", self.tag),
            self.carrier,
            move |u: &T, v: &T| {
                let (p, q) = inner(u, v)?;
                Ok((p, q.perturbed(eps)))
            },
        )
    }

    /// `sigma o mu`, i.e. `(u, v) -> (psi(u, v), phi(u, v))`.
    pub fn sigma_mu(&self) -> Self {
        let inner = Arc::clone(&self.f);
        Self::new(format!("sigma*{}", self.tag), self.carrier, move |u: &T, v: &T| {
            let (p, q) = inner(u, v)?;
            Ok((q, p))
        })
    }
}

/// Twist by an automorphism: `mu(u, v) = (q(v), q^-1(u))` for an invertible map `q`.
pub fn make_qtwist<T: Carrier>(
    q: impl Fn(&T) -> T + Send + Sync + 'static,
    q_inv: impl Fn(&T) -> T + Send + Sync + 'static,
) -> TwistedMap<T> {
    TwistedMap::new("qtwist", CarrierKind::AutomorphismPair, move |u: &T, v: &T| {
        Ok((q(v), q_inv(u)))
    })
}

/// The automorphism twist on the complex line with `q(z) = z + 1`.
pub fn make_shift_twist() -> TwistedMap<C64> {
    make_qtwist(|z: &C64| z + 1.0, |z: &C64| z - 1.0)
}

/// Guard threshold for scalar denominators.
const POLE_EPS: f64 = 1e-12;

/// Rational map `mu(u, v) = (1 - u + uv, uv / (1 - u + uv))` on the complex line.
pub fn make_scalar_rational() -> TwistedMap<C64> {
    TwistedMap::new("scalar", CarrierKind::ScalarComplex, |&u: &C64, &v: &C64| {
        let w = ONE - u + u * v;
        if w.norm() <= POLE_EPS * (1.0 + (u * v).norm()) {
            return Err(Error::OutsideDomain(format!("1 - u + uv = 0 at u={u}, v={v}")));
        }
        Ok((w, u * v / w))
    })
}

/// Matrix version of the rational map, `mu(u, v) = (1 - u + uv, (1 - u + uv)^-1 uv)` in `Mat_m`.
pub fn make_algebra_map(m: usize) -> TwistedMap<ComplexMatrix> {
    TwistedMap::new(
        "algebra",
        CarrierKind::SquareMatrix(m),
        move |u: &ComplexMatrix, v: &ComplexMatrix| {
            if u.rows() != m || v.rows() != m || !u.is_square() || !v.is_square() {
                return Err(Error::InvalidInput(format!("algebra map expects {m}x{m} matrices")));
            }
            let uv = u * v;
            let w = &(&ComplexMatrix::identity(m) - u) + &uv;
            let lu = Lu::new(&w)?;
            if lu.is_singular(1e-10) {
                return Err(Error::OutsideDomain("1 - u + uv is not invertible".into()));
            }
            let psi = lu.solve(&uv);
            Ok((w, psi))
        },
    )
}

/// Sequence of adjacent transpositions `(i, i+1)`, letters 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidWord {
    n_strands: usize,
    letters: Vec<usize>,
}

impl BraidWord {
    pub fn new(n_strands: usize, letters: Vec<usize>) -> Result<Self> {
        if n_strands == 0 {
            return Err(Error::InvalidInput("braid word needs at least one strand".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&i| i == 0 || i >= n_strands) {
            return Err(Error::InvalidInput(format!(
                "letter {bad} out of range 1..={} for {n_strands} strands",
                n_strands - 1
            )));
        }
        Ok(Self { n_strands, letters })
    }

    pub fn empty(n_strands: usize) -> Self {
        Self {
            n_strands,
            letters: Vec::new(),
        }
    }

    /// A word that rearranges positions so that `new[k] = old[target[k]]`,
    /// built by bubble sort.
    pub fn from_arrangement(target: &[usize]) -> Result<Self> {
        let n = target.len();
        let mut seen = vec![false; n];
        for &t in target {
            if t >= n || std::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidInput(format!("{target:?} is not a permutation")));
            }
        }
        // rank[i] = final position of the element currently at position i
        let mut rank = vec![0; n];
        for (k, &t) in target.iter().enumerate() {
            rank[t] = k;
        }
        let mut letters = Vec::new();
        for pass in 0..n {
            for i in 0..n.saturating_sub(1 + pass) {
                if rank[i] > rank[i + 1] {
                    rank.swap(i, i + 1);
                    letters.push(i + 1);
                }
            }
        }
        Self::new(n.max(1), letters)
    }

    pub fn n_strands(&self) -> usize {
        self.n_strands
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Plain positional action: each letter swaps entries `i-1` and `i`.
    pub fn permute<X: Clone>(&self, items: &[X]) -> Vec<X> {
        let mut out = items.to_vec();
        for &i in &self.letters {
            out.swap(i - 1, i);
        }
        out
    }
}

/// Applies `sigma_i = id^(i-1) x mu x id^(N-i-1)` for each letter, left to right.
pub fn act_braid<T: Carrier>(map: &TwistedMap<T>, word: &BraidWord, tuple: &[T]) -> Result<Vec<T>> {
    if word.n_strands() != tuple.len() {
        return Err(Error::InvalidInput(format!(
            "word acts on {} strands, tuple has {}",
            word.n_strands(),
            tuple.len()
        )));
    }
    let mut out = tuple.to_vec();
    for (pos, &i) in word.letters().iter().enumerate() {
        let (p, q) = map.apply(&out[i - 1], &out[i]).map_err(|e| match e {
            Error::OutsideDomain(msg) => Error::OutsideDomain(format!("letter #{pos} (sigma_{i}): {msg}")),
            other => other,
        })?;
        out[i - 1] = p;
        out[i] = q;
    }
    Ok(out)
}

/// `(phi(u1, phi(u2, ... phi(uN, w))), psi(... psi(psi(w, u1), u2) ..., uN))`.
pub fn nested_invariants<T: Carrier>(map: &TwistedMap<T>, us: &[T], w: &T) -> Result<(T, T)> {
    let mut left = w.clone();
    for u in us.iter().rev() {
        left = map.phi(u, &left)?;
    }
    let mut right = w.clone();
    for u in us {
        right = map.psi(&right, u)?;
    }
    Ok((left, right))
}

pub type Triple<T> = (T, T, T);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub index: usize,
    pub residuals: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedTriple {
    pub index: usize,
    pub reason: String,
}

/// Outcome of a relation check over a batch of sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub map: String,
    pub n_triples: usize,
    pub rejected: usize,
    pub max_residuals: BTreeMap<String, f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tol: f64,
    pub records: Vec<TripleRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub rejections: Vec<RejectedTriple>,
}

impl RelationReport {
    /// Aggregates per-point records; `pass` requires at least one evaluated point.
    pub fn from_records(
        map: &str,
        keys: &[&str],
        mut records: Vec<TripleRecord>,
        mut rejections: Vec<RejectedTriple>,
        tol: f64,
    ) -> Self {
        records.sort_by_key(|r| r.index);
        rejections.sort_by_key(|r| r.index);
        let mut max_residuals: BTreeMap<String, f64> = keys.iter().map(|k| (k.to_string(), 0.0)).collect();
        for r in &records {
            for (k, &v) in &r.residuals {
                let slot = max_residuals.entry(k.clone()).or_insert(0.0);
                // NaN must fail the report
                if v.is_nan() || v > *slot {
                    *slot = if v.is_nan() { f64::INFINITY } else { v };
                }
            }
        }
        let pass = !records.is_empty() && max_residuals.values().all(|&v| v <= tol);
        Self {
            map: map.to_string(),
            n_triples: records.len(),
            rejected: rejections.len(),
            max_residuals,
            pass,
            seed: None,
            tol,
            records,
            rejections,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn max(&self, key: &str) -> f64 {
        self.max_residuals.get(key).copied().unwrap_or(f64::NAN)
    }

    /// Largest residual over all identities.
    pub fn worst(&self) -> f64 {
        self.max_residuals.values().copied().fold(0.0, f64::max)
    }

    /// Combines two reports over disjoint point sets.
    pub fn merge(self, other: RelationReport) -> RelationReport {
        let keys: Vec<String> = self
            .max_residuals
            .keys()
            .chain(other.max_residuals.keys())
            .cloned()
            .collect();
        let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
        let mut records = self.records;
        records.extend(other.records);
        let mut rejections = self.rejections;
        rejections.extend(other.rejections);
        let mut merged = Self::from_records(&self.map, &keys, records, rejections, self.tol);
        merged.seed = self.seed;
        merged
    }
}

fn rel_dist<T: Carrier>(a: &[T], b: &[T], scale: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.distance(y)).fold(0.0, f64::max) / scale
}

fn input_scale<T: Carrier>(t: &Triple<T>) -> f64 {
    1.0 + t.0.magnitude().max(t.1.magnitude()).max(t.2.magnitude())
}

/// Runs `eval` on every sample point in parallel; `OutsideDomain` becomes a rejection.
pub(crate) fn evaluate_batch<I, F>(items: &[I], eval: F) -> (Vec<TripleRecord>, Vec<RejectedTriple>)
where
    I: Sync,
    F: Fn(&I) -> Result<BTreeMap<String, f64>> + Send + Sync,
{
    let outcomes: Vec<(usize, Result<BTreeMap<String, f64>>)> =
        items.par_iter().enumerate().map(|(i, t)| (i, eval(t))).collect();
    let mut records = Vec::new();
    let mut rejections = Vec::new();
    for (index, outcome) in outcomes {
        match outcome {
            Ok(residuals) => records.push(TripleRecord { index, residuals }),
            Err(e) => rejections.push(RejectedTriple {
                index,
                reason: format!("{}: {e}", e.name()),
            }),
        }
    }
    (records, rejections)
}

pub const RELATION_KEYS: [&str; 3] = ["sigma1_sq", "sigma2_sq", "braid"];

/// Residuals of `s1^2 = id`, `s2^2 = id` and `s1 s2 s1 = s2 s1 s2`, each
/// relative to `1 + max input norm`.
pub fn relation_residuals<T: Carrier>(map: &TwistedMap<T>, t: &Triple<T>) -> Result<BTreeMap<String, f64>> {
    let input = [t.0.clone(), t.1.clone(), t.2.clone()];
    let scale = input_scale(t);
    let s = |word: &[usize]| {
        act_braid(
            map,
            &BraidWord {
                n_strands: 3,
                letters: word.to_vec(),
            },
            &input,
        )
    };
    let s11 = s(&[1, 1])?;
    let s22 = s(&[2, 2])?;
    let lhs = s(&[1, 2, 1])?;
    let rhs = s(&[2, 1, 2])?;
    Ok(BTreeMap::from([
        ("sigma1_sq".to_string(), rel_dist(&s11, &input, scale)),
        ("sigma2_sq".to_string(), rel_dist(&s22, &input, scale)),
        ("braid".to_string(), rel_dist(&lhs, &rhs, scale)),
    ]))
}

pub fn check_relations<T: Carrier>(map: &TwistedMap<T>, triples: &[Triple<T>], tol: f64) -> RelationReport {
    let (records, rejections) = evaluate_batch(triples, |t| relation_residuals(map, t));
    RelationReport::from_records(map.tag(), &RELATION_KEYS, records, rejections, tol)
}

pub const FUNCTIONAL_KEYS: [&str; 5] = [
    "involution_phi",
    "involution_psi",
    "composition_phi",
    "composition_mixed",
    "composition_psi",
];

/// Residuals of the functional equations equivalent to the relations:
///
/// ```text
/// phi(phi(u,v), psi(u,v)) = u          psi(phi(u,v), psi(u,v)) = v
/// phi(u, phi(v,w)) = phi(phi(u,v), phi(psi(u,v), w))
/// phi(psi(u, phi(v,w)), psi(v,w)) = psi(phi(u,v), phi(psi(u,v), w))
/// psi(psi(u,v), w) = psi(psi(u, phi(v,w)), psi(v,w))
/// ```
pub fn functional_residuals<T: Carrier>(map: &TwistedMap<T>, t: &Triple<T>) -> Result<BTreeMap<String, f64>> {
    let (u, v, w) = t;
    let scale = input_scale(t);
    let (p_uv, q_uv) = map.apply(u, v)?;
    let (back_u, back_v) = map.apply(&p_uv, &q_uv)?;
    let (p_vw, q_vw) = map.apply(v, w)?;
    let (p_u_pvw, q_u_pvw) = map.apply(u, &p_vw)?;
    let (p_quv_w, q_quv_w) = map.apply(&q_uv, w)?;
    let (p_left, q_left) = map.apply(&p_uv, &p_quv_w)?;
    let (p_right, q_right) = map.apply(&q_u_pvw, &q_vw)?;
    let d = |a: &T, b: &T| a.distance(b) / scale;
    Ok(BTreeMap::from([
        ("involution_phi".to_string(), d(&back_u, u)),
        ("involution_psi".to_string(), d(&back_v, v)),
        ("composition_phi".to_string(), d(&p_u_pvw, &p_left)),
        ("composition_mixed".to_string(), d(&p_right, &q_left)),
        ("composition_psi".to_string(), d(&q_quv_w, &q_right)),
    ]))
}

pub fn check_functional_equations<T: Carrier>(map: &TwistedMap<T>, triples: &[Triple<T>], tol: f64) -> RelationReport {
    let (records, rejections) = evaluate_batch(triples, |t| functional_residuals(map, t));
    RelationReport::from_records(map.tag(), &FUNCTIONAL_KEYS, records, rejections, tol)
}

/// Residual of `R12 R13 R23 = R23 R13 R12` for the set map `R = sigma o mu`,
/// composing right to left.
pub fn set_ybe_residual<T: Carrier>(map: &TwistedMap<T>, t: &Triple<T>) -> Result<BTreeMap<String, f64>> {
    let r = map.sigma_mu();
    let scale = input_scale(t);
    let on = |state: &mut [T; 3], i: usize, j: usize| -> Result<()> {
        let (a, b) = r.apply(&state[i], &state[j])?;
        state[i] = a;
        state[j] = b;
        Ok(())
    };
    let mut lhs = [t.0.clone(), t.1.clone(), t.2.clone()];
    on(&mut lhs, 1, 2)?;
    on(&mut lhs, 0, 2)?;
    on(&mut lhs, 0, 1)?;
    let mut rhs = [t.0.clone(), t.1.clone(), t.2.clone()];
    on(&mut rhs, 0, 1)?;
    on(&mut rhs, 0, 2)?;
    on(&mut rhs, 1, 2)?;
    Ok(BTreeMap::from([("set_ybe".to_string(), rel_dist(&lhs, &rhs, scale))]))
}

pub fn check_set_ybe<T: Carrier>(map: &TwistedMap<T>, triples: &[Triple<T>], tol: f64) -> RelationReport {
    let (records, rejections) = evaluate_batch(triples, |t| set_ybe_residual(map, t));
    RelationReport::from_records(map.tag(), &["set_ybe"], records, rejections, tol)
}
