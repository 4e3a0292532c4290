//! Seeded random instances for verification campaigns.
//!
//! Every trial draws from its own ChaCha stream, selected by the trial
//! index, so results do not depend on evaluation order or thread count.
//! Rejected draws are replaced from further streams of the same trial.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator handed to every draw closure.
pub type TrialRng = ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::matrix::{ComplexMatrix, C64};
use crate::theta::{mtheta_basis, Lattice, ThetaSection};
use crate::transpositions::Triple;

/// Replacement draws allowed per trial before the campaign gives up.
pub const MAX_ATTEMPTS: u64 = 64;

/// Generator for attempt `attempt` of trial `trial`.
pub fn trial_rng(seed: u64, trial: u64, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial * MAX_ATTEMPTS + attempt);
    rng
}

/// Uniform in the square `[-r, r] + [-r, r] i`.
pub fn random_complex(rng: &mut impl Rng, r: f64) -> C64 {
    C64::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r))
}

/// `m x m` matrix with entries uniform in the unit square.
pub fn random_matrix(rng: &mut impl Rng, m: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(m, m, |_, _| random_complex(rng, 1.0))
}

/// A random (normalized) element of `MTheta_(n,m,c)`.
pub fn random_section(rng: &mut impl Rng, n: usize, m: usize, c: C64, lattice: &Lattice) -> Result<ThetaSection> {
    let basis = mtheta_basis(n, m, c, lattice)?;
    let x: Vec<C64> = (0..basis.len()).map(|_| random_complex(rng, 1.0)).collect();
    Ok(ThetaSection::combination(&basis, &x)?.normalized())
}

/// A random degree-one section with a random parameter `c`.
pub fn random_degree_one(rng: &mut impl Rng, m: usize, lattice: &Lattice) -> Result<ThetaSection> {
    let c = C64::new(rng.gen_range(0.0..1.0), 0.0) + lattice.tau() * rng.gen_range(0.0..1.0) / m as f64;
    random_section(rng, 1, m, c, lattice)
}

/// One accepted draw per trial, in trial order. `draw` builds an instance
/// from a generator; `accept` may reject it, in which case the next stream
/// of that trial is used.
pub fn sample<X, D, A>(seed: u64, trials: usize, draw: D, accept: A) -> Result<Vec<X>>
where
    X: Send,
    D: Fn(&mut ChaCha8Rng) -> Result<X> + Sync,
    A: Fn(&X) -> bool + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            for attempt in 0..MAX_ATTEMPTS {
                let mut rng = trial_rng(seed, trial, attempt);
                if let Ok(x) = draw(&mut rng) {
                    if accept(&x) {
                        return Ok(x);
                    }
                }
            }
            Err(Error::DegenerateInstance(format!(
                "trial {trial}: no acceptable instance in {MAX_ATTEMPTS} draws"
            )))
        })
        .collect()
}

/// Triples of independent draws.
pub fn sample_triples<T, D, A>(seed: u64, trials: usize, draw: D, accept: A) -> Result<Vec<Triple<T>>>
where
    T: Send,
    D: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
    A: Fn(&Triple<T>) -> bool + Sync,
{
    sample(seed, trials, |rng| Ok((draw(rng)?, draw(rng)?, draw(rng)?)), accept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a = random_complex(&mut trial_rng(7, 3, 0), 1.0);
        let b = random_complex(&mut trial_rng(7, 3, 0), 1.0);
        let c = random_complex(&mut trial_rng(7, 4, 0), 1.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejection_redraws_within_the_trial() {
        let xs = sample(1, 20, |rng| Ok(random_complex(rng, 1.0)), |z: &C64| z.re > 0.0).unwrap();
        assert_eq!(xs.len(), 20);
        assert!(xs.iter().all(|z| z.re > 0.0));
        let again = sample(1, 20, |rng| Ok(random_complex(rng, 1.0)), |z: &C64| z.re > 0.0).unwrap();
        assert_eq!(xs, again);
    }

    #[test]
    fn impossible_acceptance_fails() {
        let r = sample(1, 2, |rng| Ok(random_complex(rng, 1.0)), |_: &C64| false);
        assert_eq!(r.unwrap_err().name(), "DegenerateInstance");
    }
}
