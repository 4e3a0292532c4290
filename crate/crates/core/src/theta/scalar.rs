//! Scalar theta functions of degree `n`: the basis `theta_alpha`,
//! `alpha in Z/nZ`, of the space of entire functions with
//! `theta(z + 1) = theta(z)` and `theta(z + tau) = e^(-2 pi i (n z - c)) theta(z)`.
//!
//! Realized as `theta_alpha(z) = sum_(j = alpha mod n) b_j e^(2 pi i j z)` with
//! `b_j = exp(pi i tau (j^2 - j n) / n - 2 pi i j c / n)`, which gives
//! `theta_alpha(z + 1/n) = e^(2 pi i alpha / n) theta_alpha(z)` and
//! `theta_alpha(z + tau/n) = e^(-2 pi i (z - (n-1) tau / 2n - c/n)) theta_(alpha+1)(z)`.

use std::f64::consts::PI;

use super::lattice::Lattice;
use crate::linalg::matrix::{C64, ZERO};

const I: C64 = C64::new(0.0, 1.0);

/// Terms farther than this many standard widths from the peak are dropped;
/// `exp(-40)` is far below double precision.
const TAIL_EXPONENT: f64 = 40.0;

fn index_range(n: usize, c: C64, lattice: &Lattice, z: C64) -> (i64, i64) {
    let t = lattice.tau().im;
    let nf = n as f64;
    let peak = nf / 2.0 + (c.im - nf * z.im) / t;
    let half = (TAIL_EXPONENT * nf / (PI * t)).sqrt().ceil() + 1.0;
    ((peak - half).floor() as i64, (peak + half).ceil() as i64)
}

fn term_exponent(n: usize, c: C64, tau: C64, j: i64, z: C64) -> C64 {
    let nf = n as f64;
    let jf = j as f64;
    I * PI * tau * (jf * jf - jf * nf) / nf - 2.0 * PI * I * jf * c / nf + 2.0 * PI * I * jf * z
}

/// All basis values `theta_0(z), ..., theta_(n-1)(z)`.
pub fn theta_basis_all(n: usize, c: C64, lattice: &Lattice, z: C64) -> Vec<C64> {
    let mut out = vec![ZERO; n];
    let (lo, hi) = index_range(n, c, lattice, z);
    for j in lo..=hi {
        let alpha = j.rem_euclid(n as i64) as usize;
        out[alpha] += term_exponent(n, c, lattice.tau(), j, z).exp();
    }
    out
}

/// Basis values together with their `z`-derivatives.
pub fn theta_basis_all_with_derivative(n: usize, c: C64, lattice: &Lattice, z: C64) -> (Vec<C64>, Vec<C64>) {
    let mut vals = vec![ZERO; n];
    let mut ders = vec![ZERO; n];
    let (lo, hi) = index_range(n, c, lattice, z);
    for j in lo..=hi {
        let alpha = j.rem_euclid(n as i64) as usize;
        let t = term_exponent(n, c, lattice.tau(), j, z).exp();
        vals[alpha] += t;
        ders[alpha] += 2.0 * PI * I * j as f64 * t;
    }
    (vals, ders)
}

/// `theta_alpha(z)` for the degree-`n` basis with parameter `c`.
pub fn theta_basis_eval(n: usize, c: C64, lattice: &Lattice, alpha: usize, z: C64) -> C64 {
    let (lo, hi) = index_range(n, c, lattice, z);
    let r = (alpha % n) as i64;
    let first = lo + (r - lo).rem_euclid(n as i64);
    (first..=hi)
        .step_by(n)
        .map(|j| term_exponent(n, c, lattice.tau(), j, z).exp())
        .sum()
}

/// The factor in `theta_alpha(z + tau/n) = factor * theta_(alpha+1)(z)`.
pub fn index_shift_factor(n: usize, c: C64, lattice: &Lattice, z: C64) -> C64 {
    let nf = n as f64;
    (-2.0 * PI * I * (z - (nf - 1.0) / (2.0 * nf) * lattice.tau() - c / nf)).exp()
}
