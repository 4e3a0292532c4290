//! Matrix theta functions: the spaces `MTheta_(n,m,c)`, zeros of determinants,
//! interpolation, factorization and the induced twisted transposition.

pub mod factor;
pub mod interp;
pub mod lattice;
pub mod scalar;
pub mod space;
pub mod zeros;

pub use factor::{mu_theta, theta_local_action, theta_refactor, theta_refactor_with_c, ThetaFactor};
pub use interp::{interpolate, interpolate_with_c, multiply};
pub use lattice::{HeisenbergPair, Lattice};
pub use scalar::theta_basis_eval;
pub use space::{mtheta_basis, mtheta_eval, ThetaSection};
pub use zeros::{det_zeros, ZeroSet};
