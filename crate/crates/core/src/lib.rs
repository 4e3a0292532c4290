//! Set-theoretical solutions of the Yang-Baxter relation ("twisted
//! transpositions") built from refactorizations of monic matrix polynomials
//! and matrix theta functions, together with numerical verifiers for every
//! defining relation.

pub mod campaign;
pub mod error;
pub mod linalg;
pub mod polyfactor;
pub mod rmatrix;
pub mod theta;
pub mod tol;
pub mod transpositions;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenPair, OrderedSpectrum, C64};
pub use polyfactor::{Factorization, MatrixPolynomial, SpectrumPartition};
pub use rmatrix::TwistedRMatrix;
pub use theta::{Lattice, ThetaFactor, ThetaSection, ZeroSet};
pub use transpositions::{BraidWord, Carrier, CarrierKind, RelationReport, TwistedMap};
