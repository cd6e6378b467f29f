//! Localized orthogonal decomposition multiscale solver on top of a symmetric
//! interior penalty discontinuous Galerkin discretization.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

pub mod coefficient;
pub mod dg;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod multiscale;
pub mod ordering;
pub mod projection;
pub mod qoi;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Coefficient = coefficient::Coefficient<f64>;
pub type DgFunction = dg::DgFunction<f64>;
pub type SipOperator = dg::SipOperator<f64>;
pub type CsrMatrix = linalg::CsrMatrix<f64>;
pub type MsBasis = multiscale::MsBasis<f64>;
pub type CompressedBasis = multiscale::CompressedBasis<f64>;
pub type Corrector = multiscale::Corrector<f64>;
pub type CoarseFineMap = projection::CoarseFineMap<f64>;
