//! Sparse and small dense kernels shared by the discretization modules.

mod cg;
mod csr;
mod dense;
mod factor;
mod ldl;
mod multifrontal;
mod saddle;

pub use cg::{cg_solve, BlockJacobi, CgOutcome, IdentityPreconditioner, Preconditioner};
pub use csr::{CsrMatrix, TripletBuilder};
pub use dense::{dense_cholesky_solve, dense_spd_solve_many, svd_small, SmallSvd};
pub use factor::SymmetricFactor;
pub use ldl::SparseLdl;
pub use multifrontal::{EliminationPlan, MultifrontalLdl, NO_PARENT};
pub use saddle::{solve_saddle, KktFactor, SaddleSolution, SaddleSystem, SchurComplementSolver};
