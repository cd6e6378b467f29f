//! Common front end for the two sparse symmetric factorizations.

use super::{CsrMatrix, EliminationPlan, MultifrontalLdl, SparseLdl};
use crate::error::Result;
use crate::scalar::Real;

/// Simplicial factorization without a plan, multifrontal with one.
#[derive(Debug, Clone)]
pub enum SymmetricFactor<S: Real> {
    Simplicial(SparseLdl<S>),
    Multifrontal(MultifrontalLdl<S>),
}

impl<S: Real> SymmetricFactor<S> {
    pub fn factor(a: &CsrMatrix<S>, plan: Option<&EliminationPlan>) -> Result<Self> {
        Ok(match plan {
            Some(p) => Self::Multifrontal(MultifrontalLdl::factor(a, p)?),
            None => Self::Simplicial(SparseLdl::factor(a, None)?),
        })
    }

    pub fn negative_pivots(&self) -> usize {
        match self {
            Self::Simplicial(f) => f.negative_pivots(),
            Self::Multifrontal(f) => f.negative_pivots(),
        }
    }

    pub fn factor_nnz(&self) -> usize {
        match self {
            Self::Simplicial(f) => f.factor_nnz(),
            Self::Multifrontal(f) => f.factor_nnz(),
        }
    }

    pub fn solve_in_place(&self, b: &mut [S]) {
        match self {
            Self::Simplicial(f) => f.solve_in_place(b),
            Self::Multifrontal(f) => f.solve_in_place(b),
        }
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `D^(1/2) L^T P x`; its squared norm is `x^T A x`.
    pub fn half_energy(&self, x: &[S]) -> Vec<S> {
        match self {
            Self::Simplicial(f) => f.half_energy(x),
            Self::Multifrontal(f) => f.half_energy(x),
        }
    }
}
