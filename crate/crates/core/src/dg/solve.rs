//! Fine-scale reference solve.

use super::{assemble_sip, DgFunction, PenaltyRule, SipOperator};
use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::linalg::{cg_solve, BlockJacobi, SymmetricFactor};
use crate::mesh::Mesh;
use crate::ordering::element_plan;
use crate::scalar::{norm2, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rtol: f64,
    pub max_iterations: usize,
    /// Meshes up to this level are solved by dense Cholesky.
    pub dense_max_level: u32,
    /// Sparse direct factorization instead of CG above `dense_max_level`.
    pub direct: bool,
    /// Iterative refinement steps with a compensated residual.
    pub refinement_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            max_iterations: 50_000,
            dense_max_level: 3,
            direct: false,
            refinement_steps: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution<S> {
    pub u: DgFunction<S>,
    /// CG iterations summed over refinement steps; zero for the direct paths.
    pub iterations: usize,
    /// Relative residual `||M u - F|| / ||F||`.
    pub residual: f64,
}

enum Inner<S: Real> {
    Dense(nalgebra::Cholesky<S, nalgebra::Dyn>),
    Sparse(SymmetricFactor<S>),
    Cg(BlockJacobi<S>),
}

/// Solves `M u = F` for an already assembled operator.
pub fn solve_with_operator<S: Real>(
    mesh: &Mesh,
    op: &SipOperator<S>,
    load: &[S],
    opts: &SolverOptions,
) -> Result<ReferenceSolution<S>> {
    let n = op.matrix.nrows();
    if load.len() != n || op.level != mesh.level() {
        return Err(Error::Domain(format!(
            "load of length {} for an operator of size {n}",
            load.len()
        )));
    }
    let bnorm = norm2(load);
    if bnorm == S::zero() {
        return Ok(ReferenceSolution {
            u: DgFunction::zeros(mesh),
            iterations: 0,
            residual: 0.0,
        });
    }
    let inner = if mesh.level() <= opts.dense_max_level {
        Inner::Dense(
            op.matrix
                .to_dense()
                .cholesky()
                .ok_or_else(|| Error::Numerical("operator is not positive definite".into()))?,
        )
    } else if opts.direct {
        let all: Vec<usize> = (0..mesh.num_elements()).collect();
        Inner::Sparse(SymmetricFactor::factor(
            &op.matrix,
            Some(&element_plan(mesh, &all)),
        )?)
    } else {
        Inner::Cg(BlockJacobi::new(&op.matrix, 4)?)
    };
    let mut iterations = 0;
    let mut apply = |rhs: &[S]| -> Result<Vec<S>> {
        Ok(match &inner {
            Inner::Dense(c) => c
                .solve(&nalgebra::DVector::from_column_slice(rhs))
                .as_slice()
                .to_vec(),
            Inner::Sparse(f) => f.solve(rhs),
            Inner::Cg(pc) => {
                let out = cg_solve(&op.matrix, rhs, pc, opts.rtol, opts.max_iterations)?;
                iterations += out.iterations;
                out.x
            }
        })
    };
    let mut x = apply(load)?;
    let mut r = op.matrix.residual(&x, load);
    for _ in 0..opts.refinement_steps {
        let dx = apply(&r)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += *d;
        }
        r = op.matrix.residual(&x, load);
    }
    let residual = (norm2(&r) / bnorm).to_f64_lossy();
    Ok(ReferenceSolution {
        u: DgFunction::from_coeffs(mesh, x)?,
        iterations,
        residual,
    })
}

/// Assembles the SIP operator on `mesh` and solves for the load vector `load`.
pub fn solve_reference<S: Real>(
    mesh: &Mesh,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    load: &[S],
    opts: &SolverOptions,
) -> Result<ReferenceSolution<S>> {
    let op = assemble_sip(mesh, coef, pen)?;
    solve_with_operator(mesh, &op, load, opts)
}
