use nalgebra::DMatrix;

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm2, Real};

pub trait Preconditioner<S>: Sync {
    /// `z = M^{-1} r`
    fn apply(&self, r: &[S], z: &mut [S]);
}

pub struct IdentityPreconditioner;

impl<S: Real> Preconditioner<S> for IdentityPreconditioner {
    fn apply(&self, r: &[S], z: &mut [S]) {
        z.copy_from_slice(r);
    }
}

/// Block Jacobi with dense inverted diagonal blocks of a fixed size.
pub struct BlockJacobi<S> {
    block: usize,
    inverses: Vec<DMatrix<S>>,
}

impl<S: Real> BlockJacobi<S> {
    pub fn new(a: &CsrMatrix<S>, block: usize) -> Result<Self> {
        if a.nrows() % block != 0 {
            return Err(Error::Config(format!(
                "matrix size {} is not a multiple of the block size {block}",
                a.nrows()
            )));
        }
        let inverses = a
            .diagonal_blocks(block)
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                b.try_inverse()
                    .ok_or_else(|| Error::Numerical(format!("singular diagonal block {i}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { block, inverses })
    }
}

impl<S: Real> Preconditioner<S> for BlockJacobi<S> {
    fn apply(&self, r: &[S], z: &mut [S]) {
        let bs = self.block;
        for (k, inv) in self.inverses.iter().enumerate() {
            let rb = &r[k * bs..(k + 1) * bs];
            for a in 0..bs {
                let mut acc = S::zero();
                for b in 0..bs {
                    acc += inv[(a, b)] * rb[b];
                }
                z[k * bs + a] = acc;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome<S> {
    pub x: Vec<S>,
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`.
    pub residual: f64,
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Stops once the true-recurrence residual satisfies `||r|| <= rtol ||b||`.
pub fn cg_solve<S: Real>(
    a: &CsrMatrix<S>,
    b: &[S],
    precond: &dyn Preconditioner<S>,
    rtol: f64,
    maxit: usize,
) -> Result<CgOutcome<S>> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![S::zero(); n];
    if bnorm == S::zero() {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let tol = S::lit(rtol) * bnorm;
    let mut r = b.to_vec();
    let mut z = vec![S::zero(); n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![S::zero(); n];
    for it in 1..=maxit {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > S::zero()) {
            return Err(Error::Numerical(format!(
                "matrix is not positive definite (p^T A p = {pap:e})"
            )));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rnorm = norm2(&r);
        if rnorm <= tol {
            // Confirm against the true residual; recurrences drift on long runs.
            a.mul_vec_into(&x, &mut ap);
            let true_res: Vec<S> = b.iter().zip(&ap).map(|(bi, ai)| *bi - *ai).collect();
            let tnorm = norm2(&true_res);
            if tnorm <= tol {
                return Ok(CgOutcome {
                    x,
                    iterations: it,
                    residual: (tnorm / bnorm).to_f64_lossy(),
                });
            }
            r = true_res;
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = *zi + beta * *pi;
        }
    }
    let res = a.mul_vec(&x);
    let rnorm = norm2(
        &b.iter()
            .zip(&res)
            .map(|(bi, ai)| *bi - *ai)
            .collect::<Vec<_>>(),
    );
    Err(Error::NotConverged {
        iterations: maxit,
        residual: (rnorm / bnorm).to_f64_lossy(),
    })
}
