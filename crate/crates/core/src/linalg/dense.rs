use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `M = U diag(sigma) V^T` with `sigma` nonincreasing.
#[derive(Debug, Clone)]
pub struct SmallSvd<S: Real> {
    pub u: DMatrix<S>,
    pub singular_values: Vec<S>,
    pub v: DMatrix<S>,
}

/// Thin SVD of a small dense matrix, singular values sorted nonincreasing.
pub fn svd_small<S: Real>(m: &DMatrix<S>) -> Result<SmallSvd<S>> {
    let svd = m.clone().svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return V".into()))?;
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| {
        sv[b]
            .partial_cmp(&sv[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let k = sv.len();
    let mut uu = DMatrix::zeros(u.nrows(), k);
    let mut vv = DMatrix::zeros(vt.ncols(), k);
    let mut s = Vec::with_capacity(k);
    for (new, &old) in order.iter().enumerate() {
        uu.column_mut(new).copy_from(&u.column(old));
        vv.column_mut(new).copy_from(&vt.row(old).transpose());
        s.push(sv[old]);
    }
    Ok(SmallSvd {
        u: uu,
        singular_values: s,
        v: vv,
    })
}

pub fn dense_cholesky_solve<S: Real>(a: &DMatrix<S>, b: &[S]) -> Result<Vec<S>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    Ok(chol
        .solve(&DVector::from_column_slice(b))
        .iter()
        .copied()
        .collect())
}

/// Solves `A X = B` for SPD `A`, columns of `B` as separate right-hand sides.
pub fn dense_spd_solve_many<S: Real>(a: &DMatrix<S>, b: &DMatrix<S>) -> Result<DMatrix<S>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}
