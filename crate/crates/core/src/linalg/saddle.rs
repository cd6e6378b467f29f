//! Equality-constrained quadratic minimization: `K x + C^T mu = b`, `C x = c`.

use nalgebra::{DMatrix, DVector};

use super::{CsrMatrix, EliminationPlan, SymmetricFactor, TripletBuilder};
use crate::error::{Error, Result};
use crate::scalar::{norm2, Real};

/// Blocks of the saddle point matrix `[K C^T; C 0]`.
#[derive(Debug, Clone)]
pub struct SaddleSystem<S> {
    /// `n x n`, symmetric and positive definite on the kernel of `C`.
    pub k: CsrMatrix<S>,
    /// `m x n`, full row rank.
    pub c: CsrMatrix<S>,
}

#[derive(Debug, Clone)]
pub struct SaddleSolution<S> {
    pub x: Vec<S>,
    pub multipliers: Vec<S>,
    /// Relative residual of the full KKT system.
    pub residual: f64,
}

const REFINEMENT_STEPS: usize = 2;

/// Direct factorization of an equilibrated KKT matrix, reusable for many right-hand sides.
pub struct KktFactor<S: Real> {
    n: usize,
    m: usize,
    row_scale: Vec<S>,
    kkt: CsrMatrix<S>,
    ldl: SymmetricFactor<S>,
}

impl<S: Real> KktFactor<S> {
    /// `plan` orders the `n + m` KKT unknowns (multipliers numbered `n..n + m`).
    /// Without a plan a simplicial factorization in the natural order is used,
    /// which places all primal unknowns before the multipliers.
    pub fn new(sys: &SaddleSystem<S>, plan: Option<&EliminationPlan>) -> Result<Self> {
        let n = sys.k.nrows();
        let m = sys.c.nrows();
        if sys.k.ncols() != n || sys.c.ncols() != n {
            return Err(Error::Config(
                "saddle blocks have inconsistent shapes".into(),
            ));
        }
        let kscale = sys.k.max_abs().max(S::default_epsilon());
        let row_scale: Vec<S> = (0..m)
            .map(|r| {
                let (_, vals) = sys.c.row(r);
                let big = vals.iter().fold(S::zero(), |a, v| a.max(v.abs()));
                if big > S::zero() {
                    kscale / big
                } else {
                    S::one()
                }
            })
            .collect();
        let mut t = TripletBuilder::with_capacity(n + m, n + m, sys.k.nnz() + 2 * sys.c.nnz());
        for i in 0..n {
            let (cols, vals) = sys.k.row(i);
            for (c, v) in cols.iter().zip(vals) {
                t.push(i, *c, *v);
            }
        }
        for r in 0..m {
            let (cols, vals) = sys.c.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let v = *v * row_scale[r];
                t.push(n + r, *c, v);
                t.push(*c, n + r, v);
            }
        }
        let kkt = t.build();
        let ldl = SymmetricFactor::factor(&kkt, plan).map_err(|e| match e {
            Error::Numerical(msg) => Error::Numerical(format!(
                "saddle factorization failed ({msg}); constraints may be rank deficient"
            )),
            other => other,
        })?;
        if ldl.negative_pivots() != m {
            return Err(Error::Numerical(format!(
                "KKT inertia has {} negative pivots, expected {m}; constraints are rank deficient or K is indefinite on ker C",
                ldl.negative_pivots()
            )));
        }
        Ok(Self {
            n,
            m,
            row_scale,
            kkt,
            ldl,
        })
    }

    pub fn factor_nnz(&self) -> usize {
        self.ldl.factor_nnz()
    }

    /// Solves with up to two steps of iterative refinement on the full system.
    pub fn solve(&self, b: &[S], c: &[S]) -> SaddleSolution<S> {
        let (n, m) = (self.n, self.m);
        let mut rhs = Vec::with_capacity(n + m);
        rhs.extend_from_slice(b);
        rhs.extend(c.iter().zip(&self.row_scale).map(|(ci, s)| *ci * *s));
        let rnorm = norm2(&rhs);
        let mut z = self.ldl.solve(&rhs);
        let target = rnorm * S::default_epsilon() * S::lit(16.0);
        let mut res_norm;
        let mut step = 0;
        loop {
            let kz = self.kkt.mul_vec(&z);
            let res: Vec<S> = rhs.iter().zip(&kz).map(|(r, k)| *r - *k).collect();
            res_norm = norm2(&res);
            if res_norm <= target || step == REFINEMENT_STEPS {
                break;
            }
            let dz = self.ldl.solve(&res);
            for (zi, di) in z.iter_mut().zip(&dz) {
                *zi += *di;
            }
            step += 1;
        }
        let multipliers = z[n..]
            .iter()
            .zip(&self.row_scale)
            .map(|(mu, s)| *mu * *s)
            .collect();
        z.truncate(n);
        let residual = if rnorm > S::zero() {
            (res_norm / rnorm).to_f64_lossy()
        } else {
            0.0
        };
        SaddleSolution {
            x: z,
            multipliers,
            residual,
        }
    }
}

/// One-shot solve of a saddle system by sparse `L D L^T` of the KKT matrix.
pub fn solve_saddle<S: Real>(
    sys: &SaddleSystem<S>,
    b: &[S],
    c: &[S],
    plan: Option<&EliminationPlan>,
) -> Result<SaddleSolution<S>> {
    Ok(KktFactor::new(sys, plan)?.solve(b, c))
}

/// Range-space (Schur complement) solver: factors `K` once and the dense
/// `m x m` complement `C K^{-1} C^T`, then serves any number of right-hand
/// sides. Requires `K` positive definite on the whole space.
pub struct SchurComplementSolver<S: Real> {
    k: SymmetricFactor<S>,
    c: CsrMatrix<S>,
    /// `K^{-1} C^T`, column-major `n x m`.
    kinv_ct: DMatrix<S>,
    schur: nalgebra::Cholesky<S, nalgebra::Dyn>,
}

impl<S: Real> SchurComplementSolver<S> {
    pub fn new(sys: &SaddleSystem<S>, k_plan: Option<&EliminationPlan>) -> Result<Self> {
        let n = sys.k.nrows();
        let m = sys.c.nrows();
        let k = SymmetricFactor::factor(&sys.k, k_plan)?;
        if k.negative_pivots() > 0 {
            return Err(Error::Numerical("K is not positive definite".into()));
        }
        let ct = sys.c.transpose();
        let mut kinv_ct = DMatrix::zeros(n, m);
        let dense_ct = ct.to_dense();
        for j in 0..m {
            let col: Vec<S> = dense_ct.column(j).iter().copied().collect();
            let sol = k.solve(&col);
            kinv_ct.column_mut(j).copy_from_slice(&sol);
        }
        let mut schur = DMatrix::zeros(m, m);
        for j in 0..m {
            let col: Vec<S> = kinv_ct.column(j).iter().copied().collect();
            let ccol = sys.c.mul_vec(&col);
            schur.column_mut(j).copy_from_slice(&ccol);
        }
        let schur = (schur.clone() + schur.transpose()) * S::lit(0.5);
        let schur = schur.cholesky().ok_or_else(|| {
            Error::Numerical(
                "Schur complement is not positive definite; constraints are rank deficient".into(),
            )
        })?;
        let diag = schur.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((S::max_value().unwrap(), S::zero()), |(lo, hi), &d| {
                (lo.min(d * d), hi.max(d * d))
            });
        if m > 0 && lo <= hi * S::default_epsilon() * S::lit(1e3 * m as f64) {
            return Err(Error::Numerical(
                "Schur complement is numerically singular; constraints are rank deficient".into(),
            ));
        }
        Ok(Self {
            k,
            c: sys.c.clone(),
            kinv_ct,
            schur,
        })
    }

    pub fn solve(&self, b: &[S], c: &[S]) -> SaddleSolution<S> {
        let x0 = self.k.solve(b);
        let cx0 = self.c.mul_vec(&x0);
        let rhs = DVector::from_iterator(cx0.len(), cx0.iter().zip(c).map(|(a, b)| *a - *b));
        let mu = self.schur.solve(&rhs);
        let corr = &self.kinv_ct * &mu;
        let x: Vec<S> = x0.iter().zip(corr.iter()).map(|(a, b)| *a - *b).collect();
        SaddleSolution {
            x,
            multipliers: mu.iter().copied().collect(),
            residual: 0.0,
        }
    }
}
