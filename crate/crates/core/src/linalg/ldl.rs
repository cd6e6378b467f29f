//! Simplicial sparse `L D L^T` factorization (up-looking, elimination-tree based).
//!
//! No pivoting is performed: the factorization exists for symmetric positive
//! definite matrices under any ordering, and for saddle point matrices
//! `[K C^T; C 0]` whenever each multiplier is ordered after enough of the
//! unknowns it constrains for its Schur complement pivot to be nonzero.

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const NO_PARENT: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SparseLdl<S> {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    lx: Vec<S>,
    d: Vec<S>,
}

impl<S: Real> SparseLdl<S> {
    /// Factors the symmetric matrix `a` (both triangles stored) in the order
    /// given by `perm` (`perm[new] = old`, identity if `None`).
    pub fn factor(a: &CsrMatrix<S>, perm: Option<Vec<usize>>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Config("LDL^T needs a square matrix".into()));
        }
        let perm = perm.unwrap_or_else(|| (0..n).collect());
        if perm.len() != n {
            return Err(Error::Config("ordering has the wrong length".into()));
        }
        let mut pinv = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || pinv[old] != usize::MAX {
                return Err(Error::Config("ordering is not a permutation".into()));
            }
            pinv[old] = new;
        }

        // Upper triangle of P A P^T by columns: column k lists rows i <= k.
        let mut up_ptr = vec![0usize; n + 1];
        let mut up_idx = Vec::with_capacity(a.nnz() / 2 + n);
        let mut up_val = Vec::with_capacity(a.nnz() / 2 + n);
        for k in 0..n {
            let (cols, vals) = a.row(perm[k]);
            for (c, v) in cols.iter().zip(vals) {
                let i = pinv[*c];
                if i <= k {
                    up_idx.push(i);
                    up_val.push(*v);
                }
            }
            up_ptr[k + 1] = up_idx.len();
        }

        // Symbolic: elimination tree and column counts.
        let mut parent = vec![NO_PARENT; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &i0 in &up_idx[up_ptr[k]..up_ptr[k + 1]] {
                let mut i = i0;
                while flag[i] != k {
                    if parent[i] == NO_PARENT {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + lnz[k];
        }
        let total = col_ptr[n];

        // Numeric.
        let mut row_idx = vec![0usize; total];
        let mut lx = vec![S::zero(); total];
        let mut d = vec![S::zero(); n];
        let mut y = vec![S::zero(); n];
        let mut pattern = vec![0usize; n];
        let mut filled = vec![0usize; n];
        flag.iter_mut().for_each(|f| *f = usize::MAX);
        let scale = a.max_abs();
        let tiny = scale * S::default_epsilon() * S::lit(1e-6);
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in up_ptr[k]..up_ptr[k + 1] {
                let mut i = up_idx[p];
                y[i] += up_val[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let mut dk = y[k];
            y[k] = S::zero();
            while top < n {
                let i = pattern[top];
                top += 1;
                let yi = y[i];
                y[i] = S::zero();
                let start = col_ptr[i];
                let end = start + filled[i];
                for p in start..end {
                    y[row_idx[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                dk -= l_ki * yi;
                row_idx[end] = k;
                lx[end] = l_ki;
                filled[i] += 1;
            }
            if !(dk.abs() > tiny) || !dk.is_finite() {
                return Err(Error::Numerical(format!(
                    "zero pivot at position {k} (original index {}); matrix is singular or rank deficient",
                    perm[k]
                )));
            }
            d[k] = dk;
        }
        Ok(Self {
            n,
            perm,
            col_ptr,
            row_idx,
            lx,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    /// Pivots of `D`, in elimination order.
    pub fn pivots(&self) -> &[S] {
        &self.d
    }

    /// Number of negative pivots (the inertia's negative count).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|v| **v < S::zero()).count()
    }

    pub fn solve_in_place(&self, b: &mut [S]) {
        let n = self.n;
        let mut x: Vec<S> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != S::zero() {
                for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                    x[self.row_idx[p]] -= self.lx[p] * xj;
                }
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc -= self.lx[p] * x[self.row_idx[p]];
            }
            x[j] = acc;
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = x[new];
        }
    }

    /// `D^(1/2) L^T P x`, so that `x^T A x` is its squared norm. Needs positive pivots.
    pub fn half_energy(&self, x: &[S]) -> Vec<S> {
        let y: Vec<S> = self.perm.iter().map(|&old| x[old]).collect();
        (0..self.n)
            .map(|j| {
                let mut acc = y[j];
                for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                    acc += self.lx[p] * y[self.row_idx[p]];
                }
                self.d[j].sqrt() * acc
            })
            .collect()
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
