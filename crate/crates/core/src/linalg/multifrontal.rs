//! Multifrontal `L D L^T` driven by an explicit assembly tree (typically from nested dissection).
//!
//! Each tree node owns a contiguous range of the permuted unknowns. Its frontal
//! matrix holds those unknowns plus every later unknown they are coupled to; the
//! node's pivots are eliminated densely and the Schur update is passed to the parent.

use nalgebra::DMatrix;

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const NO_PARENT: usize = usize::MAX;

/// Permutation plus assembly tree. Node `k` owns the permuted unknowns
/// `bounds[k]..bounds[k + 1]`; nodes are in post-order (children before parents).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationPlan {
    /// `perm[new] = old`.
    pub perm: Vec<usize>,
    pub bounds: Vec<usize>,
    pub parent: Vec<usize>,
}

impl EliminationPlan {
    pub fn num_nodes(&self) -> usize {
        self.parent.len()
    }

    /// A single node holding every unknown in the given order (dense factorization).
    pub fn single(perm: Vec<usize>) -> Self {
        let n = perm.len();
        Self {
            perm,
            bounds: vec![0, n],
            parent: vec![NO_PARENT],
        }
    }

    fn validate(&self, n: usize) -> Result<Vec<usize>> {
        let bad = |msg: &str| Err(Error::Config(format!("invalid elimination plan: {msg}")));
        if self.perm.len() != n || self.bounds.len() != self.parent.len() + 1 {
            return bad("sizes do not match");
        }
        if self.bounds.first() != Some(&0) || self.bounds.last() != Some(&n) {
            return bad("bounds do not cover the unknowns");
        }
        if self.bounds.windows(2).any(|w| w[0] > w[1]) {
            return bad("bounds are not sorted");
        }
        for (k, &p) in self.parent.iter().enumerate() {
            if p != NO_PARENT && p <= k {
                return bad("tree is not in post-order");
            }
        }
        let mut pinv = vec![usize::MAX; n];
        for (new, &old) in self.perm.iter().enumerate() {
            if old >= n || pinv[old] != usize::MAX {
                return bad("ordering is not a permutation");
            }
            pinv[old] = new;
        }
        Ok(pinv)
    }
}

#[derive(Debug, Clone)]
struct Front<S: Real> {
    start: usize,
    end: usize,
    /// Later unknowns coupled to this node, ascending.
    rows: Vec<usize>,
    /// `(d + rows.len()) x d`: unit lower triangle on top, `L_UD` below.
    l: DMatrix<S>,
}

#[derive(Debug, Clone)]
pub struct MultifrontalLdl<S: Real> {
    n: usize,
    perm: Vec<usize>,
    fronts: Vec<Front<S>>,
    d: Vec<S>,
}

const PANEL: usize = 48;

/// Partial `L D L^T` of the first `d` columns of the symmetric `f`.
fn partial_ldl<S: Real>(f: &mut DMatrix<S>, d: usize, piv: &mut [S], tol: S) -> Result<()> {
    let nf = f.nrows();
    let mut k0 = 0;
    while k0 < d {
        let k1 = (k0 + PANEL).min(d);
        for k in k0..k1 {
            let p = f[(k, k)];
            if p.abs() <= tol {
                return Err(Error::Numerical(format!("zero pivot ({p:e}) in LDL^T")));
            }
            piv[k] = p;
            let inv = S::one() / p;
            {
                let mut col = f.column_mut(k);
                for i in k + 1..nf {
                    col[i] *= inv;
                }
            }
            for j in k + 1..k1 {
                let ljk = f[(j, k)] * p;
                if ljk == S::zero() {
                    continue;
                }
                for i in j..nf {
                    let lik = f[(i, k)];
                    f[(i, j)] -= lik * ljk;
                }
            }
        }
        if k1 < nf {
            let rest = nf - k1;
            let lp = f.view((k1, k0), (rest, k1 - k0)).clone_owned();
            let mut w = lp.clone();
            for (c, k) in (k0..k1).enumerate() {
                let pk = piv[k];
                w.column_mut(c).iter_mut().for_each(|x| *x *= pk);
            }
            let mut trailing = f.view_mut((k1, k1), (rest, rest));
            trailing.gemm(-S::one(), &w, &lp.transpose(), S::one());
        }
        k0 = k1;
    }
    Ok(())
}

impl<S: Real> MultifrontalLdl<S> {
    pub fn factor(a: &CsrMatrix<S>, plan: &EliminationPlan) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Config("LDL^T needs a square matrix".into()));
        }
        let pinv = plan.validate(n)?;
        let nn = plan.num_nodes();
        let mut children = vec![Vec::new(); nn];
        for (k, &p) in plan.parent.iter().enumerate() {
            if p != NO_PARENT {
                children[p].push(k);
            }
        }
        let tol = a.max_abs() * S::default_epsilon() * S::lit(1e-6);
        let mut d = vec![S::zero(); n];
        let mut pos = vec![usize::MAX; n];
        let mut updates: Vec<Option<(Vec<usize>, DMatrix<S>)>> = vec![None; nn];
        let mut fronts = Vec::with_capacity(nn);
        for s in 0..nn {
            let (start, end) = (plan.bounds[s], plan.bounds[s + 1]);
            let dsz = end - start;
            // Structure of the update rows.
            let mut rows = Vec::new();
            for i in start..end {
                let (cols, _) = a.row(plan.perm[i]);
                for &c in cols {
                    let j = pinv[c];
                    if j >= end && pos[j] == usize::MAX {
                        pos[j] = 0;
                        rows.push(j);
                    }
                }
            }
            for &c in &children[s] {
                if let Some((crow, _)) = &updates[c] {
                    for &j in crow {
                        if j >= end && pos[j] == usize::MAX {
                            pos[j] = 0;
                            rows.push(j);
                        } else if j < start {
                            return Err(Error::Config(
                                "elimination plan is not a valid assembly tree".into(),
                            ));
                        }
                    }
                }
            }
            rows.sort_unstable();
            for i in start..end {
                pos[i] = i - start;
            }
            for (a_, &j) in rows.iter().enumerate() {
                pos[j] = dsz + a_;
            }
            let nf = dsz + rows.len();
            let mut f = DMatrix::<S>::zeros(nf, nf);
            for i in start..end {
                let li = i - start;
                let (cols, vals) = a.row(plan.perm[i]);
                for (&c, &v) in cols.iter().zip(vals) {
                    let j = pinv[c];
                    if j < start {
                        continue;
                    }
                    let lj = pos[j];
                    f[(li, lj)] += v;
                    if j >= end {
                        f[(lj, li)] += v;
                    }
                }
            }
            for &c in &children[s] {
                if let Some((crow, upd)) = updates[c].take() {
                    let loc: Vec<usize> = crow.iter().map(|&j| pos[j]).collect();
                    for (b, &lb) in loc.iter().enumerate() {
                        let col = upd.column(b);
                        for (a_, &la) in loc.iter().enumerate() {
                            f[(la, lb)] += col[a_];
                        }
                    }
                }
            }
            partial_ldl(&mut f, dsz, &mut d[start..end], tol)?;
            let u = rows.len();
            if u > 0 && plan.parent[s] != NO_PARENT {
                updates[s] = Some((rows.clone(), f.view((dsz, dsz), (u, u)).clone_owned()));
            } else if u > 0 {
                return Err(Error::Config(
                    "root node of the elimination plan has coupled rows".into(),
                ));
            }
            let l = f.columns(0, dsz).clone_owned();
            for i in start..end {
                pos[i] = usize::MAX;
            }
            for &j in &rows {
                pos[j] = usize::MAX;
            }
            fronts.push(Front {
                start,
                end,
                rows,
                l,
            });
        }
        Ok(Self {
            n,
            perm: plan.perm.clone(),
            fronts,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.fronts.iter().map(|f| f.l.len()).sum()
    }

    pub fn pivots(&self) -> &[S] {
        &self.d
    }

    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|v| **v < S::zero()).count()
    }

    pub fn solve_in_place(&self, b: &mut [S]) {
        let mut y: Vec<S> = self.perm.iter().map(|&old| b[old]).collect();
        for fr in &self.fronts {
            let dsz = fr.end - fr.start;
            for k in 0..dsz {
                let yk = y[fr.start + k];
                if yk == S::zero() {
                    continue;
                }
                let col = fr.l.column(k);
                for i in k + 1..dsz {
                    y[fr.start + i] -= col[i] * yk;
                }
                for (a, &r) in fr.rows.iter().enumerate() {
                    y[r] -= col[dsz + a] * yk;
                }
            }
        }
        for (yi, di) in y.iter_mut().zip(&self.d) {
            *yi /= *di;
        }
        for fr in self.fronts.iter().rev() {
            let dsz = fr.end - fr.start;
            for k in (0..dsz).rev() {
                let col = fr.l.column(k);
                let mut acc = y[fr.start + k];
                for i in k + 1..dsz {
                    acc -= col[i] * y[fr.start + i];
                }
                for (a, &r) in fr.rows.iter().enumerate() {
                    acc -= col[dsz + a] * y[r];
                }
                y[fr.start + k] = acc;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }

    /// `D^(1/2) L^T P x`; needs positive pivots.
    pub fn half_energy(&self, x: &[S]) -> Vec<S> {
        let y: Vec<S> = self.perm.iter().map(|&old| x[old]).collect();
        let mut z = vec![S::zero(); self.n];
        for fr in &self.fronts {
            let dsz = fr.end - fr.start;
            for k in 0..dsz {
                let col = fr.l.column(k);
                let mut acc = y[fr.start + k];
                for i in k + 1..dsz {
                    acc += col[i] * y[fr.start + i];
                }
                for (a, &r) in fr.rows.iter().enumerate() {
                    acc += col[dsz + a] * y[r];
                }
                z[fr.start + k] = self.d[fr.start + k].sqrt() * acc;
            }
        }
        z
    }
}
