use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{build_ms_space_with, GlobalOptions, MsBasis, Radius};
use crate::coefficient::Coefficient;
use crate::dg::{assemble_sip, DgFunction, PenaltyRule, SipOperator};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{MeshHierarchy, Side};
use crate::scalar::Real;

/// Rows of the fine operator belonging to one coarse cell, with columns
/// addressed as (neighbour slot, local dof).
pub(crate) struct CellRows<S> {
    /// The cell itself, then its face neighbours.
    pub nbrs: Vec<usize>,
    pub ptr: Vec<usize>,
    pub slot: Vec<u8>,
    pub col: Vec<u32>,
    pub val: Vec<S>,
}

impl<S: Real> CellRows<S> {
    pub fn new(hier: &MeshHierarchy, k: &CsrMatrix<S>, c: usize) -> Result<Self> {
        let coarse = hier.coarse();
        let mut nbrs = vec![c];
        for side in [Side::Left, Side::Right, Side::Bottom, Side::Top] {
            if let Some(nb) = coarse.neighbor(c, side) {
                nbrs.push(nb);
            }
        }
        let nd = 4 * hier.children_per_element();
        let mut out = Self {
            nbrs,
            ptr: Vec::with_capacity(nd + 1),
            slot: Vec::new(),
            col: Vec::new(),
            val: Vec::new(),
        };
        out.ptr.push(0);
        for &e in hier.children(c) {
            for i in 0..4 {
                let (cols, vals) = k.row(4 * e + i);
                for (&gc, &v) in cols.iter().zip(vals) {
                    let (pc, kk) = hier.parent(gc / 4);
                    let s = out.nbrs.iter().position(|&x| x == pc).ok_or_else(|| {
                        Error::Domain("operator couples cells that share no face".into())
                    })?;
                    out.slot.push(s as u8);
                    out.col.push((4 * kk + gc % 4) as u32);
                    out.val.push(v);
                }
                out.ptr.push(out.col.len());
            }
        }
        Ok(out)
    }

    /// `(K v)` on the cell's rows for `v` given on `members` (coarse-major, columns of `block`).
    pub fn apply(
        &self,
        nd: usize,
        members: &[usize],
        block: &DMatrix<S>,
        out: &mut [S],
        column: usize,
    ) {
        let pos: Vec<Option<usize>> = self
            .nbrs
            .iter()
            .map(|c| members.binary_search(c).ok())
            .collect();
        for a in 0..nd {
            let mut acc = S::zero();
            for p in self.ptr[a]..self.ptr[a + 1] {
                if let Some(q) = pos[self.slot[p] as usize] {
                    acc += self.val[p] * block[(q * nd + self.col[p] as usize, column)];
                }
            }
            out[a] = acc;
        }
    }
}

/// For each coarse cell, the coarse elements whose patch contains it.
pub(crate) fn coverage(supports: &[Vec<usize>], ncoarse: usize) -> Vec<Vec<usize>> {
    let mut cov = vec![Vec::new(); ncoarse];
    for (t, supp) in supports.iter().enumerate() {
        for &c in supp {
            cov[c].push(t);
        }
    }
    cov
}

const CHUNK: usize = 16;

/// The factored multiscale stiffness matrix `a_h(psi_{T',j'}, psi_{T,j})`.
pub struct MsSystem<S: Real> {
    stiffness: DMatrix<S>,
    chol: nalgebra::Cholesky<S, nalgebra::Dyn>,
    condition: f64,
    assembly_seconds: f64,
}

impl<S: Real> MsSystem<S> {
    pub fn assemble(hier: &MeshHierarchy, basis: &MsBasis<S>, op: &SipOperator<S>) -> Result<Self> {
        basis.check(hier)?;
        if op.level != hier.fine().level() || op.matrix.nrows() != 4 * hier.fine().num_elements() {
            return Err(Error::Domain(
                "operator does not live on the fine mesh".into(),
            ));
        }
        let start = Instant::now();
        let ncoarse = hier.coarse().num_elements();
        let nd = 4 * hier.children_per_element();
        let n = basis.num_columns();
        let cov = coverage(&basis.supports, ncoarse);
        let mut a = DMatrix::<S>::zeros(n, n);
        let cells: Vec<usize> = (0..ncoarse).collect();
        for chunk in cells.chunks(CHUNK) {
            let blocks: Vec<(Vec<usize>, Vec<usize>, DMatrix<S>)> = chunk
                .par_iter()
                .map(|&c| -> Result<_> {
                    let rows = CellRows::new(hier, &op.matrix, c)?;
                    let left = &cov[c];
                    let mut right: Vec<usize> = rows
                        .nbrs
                        .iter()
                        .flat_map(|&nb| cov[nb].iter().copied())
                        .collect();
                    right.sort_unstable();
                    right.dedup();
                    let mut y = DMatrix::<S>::zeros(nd, 4 * left.len());
                    for (q, &t) in left.iter().enumerate() {
                        let p = basis.supports[t]
                            .binary_search(&c)
                            .expect("coverage lists patch members");
                        y.view_mut((0, 4 * q), (nd, 4))
                            .copy_from(&basis.psi[t].view((p * nd, 0), (nd, 4)));
                    }
                    let mut z = DMatrix::<S>::zeros(nd, 4 * right.len());
                    for (q, &t) in right.iter().enumerate() {
                        for j in 0..4 {
                            let mut col = z.column_mut(4 * q + j);
                            rows.apply(
                                nd,
                                &basis.supports[t],
                                &basis.psi[t],
                                col.as_mut_slice(),
                                j,
                            );
                        }
                    }
                    Ok((left.clone(), right, y.transpose() * z))
                })
                .collect::<Result<_>>()?;
            for (left, right, block) in blocks {
                for (q, &t) in left.iter().enumerate() {
                    for (qq, &tt) in right.iter().enumerate() {
                        for i in 0..4 {
                            for j in 0..4 {
                                a[(4 * t + i, 4 * tt + j)] += block[(4 * q + i, 4 * qq + j)];
                            }
                        }
                    }
                }
            }
        }
        let a = (&a + a.transpose()) * S::lit(0.5);
        let (chol, condition) = factor_dense(&a, "multiscale stiffness")?;
        Ok(Self {
            stiffness: a,
            chol,
            condition,
            assembly_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn stiffness(&self) -> &DMatrix<S> {
        &self.stiffness
    }

    /// Squared ratio of the extreme Cholesky diagonal entries.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn assembly_seconds(&self) -> f64 {
        self.assembly_seconds
    }

    /// Coarse coefficients for a right-hand side already tested against the basis.
    pub fn solve_coarse(&self, rhs: &[S]) -> (Vec<S>, f64) {
        let b = DVector::from_column_slice(rhs);
        let x = self.chol.solve(&b);
        let r = &b - &self.stiffness * &x;
        let bn = b.norm();
        let res = if bn > S::zero() {
            (r.norm() / bn).to_f64_lossy()
        } else {
            0.0
        };
        (x.iter().copied().collect(), res)
    }

    pub fn solve(
        &self,
        hier: &MeshHierarchy,
        basis: &MsBasis<S>,
        load: &[S],
    ) -> Result<MsSolution<S>> {
        let start = Instant::now();
        let rhs = basis.project_load(hier, load)?;
        let (coarse, residual) = self.solve_coarse(&rhs);
        let u = basis.reconstruct(hier, &coarse)?;
        Ok(MsSolution {
            coarse,
            u,
            residual,
            condition: self.condition,
            solve_seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// [`Self::solve`] followed by `steps` corrections from the compensated
    /// fine residual `F - M u_ms` restricted to the multiscale space.
    pub fn solve_refined(
        &self,
        hier: &MeshHierarchy,
        basis: &MsBasis<S>,
        op: &SipOperator<S>,
        load: &[S],
        steps: usize,
    ) -> Result<MsSolution<S>> {
        let start = Instant::now();
        let mut sol = self.solve(hier, basis, load)?;
        if op.matrix.nrows() != sol.u.coeffs.len() {
            return Err(Error::Domain(
                "operator does not live on the fine mesh".into(),
            ));
        }
        for _ in 0..steps {
            let r = op.matrix.residual(&sol.u.coeffs, load);
            let (dx, _) = self.solve_coarse(&basis.project_load(hier, &r)?);
            for (x, d) in sol.coarse.iter_mut().zip(&dx) {
                *x += *d;
            }
            sol.u = basis.reconstruct(hier, &sol.coarse)?;
        }
        let rhs = basis.project_load(hier, load)?;
        let ax = &self.stiffness * DVector::from_column_slice(&sol.coarse);
        let bn = DVector::from_column_slice(&rhs).norm();
        if bn > S::zero() {
            sol.residual = ((DVector::from_column_slice(&rhs) - ax).norm() / bn).to_f64_lossy();
        }
        sol.solve_seconds = start.elapsed().as_secs_f64();
        Ok(sol)
    }
}

/// Dense Cholesky with a diagonal-ratio condition estimate.
pub(crate) fn factor_dense<S: Real>(
    a: &DMatrix<S>,
    what: &str,
) -> Result<(nalgebra::Cholesky<S, nalgebra::Dyn>, f64)> {
    let chol = a.clone().cholesky().ok_or_else(|| Error::IllConditioned {
        condition: f64::INFINITY,
        context: format!("{what} is not numerically positive definite"),
    })?;
    let d = chol.l_dirty().diagonal();
    let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
        let v = v.to_f64_lossy().powi(2);
        (lo.min(v), hi.max(v))
    });
    let condition = if d.is_empty() { 1.0 } else { hi / lo };
    let limit = 1.0 / S::default_epsilon().to_f64_lossy();
    if !condition.is_finite() || condition > limit {
        return Err(Error::IllConditioned {
            condition,
            context: what.to_string(),
        });
    }
    Ok((chol, condition))
}

/// Coarse coefficients and the fine reconstruction of a multiscale solution.
#[derive(Debug, Clone)]
pub struct MsSolution<S> {
    pub coarse: Vec<S>,
    pub u: DgFunction<S>,
    /// Relative residual of the coarse system.
    pub residual: f64,
    pub condition: f64,
    pub solve_seconds: f64,
}

/// Multiscale Galerkin solution for the fine load vector `load`.
pub fn solve_msfem<S: Real>(
    hier: &MeshHierarchy,
    basis: &MsBasis<S>,
    op: &SipOperator<S>,
    load: &[S],
) -> Result<MsSolution<S>> {
    MsSystem::assemble(hier, basis, op)?.solve(hier, basis, load)
}

/// Multiscale solution with global correctors, together with the computable
/// right-hand side of the a priori bound.
#[derive(Debug, Clone)]
pub struct IdealSolution<S> {
    pub solution: MsSolution<S>,
    /// `alpha^(-1/2) ||H (f - Pi_H f)||`.
    pub bound: f64,
}

/// Ideal method. `f` is given as a fine function; its coarse projection
/// defines the bound.
pub fn solve_ideal_msfem<S: Real>(
    hier: &MeshHierarchy,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    f: &DgFunction<S>,
    opts: &GlobalOptions,
) -> Result<IdealSolution<S>> {
    let fine = hier.fine();
    let basis = build_ms_space_with(hier, coef, pen, Radius::Global, opts)?;
    let op = assemble_sip(fine, coef, pen)?;
    let load = crate::dg::assemble_load(fine, f)?;
    let solution = solve_msfem(hier, &basis, &op, &load)?;
    let map = crate::projection::CoarseFineMap::new(hier);
    let osc = map.fine_scale_part(hier, f)?;
    let (alpha, _) = coef.spectral_bounds();
    let hh = hier.coarse().width_f64();
    let bound = hh * crate::dg::l2_norm(fine, &osc)?.to_f64_lossy() / alpha.to_f64_lossy().sqrt();
    Ok(IdealSolution { solution, bound })
}
