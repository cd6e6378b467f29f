use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::galerkin::{coverage, CellRows};
use super::MsBasis;
use crate::dg::{DgFunction, SipOperator};
use crate::error::{Error, Result};
use crate::linalg::{svd_small, MultifrontalLdl, SymmetricFactor, TripletBuilder};
use crate::mesh::MeshHierarchy;
use crate::ordering::{block_plan, element_plan};
use crate::projection::CoarseFineMap;
use crate::scalar::Real;

/// Element-local basis obtained by splitting every corrected basis function
/// along coarse cells and truncating the local pieces by SVD.
#[derive(Debug, Clone)]
pub struct CompressedBasis<S> {
    coarse_level: u32,
    fine_level: u32,
    svd_tol: f64,
    /// Per coarse cell, `a_h`-orthonormal columns on the cell's fine dofs.
    blocks: Vec<DMatrix<S>>,
    /// Local pieces gathered on each cell before truncation.
    pieces: Vec<usize>,
    singular_values: Vec<Vec<f64>>,
    build_seconds: f64,
}

impl<S: Real> CompressedBasis<S> {
    pub fn svd_tol(&self) -> f64 {
        self.svd_tol
    }

    pub fn block(&self, c: usize) -> &DMatrix<S> {
        &self.blocks[c]
    }

    pub fn pieces(&self, c: usize) -> usize {
        self.pieces[c]
    }

    /// Retained functions on cell `c`.
    pub fn retained(&self, c: usize) -> usize {
        self.blocks[c].ncols()
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.ncols()).sum()
    }

    /// Total pieces before truncation.
    pub fn uncompressed_dimension(&self) -> usize {
        self.pieces.iter().sum()
    }

    /// Singular values of the local energy factor, nonincreasing (all of them, not only the kept ones).
    pub fn singular_values(&self, c: usize) -> &[f64] {
        &self.singular_values[c]
    }

    /// Condition number of the local Gram matrix restricted to the retained modes.
    pub fn retained_condition(&self, c: usize) -> f64 {
        let k = self.retained(c);
        if k == 0 {
            return 1.0;
        }
        let s = &self.singular_values[c];
        (s[0] / s[k - 1]).powi(2)
    }

    pub fn build_seconds(&self) -> f64 {
        self.build_seconds
    }

    fn check(&self, hier: &MeshHierarchy) -> Result<()> {
        if self.coarse_level != hier.coarse().level()
            || self.fine_level != hier.fine().level()
            || self.blocks.len() != hier.coarse().num_elements()
        {
            return Err(Error::Domain(
                "compressed basis was built on a different hierarchy".into(),
            ));
        }
        Ok(())
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for b in &self.blocks {
            off.push(off.last().unwrap() + b.ncols());
        }
        off
    }
}

fn cell_dofs(hier: &MeshHierarchy, c: usize) -> Vec<usize> {
    hier.children(c)
        .iter()
        .flat_map(|&e| 4 * e..4 * e + 4)
        .collect()
}

/// Splits the corrected basis along coarse cells and keeps, per cell, the
/// modes with `sigma > max(svd_tol, rank floor) * sigma_max` of the local
/// energy factor. The rank floor is `max(rows, cols) * eps`.
pub fn compress_space<S: Real>(
    hier: &MeshHierarchy,
    basis: &MsBasis<S>,
    op: &SipOperator<S>,
    svd_tol: f64,
) -> Result<CompressedBasis<S>> {
    basis.check(hier)?;
    if !(svd_tol >= 0.0 && svd_tol < 1.0) {
        return Err(Error::Config(format!("svd_tol {svd_tol} outside [0, 1)")));
    }
    let start = Instant::now();
    let ncoarse = hier.coarse().num_elements();
    let nc = hier.children_per_element();
    let nd = 4 * nc;
    let map = CoarseFineMap::<S>::new(hier);
    let cov = coverage(&basis.supports, ncoarse);
    let plan = element_plan(hier.fine(), hier.children(0));
    let results: Vec<(DMatrix<S>, usize, Vec<f64>)> = (0..ncoarse)
        .into_par_iter()
        .map(|c| -> Result<_> {
            let p = 4 + 4 * cov[c].len();
            let mut pieces = DMatrix::<S>::zeros(nd, p);
            for k in 0..nc {
                let r = map.interpolation(k);
                for i in 0..4 {
                    for j in 0..4 {
                        pieces[(4 * k + i, j)] = r[i][j];
                    }
                }
            }
            for (q, &t) in cov[c].iter().enumerate() {
                let pos = basis.supports[t]
                    .binary_search(&c)
                    .expect("coverage lists patch members");
                pieces
                    .view_mut((0, 4 + 4 * q), (nd, 4))
                    .copy_from(&basis.psi[t].view((pos * nd, 0), (nd, 4)));
            }
            let kcc = op.matrix.principal_submatrix(&cell_dofs(hier, c));
            let factor = SymmetricFactor::Multifrontal(MultifrontalLdl::factor(&kcc, &plan)?);
            if factor.negative_pivots() > 0 {
                return Err(Error::Numerical(format!(
                    "local operator of cell {c} is not positive definite"
                )));
            }
            let mut half = DMatrix::<S>::zeros(nd, p);
            for j in 0..p {
                let col: Vec<S> = pieces.column(j).iter().copied().collect();
                half.column_mut(j)
                    .copy_from_slice(&factor.half_energy(&col));
            }
            let svd = svd_small(&half)?;
            let sv: Vec<f64> = svd
                .singular_values
                .iter()
                .map(|s| s.to_f64_lossy())
                .collect();
            let smax = sv.first().copied().unwrap_or(0.0);
            let floor = nd.max(p) as f64 * S::default_epsilon().to_f64_lossy();
            let cut = svd_tol.max(floor) * smax;
            let k = sv.iter().take_while(|&&s| s > cut && s > 0.0).count();
            let mut scaled = svd.v.columns(0, k).into_owned();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col /= svd.singular_values[j];
            }
            Ok((&pieces * scaled, p, sv))
        })
        .collect::<Result<_>>()?;
    let mut cb = CompressedBasis {
        coarse_level: hier.coarse().level(),
        fine_level: hier.fine().level(),
        svd_tol,
        blocks: Vec::with_capacity(ncoarse),
        pieces: Vec::with_capacity(ncoarse),
        singular_values: Vec::with_capacity(ncoarse),
        build_seconds: 0.0,
    };
    for (b, p, sv) in results {
        cb.blocks.push(b);
        cb.pieces.push(p);
        cb.singular_values.push(sv);
    }
    cb.build_seconds = start.elapsed().as_secs_f64();
    Ok(cb)
}

/// The factored block-sparse stiffness matrix of a compressed basis.
pub struct CompressedSystem<S: Real> {
    offsets: Vec<usize>,
    factor: MultifrontalLdl<S>,
    matrix: crate::linalg::CsrMatrix<S>,
    condition: f64,
}

impl<S: Real> CompressedSystem<S> {
    pub fn assemble(
        hier: &MeshHierarchy,
        cb: &CompressedBasis<S>,
        op: &SipOperator<S>,
    ) -> Result<Self> {
        cb.check(hier)?;
        let ncoarse = hier.coarse().num_elements();
        let nd = 4 * hier.children_per_element();
        let offsets = cb.offsets();
        let n = *offsets.last().unwrap();
        let entries: Vec<Vec<(usize, usize, S)>> = (0..ncoarse)
            .into_par_iter()
            .map(|c| -> Result<_> {
                let rows = CellRows::new(hier, &op.matrix, c)?;
                let mut out = Vec::new();
                for &nb in &rows.nbrs {
                    let b = &cb.blocks[nb];
                    let mut z = DMatrix::<S>::zeros(nd, b.ncols());
                    for j in 0..b.ncols() {
                        let mut col = z.column_mut(j);
                        rows.apply(nd, &[nb], b, col.as_mut_slice(), j);
                    }
                    let block = cb.blocks[c].transpose() * z;
                    for i in 0..block.nrows() {
                        for j in 0..block.ncols() {
                            out.push((offsets[c] + i, offsets[nb] + j, block[(i, j)]));
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut tb = TripletBuilder::with_capacity(n, n, entries.iter().map(Vec::len).sum());
        for (i, j, v) in entries.into_iter().flatten() {
            tb.push(i, j, v);
        }
        let matrix = tb.build();
        let cells: Vec<usize> = (0..ncoarse).collect();
        let plan = block_plan(hier.coarse(), &cells, &offsets);
        let ill = |condition: f64| Error::IllConditioned {
            condition,
            context: "compressed stiffness".into(),
        };
        let factor = MultifrontalLdl::factor(&matrix, &plan).map_err(|_| ill(f64::INFINITY))?;
        let (lo, hi) = factor
            .pivots()
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
                let d = d.to_f64_lossy().abs();
                (lo.min(d), hi.max(d))
            });
        let condition = if n == 0 { 1.0 } else { hi / lo };
        if factor.negative_pivots() > 0
            || !condition.is_finite()
            || condition > 1.0 / S::default_epsilon().to_f64_lossy()
        {
            return Err(ill(condition));
        }
        Ok(Self {
            offsets,
            factor,
            matrix,
            condition,
        })
    }

    /// Ratio of the extreme pivots.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn dimension(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn solve(
        &self,
        hier: &MeshHierarchy,
        cb: &CompressedBasis<S>,
        load: &[S],
    ) -> Result<DgFunction<S>> {
        cb.check(hier)?;
        if load.len() != 4 * hier.fine().num_elements() {
            return Err(Error::Domain("load does not live on the fine mesh".into()));
        }
        let mut rhs = Vec::with_capacity(self.dimension());
        for (c, b) in cb.blocks.iter().enumerate() {
            let local = DVector::from_vec(cell_dofs(hier, c).iter().map(|&d| load[d]).collect());
            rhs.extend((b.transpose() * local).iter().copied());
        }
        let mut x = rhs.clone();
        self.factor.solve_in_place(&mut x);
        let r: Vec<S> = self
            .matrix
            .mul_vec(&x)
            .iter()
            .zip(&rhs)
            .map(|(a, b)| *b - *a)
            .collect();
        let mut dx = r;
        self.factor.solve_in_place(&mut dx);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += *di;
        }
        let mut u = DgFunction::zeros(hier.fine());
        for (c, b) in cb.blocks.iter().enumerate() {
            let v = b * DVector::from_column_slice(&x[self.offsets[c]..self.offsets[c + 1]]);
            for (d, val) in cell_dofs(hier, c).into_iter().zip(v.iter()) {
                u.coeffs[d] = *val;
            }
        }
        Ok(u)
    }
}

/// Galerkin solution in the compressed space.
pub fn solve_compressed<S: Real>(
    hier: &MeshHierarchy,
    cb: &CompressedBasis<S>,
    op: &SipOperator<S>,
    load: &[S],
) -> Result<DgFunction<S>> {
    CompressedSystem::assemble(hier, cb, op)?.solve(hier, cb, load)
}
