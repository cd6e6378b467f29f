use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{gather, scatter_add, Corrector, Radius};
use crate::coefficient::Coefficient;
use crate::dg::{assemble_patch, DgFunction, PenaltyRule};
use crate::error::{Error, Result};
use crate::linalg::{KktFactor, SaddleSystem, SchurComplementSolver};
use crate::mesh::{MeshHierarchy, Patch};
use crate::ordering::patch_plan;
use crate::projection::CoarseFineMap;
use crate::scalar::Real;

/// Limits for the global (whole domain) corrector route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlobalOptions {
    /// Largest allowed `fine unknowns x coarse unknowns`.
    pub budget: usize,
    pub force: bool,
}

impl Default for GlobalOptions {
    fn default() -> Self {
        Self {
            budget: 20_000_000,
            force: false,
        }
    }
}

/// The corrected basis `psi_{T,j} = lambda_{T,j} - phi_{T,j}`.
#[derive(Debug, Clone)]
pub struct MsBasis<S> {
    pub(crate) radius: Radius,
    pub(crate) coarse_level: u32,
    pub(crate) fine_level: u32,
    /// Per coarse element, its patch cells (ascending).
    pub(crate) supports: Vec<Vec<usize>>,
    /// Per coarse element, `psi` on its patch: one column per local index.
    pub(crate) psi: Vec<DMatrix<S>>,
    pub(crate) residuals: Vec<[f64; 4]>,
    pub(crate) energies: Vec<[S; 4]>,
    pub(crate) build_seconds: f64,
}

impl<S: Real> MsBasis<S> {
    pub fn radius(&self) -> Radius {
        self.radius
    }

    pub fn num_coarse(&self) -> usize {
        self.supports.len()
    }

    /// Coarse unknowns, four per coarse element.
    pub fn num_columns(&self) -> usize {
        4 * self.supports.len()
    }

    pub fn support(&self, t: usize) -> &[usize] {
        &self.supports[t]
    }

    pub fn psi(&self, t: usize) -> &DMatrix<S> {
        &self.psi[t]
    }

    /// Relative KKT residuals of the four corrector solves of `t`.
    pub fn residuals(&self, t: usize) -> [f64; 4] {
        self.residuals[t]
    }

    /// `a_h(psi, psi)^(1/2)` per local index.
    pub fn energies(&self, t: usize) -> [S; 4] {
        self.energies[t]
    }

    pub fn build_seconds(&self) -> f64 {
        self.build_seconds
    }

    pub(crate) fn check(&self, hier: &MeshHierarchy) -> Result<()> {
        if self.coarse_level != hier.coarse().level()
            || self.fine_level != hier.fine().level()
            || self.supports.len() != hier.coarse().num_elements()
        {
            return Err(Error::Domain(
                "basis was built on a different hierarchy".into(),
            ));
        }
        Ok(())
    }

    /// `psi_{T,j}` extended by zero to the fine mesh.
    pub fn column(&self, hier: &MeshHierarchy, t: usize, j: usize) -> Result<DgFunction<S>> {
        self.check(hier)?;
        let mut out = DgFunction::zeros(hier.fine());
        let col: Vec<S> = self.psi[t].column(j).iter().copied().collect();
        scatter_add(hier, &self.supports[t], &col, S::one(), &mut out.coeffs);
        Ok(out)
    }

    /// `sum x_{4T+j} psi_{T,j}` on the fine mesh.
    pub fn reconstruct(&self, hier: &MeshHierarchy, x: &[S]) -> Result<DgFunction<S>> {
        self.check(hier)?;
        if x.len() != self.num_columns() {
            return Err(Error::Domain(format!(
                "{} coefficients for a basis of {} columns",
                x.len(),
                self.num_columns()
            )));
        }
        let mut out = DgFunction::zeros(hier.fine());
        for (t, block) in self.psi.iter().enumerate() {
            let v = block * nalgebra::DVector::from_column_slice(&x[4 * t..4 * t + 4]);
            scatter_add(
                hier,
                &self.supports[t],
                v.as_slice(),
                S::one(),
                &mut out.coeffs,
            );
        }
        Ok(out)
    }

    /// `(psi_{T,j}, F)` for a fine load vector `F`.
    pub fn project_load(&self, hier: &MeshHierarchy, load: &[S]) -> Result<Vec<S>> {
        self.check(hier)?;
        if load.len() != 4 * hier.fine().num_elements() {
            return Err(Error::Domain("load does not live on the fine mesh".into()));
        }
        let mut out = Vec::with_capacity(self.num_columns());
        for (t, block) in self.psi.iter().enumerate() {
            let local = nalgebra::DVector::from_vec(gather(hier, &self.supports[t], load));
            out.extend((block.transpose() * local).iter().copied());
        }
        Ok(out)
    }
}

/// `lambda_{T,j}` on a patch, `T = members[pos]`, one column per `j`.
fn lambda_block<S: Real>(map: &CoarseFineMap<S>, pos: usize, nloc: usize) -> DMatrix<S> {
    let nc = map.ratio() * map.ratio();
    let mut lam = DMatrix::zeros(nloc, 4);
    for k in 0..nc {
        let r = map.interpolation(k);
        for i in 0..4 {
            for j in 0..4 {
                lam[(4 * (pos * nc + k) + i, j)] = r[i][j];
            }
        }
    }
    lam
}

struct Local<S> {
    members: Vec<usize>,
    pos: usize,
    psi: DMatrix<S>,
    residual: [f64; 4],
    energy: [S; 4],
}

fn finish<S: Real>(
    members: Vec<usize>,
    pos: usize,
    k: &crate::linalg::CsrMatrix<S>,
    lam: DMatrix<S>,
    phi: DMatrix<S>,
    residual: [f64; 4],
) -> Local<S> {
    let psi = &lam - &phi;
    let energy = std::array::from_fn(|j| {
        let col: Vec<S> = psi.column(j).iter().copied().collect();
        k.bilinear(&col, &col).max(S::zero()).sqrt()
    });
    Local {
        members,
        pos,
        psi,
        residual,
        energy,
    }
}

fn patch_system<S: Real>(
    hier: &MeshHierarchy,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    map: &CoarseFineMap<S>,
    patch: &Patch,
) -> Result<SaddleSystem<S>> {
    Ok(SaddleSystem {
        k: assemble_patch(hier, coef, pen, patch)?.matrix,
        c: map.constraint_matrix(hier, patch)?,
    })
}

fn right_hand_sides<S: Real>(k: &crate::linalg::CsrMatrix<S>, lam: &DMatrix<S>) -> Vec<Vec<S>> {
    (0..4)
        .map(|j| {
            let col: Vec<S> = lam.column(j).iter().copied().collect();
            k.mul_vec(&col)
        })
        .collect()
}

fn localized<S: Real>(
    hier: &MeshHierarchy,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    map: &CoarseFineMap<S>,
    t: usize,
    layers: usize,
) -> Result<Local<S>> {
    let patch = hier.patch(t, layers)?;
    let sys = patch_system(hier, coef, pen, map, &patch)?;
    let pos = patch
        .members
        .binary_search(&t)
        .map_err(|_| Error::Domain("patch misses its center".into()))?;
    let n = patch.num_fine_dofs();
    let lam = lambda_block(map, pos, n);
    let rhs = right_hand_sides(&sys.k, &lam);
    let plan = patch_plan(hier, &patch, true);
    let wrap = |j: usize| {
        move |e: Error| Error::Corrector {
            element: t,
            local: j,
            source: Box::new(e),
        }
    };
    let kkt = KktFactor::new(&sys, Some(&plan)).map_err(wrap(0))?;
    let zeros = vec![S::zero(); sys.c.nrows()];
    let mut phi = DMatrix::zeros(n, 4);
    let mut residual = [0.0; 4];
    for j in 0..4 {
        let sol = kkt.solve(&rhs[j], &zeros);
        if !sol.x.iter().all(|v| v.is_finite()) {
            return Err(wrap(j)(Error::Numerical("non-finite corrector".into())));
        }
        phi.column_mut(j).copy_from_slice(&sol.x);
        residual[j] = sol.residual;
    }
    Ok(finish(patch.members, pos, &sys.k, lam, phi, residual))
}

/// Whole-domain correctors share one factorization of `K` and of the dense Schur complement.
struct GlobalRoute<S: Real> {
    patch: Patch,
    sys: SaddleSystem<S>,
    solver: SchurComplementSolver<S>,
}

impl<S: Real> GlobalRoute<S> {
    fn new(
        hier: &MeshHierarchy,
        coef: &Coefficient<S>,
        pen: &PenaltyRule,
        map: &CoarseFineMap<S>,
        opts: &GlobalOptions,
    ) -> Result<Self> {
        let patch = hier.whole_domain_patch(0);
        let size = patch.num_fine_dofs() * 4 * patch.members.len();
        if size > opts.budget && !opts.force {
            return Err(Error::Budget {
                size,
                budget: opts.budget,
            });
        }
        let sys = patch_system(hier, coef, pen, map, &patch)?;
        let plan = patch_plan(hier, &patch, false);
        let solver = SchurComplementSolver::new(&sys, Some(&plan))?;
        Ok(Self { patch, sys, solver })
    }

    fn element(&self, map: &CoarseFineMap<S>, t: usize) -> Result<Local<S>> {
        let n = self.patch.num_fine_dofs();
        let lam = lambda_block(map, t, n);
        let rhs = right_hand_sides(&self.sys.k, &lam);
        let zeros = vec![S::zero(); self.sys.c.nrows()];
        let mut phi = DMatrix::zeros(n, 4);
        let mut residual = [0.0; 4];
        for j in 0..4 {
            let sol = self.solver.solve(&rhs[j], &zeros);
            let kx = self.sys.k.mul_vec(&sol.x);
            let ctmu = self.sys.c.mul_transpose_vec(&sol.multipliers);
            let res: Vec<S> = (0..n).map(|i| rhs[j][i] - kx[i] - ctmu[i]).collect();
            let cx = self.sys.c.mul_vec(&sol.x);
            let num = crate::scalar::dot(&res, &res) + crate::scalar::dot(&cx, &cx);
            let den = crate::scalar::dot(&rhs[j], &rhs[j]);
            residual[j] = if den > S::zero() {
                (num / den).sqrt().to_f64_lossy()
            } else {
                0.0
            };
            phi.column_mut(j).copy_from_slice(&sol.x);
        }
        Ok(finish(
            self.patch.members.clone(),
            t,
            &self.sys.k,
            lam,
            phi,
            residual,
        ))
    }
}

fn into_corrector<S: Real>(
    map: &CoarseFineMap<S>,
    local: Local<S>,
    t: usize,
    j: usize,
    radius: Radius,
) -> Corrector<S> {
    let lam = lambda_block(map, local.pos, local.psi.nrows());
    Corrector {
        element: t,
        local: j,
        radius,
        members: local.members,
        values: lam
            .column(j)
            .iter()
            .zip(local.psi.column(j).iter())
            .map(|(l, p)| *l - *p)
            .collect(),
        residual: local.residual[j],
    }
}

fn check_index(hier: &MeshHierarchy, t: usize, j: usize) -> Result<()> {
    if t >= hier.coarse().num_elements() || j >= 4 {
        return Err(Error::Config(format!(
            "no coarse basis function ({t}, {j})"
        )));
    }
    Ok(())
}

/// Localized corrector `phi^L_{T,j}` on `L` coarse layers around `T`.
pub fn corrector<S: Real>(
    hier: &MeshHierarchy,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    t: usize,
    j: usize,
    layers: usize,
) -> Result<Corrector<S>> {
    check_index(hier, t, j)?;
    let map = CoarseFineMap::new(hier);
    let local = localized(hier, coef, pen, &map, t, layers)?;
    Ok(into_corrector(&map, local, t, j, Radius::Layers(layers)))
}

/// Corrector `phi_{T,j}` of the whole domain.
pub fn global_corrector<S: Real>(
    hier: &MeshHierarchy,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    t: usize,
    j: usize,
    opts: &GlobalOptions,
) -> Result<Corrector<S>> {
    check_index(hier, t, j)?;
    let map = CoarseFineMap::new(hier);
    let route = GlobalRoute::new(hier, coef, pen, &map, opts)?;
    let local = route.element(&map, t)?;
    Ok(into_corrector(&map, local, t, j, Radius::Global))
}

/// All corrected basis functions for the given radius.
pub fn build_ms_space<S: Real>(
    hier: &MeshHierarchy,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    radius: Radius,
) -> Result<MsBasis<S>> {
    build_ms_space_with(hier, coef, pen, radius, &GlobalOptions::default())
}

pub fn build_ms_space_with<S: Real>(
    hier: &MeshHierarchy,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    radius: Radius,
    opts: &GlobalOptions,
) -> Result<MsBasis<S>> {
    let start = Instant::now();
    let map = CoarseFineMap::new(hier);
    let nt = hier.coarse().num_elements();
    let locals: Vec<Local<S>> = match radius {
        Radius::Layers(l) => (0..nt)
            .into_par_iter()
            .map(|t| localized(hier, coef, pen, &map, t, l))
            .collect::<Result<_>>()?,
        Radius::Global => {
            let route = GlobalRoute::new(hier, coef, pen, &map, opts)?;
            (0..nt)
                .map(|t| route.element(&map, t))
                .collect::<Result<_>>()?
        }
    };
    let mut basis = MsBasis {
        radius,
        coarse_level: hier.coarse().level(),
        fine_level: hier.fine().level(),
        supports: Vec::with_capacity(nt),
        psi: Vec::with_capacity(nt),
        residuals: Vec::with_capacity(nt),
        energies: Vec::with_capacity(nt),
        build_seconds: 0.0,
    };
    for local in locals {
        basis.supports.push(local.members);
        basis.psi.push(local.psi);
        basis.residuals.push(local.residual);
        basis.energies.push(local.energy);
    }
    basis.build_seconds = start.elapsed().as_secs_f64();
    Ok(basis)
}
