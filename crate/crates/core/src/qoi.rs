//! Dual solves and goal-oriented error quantities.

use crate::coefficient::Coefficient;
use crate::dg::{
    assemble_load, assemble_load_fn, assemble_sip, energy_norm, l2_norm, solve_with_operator,
    DgFunction, PenaltyRule, SipOperator, SolverOptions,
};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, MeshHierarchy};
use crate::multiscale::{MsBasis, MsSolution, MsSystem};
use crate::scalar::{dot, Real};

/// An L2 density `g`, acting as `v -> int g v`.
pub enum QoiSpec<'a, S> {
    Function(Box<dyn Fn(S, S) -> S + Sync + 'a>),
    Discrete(DgFunction<S>),
}

impl<S: Real> QoiSpec<'_, S> {
    /// Indicator of the axis-aligned box `[x0, x1] x [y0, y1]`.
    pub fn indicator(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let (x0, x1, y0, y1) = (S::lit(x0), S::lit(x1), S::lit(y0), S::lit(y1));
        QoiSpec::Function(Box::new(move |x, y| {
            if x >= x0 && x <= x1 && y >= y0 && y <= y1 {
                S::one()
            } else {
                S::zero()
            }
        }))
    }

    /// `(int g phi_{T,j})` on `mesh`.
    pub fn load(&self, mesh: &Mesh) -> Result<Vec<S>> {
        match self {
            QoiSpec::Function(g) => Ok(assemble_load_fn(mesh, |x, y| g(x, y))),
            QoiSpec::Discrete(g) => assemble_load(mesh, g),
        }
    }
}

/// `g(v)` for a precomputed load vector of `g`.
pub fn evaluate<S: Real>(g_load: &[S], v: &DgFunction<S>) -> S {
    dot(g_load, &v.coeffs)
}

/// Fine dual solution; the operator is symmetric, so this is a primal solve with load `g`.
pub fn solve_dual_reference<S: Real>(
    mesh: &Mesh,
    op: &SipOperator<S>,
    g_load: &[S],
    opts: &SolverOptions,
) -> Result<DgFunction<S>> {
    Ok(solve_with_operator(mesh, op, g_load, opts)?.u)
}

/// Multiscale dual solution, sharing the primal stiffness factorization.
pub fn solve_dual_msfem<S: Real>(
    hier: &MeshHierarchy,
    basis: &MsBasis<S>,
    system: &MsSystem<S>,
    g_load: &[S],
) -> Result<MsSolution<S>> {
    system.solve(hier, basis, g_load)
}

/// [`solve_dual_msfem`] with residual corrections against the fine operator.
pub fn solve_dual_msfem_refined<S: Real>(
    hier: &MeshHierarchy,
    basis: &MsBasis<S>,
    system: &MsSystem<S>,
    op: &SipOperator<S>,
    g_load: &[S],
    steps: usize,
) -> Result<MsSolution<S>> {
    system.solve_refined(hier, basis, op, g_load, steps)
}

/// `|g(u_h) - g(u_ms)|` against error products.
///
/// `product_bound` measures both errors in the norm `sqrt(a_h(v, v))`, for which the
/// goal error bound holds with constant one. `dg_product` uses the dG energy norm
/// instead, and `dg_constant` is the ratio the bound needs in that norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoiBound {
    pub exact_gap: f64,
    pub product_bound: f64,
    pub dg_product: f64,
}

impl QoiBound {
    pub fn holds(&self) -> bool {
        self.exact_gap <= self.product_bound * (1.0 + 1e-8)
    }

    /// `exact_gap / product_bound`, zero when both vanish.
    pub fn ratio(&self) -> f64 {
        ratio(self.exact_gap, self.product_bound)
    }

    pub fn dg_constant(&self) -> f64 {
        ratio(self.exact_gap, self.dg_product)
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
pub fn qoi_error_bound<S: Real>(
    mesh: &Mesh,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    g_load: &[S],
    u_h: &DgFunction<S>,
    u_ms: &DgFunction<S>,
    phi_h: &DgFunction<S>,
    phi_ms: &DgFunction<S>,
) -> Result<QoiBound> {
    for v in [u_h, u_ms, phi_h, phi_ms] {
        v.check_level(mesh)?;
    }
    if g_load.len() != u_h.coeffs.len() {
        return Err(Error::Domain(
            "functional does not live on the fine mesh".into(),
        ));
    }
    let e = u_h.sub(u_ms);
    let d = phi_h.sub(phi_ms);
    let exact_gap = evaluate(g_load, &e).abs().to_f64_lossy();
    let op = assemble_sip(mesh, coef, pen)?;
    let a_norm = |v: &DgFunction<S>| {
        op.matrix
            .bilinear(&v.coeffs, &v.coeffs)
            .to_f64_lossy()
            .max(0.0)
            .sqrt()
    };
    let dg = energy_norm(mesh, coef, pen, &e)?.to_f64_lossy()
        * energy_norm(mesh, coef, pen, &d)?.to_f64_lossy();
    Ok(QoiBound {
        exact_gap,
        product_bound: a_norm(&e) * a_norm(&d),
        dg_product: dg,
    })
}

/// The computable estimate `H |||u_h - u_ms|||` and the measured L2 error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Estimate {
    pub estimate: f64,
    pub measured: f64,
}

pub fn l2_error_estimate<S: Real>(
    mesh: &Mesh,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    u_h: &DgFunction<S>,
    u_ms: &DgFunction<S>,
    h_coarse: f64,
) -> Result<L2Estimate> {
    let e = u_h.sub(u_ms);
    Ok(L2Estimate {
        estimate: h_coarse * energy_norm(mesh, coef, pen, &e)?.to_f64_lossy(),
        measured: l2_norm(mesh, &e)?.to_f64_lossy(),
    })
}
