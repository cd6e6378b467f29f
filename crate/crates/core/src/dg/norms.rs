//! Broken L2, jump and energy norms.

use super::reference::ReferenceElement;
use super::{jump, DgFunction, PenaltyRule};
use crate::coefficient::Coefficient;
use crate::error::Result;
use crate::mesh::Mesh;
use crate::scalar::Real;

/// Squared energy split into per-element volume terms and per-face jump terms.
#[derive(Debug, Clone)]
pub struct EnergyContributions<S> {
    pub element: Vec<S>,
    /// Zero on Neumann faces.
    pub face: Vec<S>,
}

impl<S: Real> EnergyContributions<S> {
    pub fn total(&self) -> S {
        self.element.iter().copied().sum::<S>() + self.face.iter().copied().sum::<S>()
    }
}

fn quad_form<S: Real>(m: &[[S; 4]; 4], c: &[S]) -> S {
    let mut s = S::zero();
    for i in 0..4 {
        for j in 0..4 {
            s += c[i] * m[i][j] * c[j];
        }
    }
    s
}

pub fn l2_norm<S: Real>(mesh: &Mesh, v: &DgFunction<S>) -> Result<S> {
    v.check_level(mesh)?;
    let r = ReferenceElement::<S>::new();
    let h = mesh.width::<S>();
    let s: S = (0..mesh.num_elements())
        .map(|e| quad_form(&r.mass, v.element(e)))
        .sum();
    Ok((h * h * s).max(S::zero()).sqrt())
}

pub fn energy_contributions<S: Real>(
    mesh: &Mesh,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    v: &DgFunction<S>,
) -> Result<EnergyContributions<S>> {
    v.check_level(mesh)?;
    let r = ReferenceElement::<S>::new();
    let element = (0..mesh.num_elements())
        .map(|e| coef.value(e) * quad_form(&r.stiffness, v.element(e)))
        .collect();
    let third = S::lit(1.0 / 3.0);
    let mut face = vec![S::zero(); mesh.faces().len()];
    for (f, fc) in mesh.faces().iter().enumerate() {
        if !fc.is_active() {
            continue;
        }
        let sigma = pen.face_value(
            coef.value(fc.minus),
            fc.plus_element().map(|p| coef.value(p)),
        );
        let j = jump(v, mesh, f)?;
        face[f] = sigma * third * (j.start * j.start + j.start * j.end + j.end * j.end);
    }
    Ok(EnergyContributions { element, face })
}

/// `(sum_e sigma_e / h_e ||[v]||_e^2)^(1/2)` over interior and Dirichlet faces.
pub fn jump_seminorm<S: Real>(
    mesh: &Mesh,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    v: &DgFunction<S>,
) -> Result<S> {
    let c = energy_contributions(mesh, coef, pen, v)?;
    Ok(c.face.iter().copied().sum::<S>().sqrt())
}

/// `(||A^(1/2) grad_h v||^2 + |v|_jump^2)^(1/2)`.
pub fn energy_norm<S: Real>(
    mesh: &Mesh,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    v: &DgFunction<S>,
) -> Result<S> {
    Ok(energy_contributions(mesh, coef, pen, v)?.total().sqrt())
}
