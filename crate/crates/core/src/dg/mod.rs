//! Symmetric interior penalty discretization with discontinuous bilinear elements.

mod assembly;
mod identities;
mod norms;
pub mod reference;
mod solve;

pub use assembly::{
    assemble_load, assemble_load_fn, assemble_patch, assemble_sip, assemble_sip_parts, SipOperator,
    SipParts,
};
pub use identities::{verify_face_identities, FaceSample};
pub use norms::{energy_contributions, energy_norm, jump_seminorm, l2_norm, EnergyContributions};
pub use solve::{solve_reference, solve_with_operator, ReferenceSolution, SolverOptions};

use crate::error::{Error, Result};
use crate::mesh::{Axis, Face, Mesh, Side};
use crate::scalar::Real;
use reference::{basis, edge_point};

/// Penalty weighting on a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyMode {
    /// `sigma_e = sigma0`.
    Plain,
    /// `sigma_e = sigma0 * max(A-, A+)`.
    CoefficientWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyRule {
    pub sigma0: f64,
    pub mode: PenaltyMode,
}

impl PenaltyRule {
    pub fn new(sigma0: f64, mode: PenaltyMode) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::Config(format!(
                "penalty sigma0 must be positive, got {sigma0}"
            )));
        }
        Ok(Self { sigma0, mode })
    }

    pub fn plain(sigma0: f64) -> Result<Self> {
        Self::new(sigma0, PenaltyMode::Plain)
    }

    pub fn weighted(sigma0: f64) -> Result<Self> {
        Self::new(sigma0, PenaltyMode::CoefficientWeighted)
    }

    /// Dimensionless face penalty; `a_plus` is `None` on boundary faces.
    pub fn face_value<S: Real>(&self, a_minus: S, a_plus: Option<S>) -> S {
        let s = S::lit(self.sigma0);
        match self.mode {
            PenaltyMode::Plain => s,
            PenaltyMode::CoefficientWeighted => match a_plus {
                Some(ap) => s * a_minus.max(ap),
                None => s * a_minus,
            },
        }
    }
}

impl Default for PenaltyRule {
    fn default() -> Self {
        Self {
            sigma0: 10.0,
            mode: PenaltyMode::CoefficientWeighted,
        }
    }
}

/// Side of the minus element on which `face` lies.
pub(crate) fn minus_side(face: &Face) -> Side {
    match (face.normal_axis, face.normal_sign > 0) {
        (Axis::X, true) => Side::Right,
        (Axis::X, false) => Side::Left,
        (Axis::Y, true) => Side::Top,
        (Axis::Y, false) => Side::Bottom,
    }
}

/// Side of the plus element on which an interior `face` lies.
pub(crate) fn plus_side(face: &Face) -> Side {
    match face.normal_axis {
        Axis::X => Side::Left,
        Axis::Y => Side::Bottom,
    }
}

/// Piecewise bilinear function, four coefficients per element.
#[derive(Debug, Clone, PartialEq)]
pub struct DgFunction<S> {
    pub level: u32,
    pub coeffs: Vec<S>,
}

impl<S: Real> DgFunction<S> {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            level: mesh.level(),
            coeffs: vec![S::zero(); 4 * mesh.num_elements()],
        }
    }

    pub fn from_coeffs(mesh: &Mesh, coeffs: Vec<S>) -> Result<Self> {
        if coeffs.len() != 4 * mesh.num_elements() {
            return Err(Error::Domain(format!(
                "expected {} coefficients, got {}",
                4 * mesh.num_elements(),
                coeffs.len()
            )));
        }
        Ok(Self {
            level: mesh.level(),
            coeffs,
        })
    }

    /// Element-wise nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(S, S) -> S) -> Self {
        let h = mesh.width::<S>();
        let mut coeffs = Vec::with_capacity(4 * mesh.num_elements());
        for e in 0..mesh.num_elements() {
            let [x0, y0] = mesh.origin::<S>(e);
            for j in 0..4 {
                let dx = if j & 1 == 1 { h } else { S::zero() };
                let dy = if j >> 1 == 1 { h } else { S::zero() };
                coeffs.push(f(x0 + dx, y0 + dy));
            }
        }
        Self {
            level: mesh.level(),
            coeffs,
        }
    }

    pub fn element(&self, e: usize) -> &[S] {
        &self.coeffs[4 * e..4 * e + 4]
    }

    pub fn check_level(&self, mesh: &Mesh) -> Result<()> {
        if self.level != mesh.level() || self.coeffs.len() != 4 * mesh.num_elements() {
            return Err(Error::Domain(format!(
                "function of level {} used on a mesh of level {}",
                self.level,
                mesh.level()
            )));
        }
        Ok(())
    }

    /// Value inside element `e` at reference coordinates `(xi, eta)`.
    pub fn eval_local(&self, e: usize, xi: S, eta: S) -> S {
        let c = self.element(e);
        (0..4).map(|j| c[j] * basis(j, xi, eta)).sum()
    }

    /// Point evaluation; points on element boundaries use the element to the upper right
    /// when it exists. `None` outside the domain.
    pub fn eval(&self, mesh: &Mesh, x: f64, y: f64) -> Option<S> {
        let n = mesh.cells_per_side() as f64;
        let (sx, sy) = (x * n, y * n);
        let clamp = |s: f64| (s.floor() as i64).min(mesh.cells_per_side() as i64 - 1);
        let (ix, iy) = (clamp(sx), clamp(sy));
        let e = mesh.element_at(ix, iy)?;
        let (xi, eta) = (sx - ix as f64, sy - iy as f64);
        if !(-1e-12..=1.0 + 1e-12).contains(&xi) || !(-1e-12..=1.0 + 1e-12).contains(&eta) {
            return None;
        }
        Some(self.eval_local(e, S::lit(xi), S::lit(eta)))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: S) -> Self {
        Self {
            level: self.level,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    fn zip(&self, other: &Self, op: impl Fn(S, S) -> S) -> Self {
        assert_eq!(self.level, other.level, "level mismatch");
        Self {
            level: self.level,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }
}

/// Linear polynomial along a face, parametrized by `t` in `[0, 1]` from the face origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trace<S> {
    pub start: S,
    pub end: S,
}

impl<S: Real> Trace<S> {
    pub fn eval(&self, t: S) -> S {
        self.start * (S::one() - t) + self.end * t
    }
}

fn trace_of<S: Real>(v: &DgFunction<S>, e: usize, side: Side) -> Trace<S> {
    let (x0, y0) = edge_point(side, S::zero());
    let (x1, y1) = edge_point(side, S::one());
    Trace {
        start: v.eval_local(e, x0, y0),
        end: v.eval_local(e, x1, y1),
    }
}

fn one_sided<S: Real>(
    v: &DgFunction<S>,
    mesh: &Mesh,
    f: usize,
) -> Result<(Trace<S>, Option<Trace<S>>)> {
    v.check_level(mesh)?;
    let face = mesh
        .faces()
        .get(f)
        .ok_or_else(|| Error::Domain(format!("face {f} is not part of the mesh")))?;
    let minus = trace_of(v, face.minus, minus_side(face));
    let plus = face.plus_element().map(|p| trace_of(v, p, plus_side(face)));
    Ok((minus, plus))
}

/// `[v] = v- - v+` on interior faces, `v` on boundary faces.
pub fn jump<S: Real>(v: &DgFunction<S>, mesh: &Mesh, f: usize) -> Result<Trace<S>> {
    let (m, p) = one_sided(v, mesh, f)?;
    Ok(match p {
        Some(p) => Trace {
            start: m.start - p.start,
            end: m.end - p.end,
        },
        None => m,
    })
}

/// `{v} = (v- + v+) / 2` on interior faces, `v` on boundary faces.
pub fn average<S: Real>(v: &DgFunction<S>, mesh: &Mesh, f: usize) -> Result<Trace<S>> {
    let (m, p) = one_sided(v, mesh, f)?;
    let half = S::lit(0.5);
    Ok(match p {
        Some(p) => Trace {
            start: half * (m.start + p.start),
            end: half * (m.end + p.end),
        },
        None => m,
    })
}
