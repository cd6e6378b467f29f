//! Assembly of the SIP operator and of load vectors.

use rayon::prelude::*;

use super::reference::{basis, gauss_legendre, zero_block, Block, ReferenceElement};
use super::{minus_side, plus_side, DgFunction, PenaltyRule};
use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{Axis, BoundaryKind, Mesh, MeshHierarchy, Patch, Side};
use crate::scalar::Real;

/// Quadrature points per axis used for load vectors from closures.
pub const LOAD_POINTS: usize = 5;

#[derive(Debug, Clone)]
pub struct SipOperator<S> {
    pub matrix: CsrMatrix<S>,
    pub penalty: PenaltyRule,
    pub level: u32,
    /// Faces the operator was assembled over.
    pub faces: Vec<usize>,
}

/// The three contributions of the SIP form, assembled separately.
#[derive(Debug, Clone)]
pub struct SipParts<S> {
    pub volume: CsrMatrix<S>,
    pub consistency: CsrMatrix<S>,
    pub penalty: CsrMatrix<S>,
}

#[derive(Debug, Clone, Copy)]
struct Terms {
    volume: bool,
    consistency: bool,
    penalty: bool,
}

const ALL: Terms = Terms {
    volume: true,
    consistency: true,
    penalty: true,
};

struct FaceTables<S> {
    /// Indexed by axis, then `[s][r]` with `0` the minus and `1` the plus side.
    nt: [[[Block<S>; 2]; 2]; 2],
    tt: [[[Block<S>; 2]; 2]; 2],
    /// Indexed by [`Side`]; normal derivative along the outward normal.
    boundary_nt: [Block<S>; 4],
    boundary_tt: [Block<S>; 4],
}

fn pair_block<S: Real>(r: &ReferenceElement<S>, a: &[[S; 4]], b: &[[S; 4]]) -> Block<S> {
    let mut m = zero_block();
    for (q, &w) in r.face_weights.iter().enumerate() {
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += w * a[q][i] * b[q][j];
            }
        }
    }
    m
}

impl<S: Real> FaceTables<S> {
    fn new(r: &ReferenceElement<S>) -> Self {
        let mut nt = [[[zero_block(); 2]; 2]; 2];
        let mut tt = [[[zero_block(); 2]; 2]; 2];
        for (ax, sides) in [[Side::Right, Side::Left], [Side::Top, Side::Bottom]]
            .iter()
            .enumerate()
        {
            let traces: Vec<_> = sides.iter().map(|&s| r.traces(s)).collect();
            let normals: Vec<_> = sides
                .iter()
                .map(|&s| r.normal_derivatives(s, S::one()))
                .collect();
            for s in 0..2 {
                for rr in 0..2 {
                    nt[ax][s][rr] = pair_block(r, &traces[s], &normals[rr]);
                    tt[ax][s][rr] = pair_block(r, &traces[s], &traces[rr]);
                }
            }
        }
        let sides = [Side::Left, Side::Right, Side::Bottom, Side::Top];
        let boundary_nt = sides.map(|s| {
            let sign = if matches!(s, Side::Left | Side::Bottom) {
                -S::one()
            } else {
                S::one()
            };
            pair_block(r, &r.traces(s), &r.normal_derivatives(s, sign))
        });
        let boundary_tt = sides.map(|s| {
            let t = r.traces(s);
            pair_block(r, &t, &t)
        });
        Self {
            nt,
            tt,
            boundary_nt,
            boundary_tt,
        }
    }
}

fn check_coefficient<S: Real>(mesh: &Mesh, coef: &Coefficient<S>) -> Result<()> {
    if coef.level() != mesh.level() || coef.values().len() != mesh.num_elements() {
        return Err(Error::Domain(format!(
            "coefficient of level {} used on a mesh of level {}",
            coef.level(),
            mesh.level()
        )));
    }
    Ok(())
}

type LocalBlock<S> = (usize, usize, Block<S>);

fn face_blocks<S: Real>(
    mesh: &Mesh,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    tables: &FaceTables<S>,
    f: usize,
    local: &(dyn Fn(usize) -> Option<usize> + Sync),
    terms: Terms,
) -> Vec<LocalBlock<S>> {
    let face = mesh.face(f);
    let half = S::lit(0.5);
    match face.plus_element() {
        None => {
            if face.boundary_kind() != Some(BoundaryKind::Dirichlet) {
                return Vec::new();
            }
            let Some(lm) = local(face.minus) else {
                return Vec::new();
            };
            let a = coef.value(face.minus);
            let sigma = pen.face_value(a, None);
            let side = minus_side(face) as usize;
            let (nt, tt) = (&tables.boundary_nt[side], &tables.boundary_tt[side]);
            let mut b = zero_block();
            for i in 0..4 {
                for j in 0..4 {
                    if terms.consistency {
                        b[i][j] -= a * (nt[i][j] + nt[j][i]);
                    }
                    if terms.penalty {
                        b[i][j] += sigma * tt[i][j];
                    }
                }
            }
            vec![(lm, lm, b)]
        }
        Some(p) => {
            let ax = match face.normal_axis {
                Axis::X => 0,
                Axis::Y => 1,
            };
            debug_assert_eq!(
                minus_side(face) as usize,
                [Side::Right, Side::Top][ax] as usize
            );
            debug_assert_eq!(
                plus_side(face) as usize,
                [Side::Left, Side::Bottom][ax] as usize
            );
            let elems = [face.minus, p];
            let loc = [local(face.minus), local(p)];
            let a = [coef.value(face.minus), coef.value(p)];
            let eps = [S::one(), -S::one()];
            let sigma = pen.face_value(a[0], Some(a[1]));
            let mut out = Vec::with_capacity(4);
            for s in 0..2 {
                let Some(ls) = loc[s] else { continue };
                for r in 0..2 {
                    let Some(lr) = loc[r] else { continue };
                    let _ = elems;
                    let (nsr, nrs, tsr) = (
                        &tables.nt[ax][s][r],
                        &tables.nt[ax][r][s],
                        &tables.tt[ax][s][r],
                    );
                    let mut b = zero_block();
                    for i in 0..4 {
                        for j in 0..4 {
                            if terms.consistency {
                                b[i][j] -= half * a[r] * eps[s] * nsr[i][j]
                                    + half * a[s] * eps[r] * nrs[j][i];
                            }
                            if terms.penalty {
                                b[i][j] += sigma * eps[s] * eps[r] * tsr[i][j];
                            }
                        }
                    }
                    out.push((ls, lr, b));
                }
            }
            out
        }
    }
}

fn assemble_scope<S: Real>(
    mesh: &Mesh,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    elements: &[usize],
    local: &(dyn Fn(usize) -> Option<usize> + Sync),
    faces: &[usize],
    terms: Terms,
) -> CsrMatrix<S> {
    let r = ReferenceElement::<S>::new();
    let tables = FaceTables::new(&r);
    let n = 4 * elements.len();
    let face_contrib: Vec<Vec<LocalBlock<S>>> = faces
        .par_iter()
        .map(|&f| face_blocks(mesh, coef, pen, &tables, f, local, terms))
        .collect();
    let nblocks = elements.len() + face_contrib.iter().map(Vec::len).sum::<usize>();
    let mut tb = TripletBuilder::with_capacity(n, n, 16 * nblocks);
    let mut push = |li: usize, lj: usize, b: &Block<S>| {
        for (i, row) in b.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                tb.push(4 * li + i, 4 * lj + j, v);
            }
        }
    };
    if terms.volume {
        for (li, &e) in elements.iter().enumerate() {
            let a = coef.value(e);
            let b: Block<S> = r.stiffness.map(|row| row.map(|k| a * k));
            push(li, li, &b);
        }
    }
    for blocks in &face_contrib {
        for (li, lj, b) in blocks {
            push(*li, *lj, b);
        }
    }
    tb.build()
}

/// SIP operator on the whole mesh.
pub fn assemble_sip<S: Real>(
    mesh: &Mesh,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
) -> Result<SipOperator<S>> {
    check_coefficient(mesh, coef)?;
    let elements: Vec<usize> = (0..mesh.num_elements()).collect();
    let faces: Vec<usize> = (0..mesh.faces().len()).collect();
    let matrix = assemble_scope(mesh, coef, pen, &elements, &|e| Some(e), &faces, ALL);
    Ok(SipOperator {
        matrix,
        penalty: *pen,
        level: mesh.level(),
        faces,
    })
}

/// Volume, consistency (both flux terms) and penalty matrices of the whole mesh.
pub fn assemble_sip_parts<S: Real>(
    mesh: &Mesh,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
) -> Result<SipParts<S>> {
    check_coefficient(mesh, coef)?;
    let elements: Vec<usize> = (0..mesh.num_elements()).collect();
    let faces: Vec<usize> = (0..mesh.faces().len()).collect();
    let only = |volume, consistency, penalty| Terms {
        volume,
        consistency,
        penalty,
    };
    let build = |t| assemble_scope(mesh, coef, pen, &elements, &|e| Some(e), &faces, t);
    Ok(SipParts {
        volume: build(only(true, false, false)),
        consistency: build(only(false, true, false)),
        penalty: build(only(false, false, true)),
    })
}

/// SIP operator for fine functions supported in `patch` (extended by zero outside).
/// Unknowns follow the coarse-major order of `patch.fine_elements`.
pub fn assemble_patch<S: Real>(
    hier: &MeshHierarchy,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    patch: &Patch,
) -> Result<SipOperator<S>> {
    let mesh = hier.fine();
    check_coefficient(mesh, coef)?;
    let local = |e: usize| patch.local_index(e);
    let matrix = assemble_scope(
        mesh,
        coef,
        pen,
        &patch.fine_elements,
        &local,
        &patch.faces,
        ALL,
    );
    Ok(SipOperator {
        matrix,
        penalty: *pen,
        level: mesh.level(),
        faces: patch.faces.clone(),
    })
}

/// Load vector `int_T f phi_{T,j}` by tensor Gauss quadrature with [`LOAD_POINTS`] points per axis.
pub fn assemble_load_fn<S: Real>(mesh: &Mesh, f: impl Fn(S, S) -> S + Sync) -> Vec<S> {
    let (qn, qw) = gauss_legendre(LOAD_POINTS);
    let h = mesh.width::<S>();
    let area = h * h;
    let per: Vec<[S; 4]> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let [x0, y0] = mesh.origin::<S>(e);
            let mut b = [S::zero(); 4];
            for (a, &xa) in qn.iter().enumerate() {
                for (c, &yc) in qn.iter().enumerate() {
                    let (xi, eta) = (S::lit(xa), S::lit(yc));
                    let w = S::lit(qw[a] * qw[c]) * area * f(x0 + h * xi, y0 + h * eta);
                    for (j, bj) in b.iter_mut().enumerate() {
                        *bj += w * basis(j, xi, eta);
                    }
                }
            }
            b
        })
        .collect();
    per.into_iter().flatten().collect()
}

/// Load vector of a discrete right-hand side: the mass matrix applied to `g`.
pub fn assemble_load<S: Real>(mesh: &Mesh, g: &DgFunction<S>) -> Result<Vec<S>> {
    g.check_level(mesh)?;
    let r = ReferenceElement::<S>::new();
    let h = mesh.width::<S>();
    let area = h * h;
    let mut out = Vec::with_capacity(g.coeffs.len());
    for e in 0..mesh.num_elements() {
        let c = g.element(e);
        for i in 0..4 {
            out.push(area * (0..4).map(|j| r.mass[i][j] * c[j]).sum::<S>());
        }
    }
    Ok(out)
}
