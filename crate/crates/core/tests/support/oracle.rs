//! Brute-force reference computations written directly in physical coordinates.
//! They share nothing with the library beyond the mesh topology.

#![allow(dead_code)]

use dgms::mesh::{Axis, BoundaryKind, Mesh};
use nalgebra::DMatrix;

const G4: [(f64, f64); 4] = [
    (0.069_431_844_202_973_71, 0.173_927_422_568_726_93),
    (0.330_009_478_207_571_9, 0.326_072_577_431_273_07),
    (0.669_990_521_792_428_1, 0.326_072_577_431_273_07),
    (0.930_568_155_797_026_3, 0.173_927_422_568_726_93),
];

fn corner(mesh: &Mesh, e: usize) -> (f64, f64) {
    let h = mesh.width_f64();
    let [ix, iy] = mesh.cell(e);
    (ix as f64 * h, iy as f64 * h)
}

/// Value and physical gradient of local basis `j` of element `e` at `(x, y)`.
pub fn basis(mesh: &Mesh, e: usize, j: usize, x: f64, y: f64) -> (f64, [f64; 2]) {
    let h = mesh.width_f64();
    let (x0, y0) = corner(mesh, e);
    let (s, t) = ((x - x0) / h, (y - y0) / h);
    let (fx, dfx) = if j % 2 == 0 {
        (1.0 - s, -1.0 / h)
    } else {
        (s, 1.0 / h)
    };
    let (fy, dfy) = if j / 2 == 0 {
        (1.0 - t, -1.0 / h)
    } else {
        (t, 1.0 / h)
    };
    (fx * fy, [dfx * fy, fx * dfy])
}

pub struct SipOracle {
    pub volume: DMatrix<f64>,
    pub consistency: DMatrix<f64>,
    pub penalty: DMatrix<f64>,
}

impl SipOracle {
    pub fn total(&self) -> DMatrix<f64> {
        &self.volume + &self.consistency + &self.penalty
    }
}

/// Dense SIP form with coercive signs: volume - flux - symmetric flux + penalty.
pub fn sip(mesh: &Mesh, a: &[f64], sigma0: f64, weighted: bool) -> SipOracle {
    let n = 4 * mesh.num_elements();
    let h = mesh.width_f64();
    let mut volume = DMatrix::zeros(n, n);
    let mut consistency = DMatrix::zeros(n, n);
    let mut penalty = DMatrix::zeros(n, n);
    for e in 0..mesh.num_elements() {
        let (x0, y0) = corner(mesh, e);
        for &(qx, wx) in &G4 {
            for &(qy, wy) in &G4 {
                let (x, y) = (x0 + h * qx, y0 + h * qy);
                let w = wx * wy * h * h;
                for i in 0..4 {
                    let gi = basis(mesh, e, i, x, y).1;
                    for j in 0..4 {
                        let gj = basis(mesh, e, j, x, y).1;
                        volume[(4 * e + i, 4 * e + j)] +=
                            w * a[e] * (gi[0] * gj[0] + gi[1] * gj[1]);
                    }
                }
            }
        }
    }
    for face in mesh.faces() {
        if face.boundary_kind() == Some(BoundaryKind::Neumann) {
            continue;
        }
        let [vx, vy] = face.origin;
        let (px, py) = (vx as f64 * h, vy as f64 * h);
        let normal = match face.normal_axis {
            Axis::X => [face.normal_sign as f64, 0.0],
            Axis::Y => [0.0, face.normal_sign as f64],
        };
        // (element, jump sign, average weight)
        let mut sides = vec![(face.minus, 1.0, 1.0)];
        let sigma = match face.plus_element() {
            Some(p) => {
                sides[0].2 = 0.5;
                sides.push((p, -1.0, 0.5));
                if weighted {
                    sigma0 * a[face.minus].max(a[p])
                } else {
                    sigma0
                }
            }
            None => {
                if weighted {
                    sigma0 * a[face.minus]
                } else {
                    sigma0
                }
            }
        };
        for &(t, w) in &G4 {
            let (x, y) = match face.normal_axis {
                Axis::X => (px, py + h * t),
                Axis::Y => (px + h * t, py),
            };
            let w = w * h;
            // dof -> (jump value, average flux)
            let mut vals = Vec::new();
            for &(e, js, aw) in &sides {
                for j in 0..4 {
                    let (v, g) = basis(mesh, e, j, x, y);
                    vals.push((
                        4 * e + j,
                        js * v,
                        aw * a[e] * (g[0] * normal[0] + g[1] * normal[1]),
                    ));
                }
            }
            for &(r, jr, fr) in &vals {
                for &(c, jc, fc) in &vals {
                    consistency[(r, c)] -= w * (fc * jr + fr * jc);
                    penalty[(r, c)] += w * sigma / h * jr * jc;
                }
            }
        }
    }
    SipOracle {
        volume,
        consistency,
        penalty,
    }
}

/// `int_T f phi_{T,j}` with every element split into `sub x sub` cells, 4 Gauss points each.
pub fn load(mesh: &Mesh, f: impl Fn(f64, f64) -> f64, sub: usize) -> Vec<f64> {
    let h = mesh.width_f64();
    let hs = h / sub as f64;
    let mut out = vec![0.0; 4 * mesh.num_elements()];
    for e in 0..mesh.num_elements() {
        let (x0, y0) = corner(mesh, e);
        for a in 0..sub {
            for b in 0..sub {
                for &(qx, wx) in &G4 {
                    for &(qy, wy) in &G4 {
                        let x = x0 + hs * (a as f64 + qx);
                        let y = y0 + hs * (b as f64 + qy);
                        let fv = f(x, y) * wx * wy * hs * hs;
                        for j in 0..4 {
                            out[4 * e + j] += fv * basis(mesh, e, j, x, y).0;
                        }
                    }
                }
            }
        }
    }
    out
}

/// `||u - u_h||_{L2}` with 4x4 Gauss points on each of `sub x sub` sub-cells per element.
pub fn l2_error(mesh: &Mesh, coeffs: &[f64], u: impl Fn(f64, f64) -> f64, sub: usize) -> f64 {
    let h = mesh.width_f64();
    let hs = h / sub as f64;
    let mut acc = 0.0;
    for e in 0..mesh.num_elements() {
        let (x0, y0) = corner(mesh, e);
        for a in 0..sub {
            for b in 0..sub {
                for &(qx, wx) in &G4 {
                    for &(qy, wy) in &G4 {
                        let x = x0 + hs * (a as f64 + qx);
                        let y = y0 + hs * (b as f64 + qy);
                        let uh: f64 = (0..4)
                            .map(|j| coeffs[4 * e + j] * basis(mesh, e, j, x, y).0)
                            .sum();
                        acc += wx * wy * hs * hs * (u(x, y) - uh).powi(2);
                    }
                }
            }
        }
    }
    acc.sqrt()
}

/// Coarse element containing the center of fine element `e`.
fn coarse_of(coarse: &Mesh, fine: &Mesh, e: usize) -> usize {
    let h = fine.width_f64();
    let (x0, y0) = corner(fine, e);
    let hh = coarse.width_f64();
    coarse
        .element_at(
            ((x0 + 0.5 * h) / hh).floor() as i64,
            ((y0 + 0.5 * h) / hh).floor() as i64,
        )
        .expect("fine element outside the coarse mesh")
}

/// `m[T'i, e m] = int lambda_{T',i} phi_{e,m}` over the whole fine mesh.
pub fn coupling(coarse: &Mesh, fine: &Mesh) -> DMatrix<f64> {
    let h = fine.width_f64();
    let mut m = DMatrix::zeros(4 * coarse.num_elements(), 4 * fine.num_elements());
    for e in 0..fine.num_elements() {
        let c = coarse_of(coarse, fine, e);
        let (x0, y0) = corner(fine, e);
        for &(qx, wx) in &G4 {
            for &(qy, wy) in &G4 {
                let (x, y) = (x0 + h * qx, y0 + h * qy);
                for i in 0..4 {
                    let li = basis(coarse, c, i, x, y).0;
                    for k in 0..4 {
                        m[(4 * c + i, 4 * e + k)] +=
                            wx * wy * h * h * li * basis(fine, e, k, x, y).0;
                    }
                }
            }
        }
    }
    m
}

/// Coarse L2 projection coefficients of a fine function.
pub fn projection(coarse: &Mesh, fine: &Mesh, v: &[f64]) -> Vec<f64> {
    let hh = coarse.width_f64();
    let b = coupling(coarse, fine) * nalgebra::DVector::from_column_slice(v);
    let mut out = vec![0.0; 4 * coarse.num_elements()];
    for c in 0..coarse.num_elements() {
        let (x0, y0) = corner(coarse, c);
        let mut mass = DMatrix::<f64>::zeros(4, 4);
        for &(qx, wx) in &G4 {
            for &(qy, wy) in &G4 {
                let (x, y) = (x0 + hh * qx, y0 + hh * qy);
                for i in 0..4 {
                    for j in 0..4 {
                        mass[(i, j)] += wx
                            * wy
                            * hh
                            * hh
                            * basis(coarse, c, i, x, y).0
                            * basis(coarse, c, j, x, y).0;
                    }
                }
            }
        }
        let rhs = nalgebra::DVector::from_iterator(4, (0..4).map(|i| b[4 * c + i]));
        let x = mass.lu().solve(&rhs).unwrap();
        out[4 * c..4 * c + 4].copy_from_slice(x.as_slice());
    }
    out
}

/// Whole-domain corrector of `lambda_{t,j}` from the dense KKT system `[K C^T; C 0]`.
pub fn global_corrector(
    coarse: &Mesh,
    fine: &Mesh,
    k: &DMatrix<f64>,
    t: usize,
    j: usize,
) -> Vec<f64> {
    let n = 4 * fine.num_elements();
    let c = coupling(coarse, fine);
    let m = c.nrows();
    let mut lam = vec![0.0; n];
    let h = fine.width_f64();
    for e in 0..fine.num_elements() {
        if coarse_of(coarse, fine, e) != t {
            continue;
        }
        let (x0, y0) = corner(fine, e);
        for v in 0..4 {
            let (x, y) = (x0 + h * (v % 2) as f64, y0 + h * (v / 2) as f64);
            lam[4 * e + v] = basis(coarse, t, j, x, y).0;
        }
    }
    let b = k * nalgebra::DVector::from_vec(lam);
    let mut big = DMatrix::zeros(n + m, n + m);
    big.view_mut((0, 0), (n, n)).copy_from(k);
    big.view_mut((n, 0), (m, n)).copy_from(&c);
    big.view_mut((0, n), (n, m)).copy_from(&c.transpose());
    let rhs = nalgebra::DVector::from_iterator(
        n + m,
        b.iter().copied().chain(std::iter::repeat_n(0.0, m)),
    );
    let sol = big.lu().solve(&rhs).unwrap();
    sol.rows(0, n).iter().copied().collect()
}
