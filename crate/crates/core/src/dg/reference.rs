//! Bilinear reference element on `[0,1]^2` and Gauss-Legendre rules.
//!
//! Local basis function `j` is attached to vertex `(j & 1, j >> 1)`:
//! `phi_j(xi, eta) = l_{j & 1}(xi) * l_{j >> 1}(eta)` with `l_0(t) = 1 - t`, `l_1(t) = t`.

use crate::mesh::Side;
use crate::scalar::Real;

pub type Block<S> = [[S; 4]; 4];

pub fn zero_block<S: Real>() -> Block<S> {
    [[S::zero(); 4]; 4]
}

/// Gauss-Legendre nodes and weights on `[0, 1]` (weights sum to one).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton on P_n from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[inline]
fn lin<S: Real>(k: usize, t: S) -> S {
    if k == 0 {
        S::one() - t
    } else {
        t
    }
}

#[inline]
fn dlin<S: Real>(k: usize) -> S {
    if k == 0 {
        -S::one()
    } else {
        S::one()
    }
}

#[inline]
pub fn basis<S: Real>(j: usize, xi: S, eta: S) -> S {
    lin(j & 1, xi) * lin(j >> 1, eta)
}

/// Reference gradient `(d/dxi, d/deta)`.
#[inline]
pub fn basis_grad<S: Real>(j: usize, xi: S, eta: S) -> [S; 2] {
    [
        dlin::<S>(j & 1) * lin(j >> 1, eta),
        lin(j & 1, xi) * dlin::<S>(j >> 1),
    ]
}

/// Reference coordinates of the point at parameter `t` along a local edge.
pub fn edge_point<S: Real>(side: Side, t: S) -> (S, S) {
    match side {
        Side::Left => (S::zero(), t),
        Side::Right => (S::one(), t),
        Side::Bottom => (t, S::zero()),
        Side::Top => (t, S::one()),
    }
}

/// Tabulated reference quantities, all independent of the element width
/// (the bilinear form is scale free in two dimensions; only the mass scales with `h^2`).
#[derive(Debug, Clone)]
pub struct ReferenceElement<S> {
    pub mass: Block<S>,
    pub stiffness: Block<S>,
    pub face_nodes: Vec<S>,
    pub face_weights: Vec<S>,
}

impl<S: Real> ReferenceElement<S> {
    pub fn new() -> Self {
        let (qn, qw) = gauss_legendre(2);
        let mut mass = zero_block();
        let mut stiffness = zero_block();
        for (a, &xa) in qn.iter().enumerate() {
            for (b, &yb) in qn.iter().enumerate() {
                let w = S::lit(qw[a] * qw[b]);
                let (x, y) = (S::lit(xa), S::lit(yb));
                for i in 0..4 {
                    let (pi, gi) = (basis::<S>(i, x, y), basis_grad::<S>(i, x, y));
                    for j in 0..4 {
                        let (pj, gj) = (basis::<S>(j, x, y), basis_grad::<S>(j, x, y));
                        mass[i][j] += w * pi * pj;
                        stiffness[i][j] += w * (gi[0] * gj[0] + gi[1] * gj[1]);
                    }
                }
            }
        }
        let (fnodes, fweights) = gauss_legendre(3);
        Self {
            mass,
            stiffness,
            face_nodes: fnodes.into_iter().map(S::lit).collect(),
            face_weights: fweights.into_iter().map(S::lit).collect(),
        }
    }

    /// Traces of the four basis functions at the face quadrature nodes of `side`.
    pub fn traces(&self, side: Side) -> Vec<[S; 4]> {
        self.face_nodes
            .iter()
            .map(|&t| {
                let (xi, eta) = edge_point(side, t);
                std::array::from_fn(|j| basis(j, xi, eta))
            })
            .collect()
    }

    /// Reference normal derivatives `sign * d/d(axis)` at the face nodes of `side`.
    pub fn normal_derivatives(&self, side: Side, sign: S) -> Vec<[S; 4]> {
        let axis = match side {
            Side::Left | Side::Right => 0,
            Side::Bottom | Side::Top => 1,
        };
        self.face_nodes
            .iter()
            .map(|&t| {
                let (xi, eta) = edge_point(side, t);
                std::array::from_fn(|j| sign * basis_grad(j, xi, eta)[axis])
            })
            .collect()
    }
}

impl<S: Real> Default for ReferenceElement<S> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials() {
        for n in 1..=6 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!(
                    (q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14,
                    "n={n} deg={deg}"
                );
            }
        }
    }

    #[test]
    fn reference_matrices() {
        let r = ReferenceElement::<f64>::new();
        // Mass entries are (1/9, 1/18, 1/36) and each row sums to 1/4.
        assert!((r.mass[0][0] - 1.0 / 9.0).abs() < 1e-15);
        assert!((r.mass[0][3] - 1.0 / 36.0).abs() < 1e-15);
        for i in 0..4 {
            assert!((r.mass[i].iter().sum::<f64>() - 0.25).abs() < 1e-15);
            assert!(r.stiffness[i].iter().sum::<f64>().abs() < 1e-15);
        }
        assert!((r.stiffness[0][0] - 2.0 / 3.0).abs() < 1e-15);
    }
}
