//! Coarse L2 projection, coarse-to-fine injection and patch constraint matrices.

use crate::dg::reference::{basis, Block, ReferenceElement};
use crate::dg::DgFunction;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{Mesh, MeshHierarchy, Patch};
use crate::scalar::Real;

/// Element-local transfer tables between the two levels of a hierarchy.
#[derive(Debug, Clone)]
pub struct CoarseFineMap<S> {
    ratio: usize,
    /// Per child: `interp[k][i][j]` is coarse basis `j` at fine vertex `i` of child `k`.
    interp: Vec<Block<S>>,
    /// Per child, `coupling[k][j][m] = H^-2 int lambda_j phi_m` for fine basis `m` of child `k`.
    coupling: Vec<Block<S>>,
    /// Inverse reference mass matrix.
    mass_inv: Block<S>,
}

fn mat_mul<S: Real>(a: &Block<S>, b: &Block<S>) -> Block<S> {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|l| a[i][l] * b[l][j]).sum()))
}

fn transpose<S: Real>(a: &Block<S>) -> Block<S> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

fn apply<S: Real>(a: &Block<S>, x: &[S]) -> [S; 4] {
    std::array::from_fn(|i| (0..4).map(|j| a[i][j] * x[j]).sum())
}

impl<S: Real> CoarseFineMap<S> {
    pub fn new(hier: &MeshHierarchy) -> Self {
        let r = hier.ratio();
        let rs = S::lit(r as f64);
        let reference = ReferenceElement::<S>::new();
        let mut interp = Vec::with_capacity(r * r);
        for ky in 0..r {
            for kx in 0..r {
                interp.push(std::array::from_fn(|i| {
                    let xi = S::lit((kx + (i & 1)) as f64) / rs;
                    let eta = S::lit((ky + (i >> 1)) as f64) / rs;
                    std::array::from_fn(|j| basis(j, xi, eta))
                }));
            }
        }
        let scale = S::one() / (rs * rs);
        let coupling = interp
            .iter()
            .map(|rk| mat_mul(&transpose(rk), &reference.mass).map(|row| row.map(|x| x * scale)))
            .collect();
        // The reference mass is the tensor product of [[1/3,1/6],[1/6,1/3]], whose inverse is [[4,-2],[-2,4]].
        let m1 = [[S::lit(4.0), S::lit(-2.0)], [S::lit(-2.0), S::lit(4.0)]];
        let mass_inv =
            std::array::from_fn(|i| std::array::from_fn(|j| m1[i & 1][j & 1] * m1[i >> 1][j >> 1]));
        Self {
            ratio: r,
            interp,
            coupling,
            mass_inv,
        }
    }

    pub fn ratio(&self) -> usize {
        self.ratio
    }

    /// Coarse basis values at the fine vertices of child `k`.
    pub fn interpolation(&self, k: usize) -> &Block<S> {
        &self.interp[k]
    }

    /// `H^-2 int lambda_j phi_m` for the fine basis of child `k`.
    pub fn coupling(&self, k: usize) -> &Block<S> {
        &self.coupling[k]
    }

    /// Coarse L2 projection of the fine restriction to coarse element `c`.
    pub fn project_element(&self, hier: &MeshHierarchy, v: &[S], c: usize) -> [S; 4] {
        let mut rhs = [S::zero(); 4];
        for (k, &e) in hier.children(c).iter().enumerate() {
            let b = apply(&self.coupling[k], &v[4 * e..4 * e + 4]);
            for i in 0..4 {
                rhs[i] += b[i];
            }
        }
        apply(&self.mass_inv, &rhs)
    }

    /// `Pi_H v` as a coarse function.
    pub fn project_coarse(&self, hier: &MeshHierarchy, v: &DgFunction<S>) -> Result<DgFunction<S>> {
        v.check_level(hier.fine())?;
        let coeffs = (0..hier.coarse().num_elements())
            .flat_map(|c| self.project_element(hier, &v.coeffs, c))
            .collect();
        DgFunction::from_coeffs(hier.coarse(), coeffs)
    }

    /// Exact fine representation of a coarse function.
    pub fn inject_coarse(&self, hier: &MeshHierarchy, w: &DgFunction<S>) -> Result<DgFunction<S>> {
        w.check_level(hier.coarse())?;
        let mut coeffs = vec![S::zero(); 4 * hier.fine().num_elements()];
        for c in 0..hier.coarse().num_elements() {
            for (k, &e) in hier.children(c).iter().enumerate() {
                coeffs[4 * e..4 * e + 4].copy_from_slice(&apply(&self.interp[k], w.element(c)));
            }
        }
        DgFunction::from_coeffs(hier.fine(), coeffs)
    }

    /// `v - Pi_H v`, represented on the fine mesh.
    pub fn fine_scale_part(
        &self,
        hier: &MeshHierarchy,
        v: &DgFunction<S>,
    ) -> Result<DgFunction<S>> {
        let coarse = self.inject_coarse(hier, &self.project_coarse(hier, v)?)?;
        Ok(v.sub(&coarse))
    }

    /// Rows `int lambda_{T',i} v` for every coarse `T'` in the patch, columns the patch
    /// unknowns in coarse-major order. Row `4 p + i` belongs to `patch.members[p]`.
    pub fn constraint_matrix(&self, hier: &MeshHierarchy, patch: &Patch) -> Result<CsrMatrix<S>> {
        if self.ratio < 2 {
            return Err(Error::Config(
                "constraint matrices need at least one refinement between the levels".into(),
            ));
        }
        if patch.members.is_empty() {
            return Err(Error::Domain("empty patch".into()));
        }
        let nc = self.ratio * self.ratio;
        let hh = hier.coarse().width::<S>();
        let area = hh * hh;
        let m = 4 * patch.members.len();
        let mut tb =
            TripletBuilder::with_capacity(m, patch.num_fine_dofs(), 16 * nc * patch.members.len());
        for p in 0..patch.members.len() {
            for k in 0..nc {
                let col0 = 4 * (p * nc + k);
                for (i, row) in self.coupling[k].iter().enumerate() {
                    for (j, &x) in row.iter().enumerate() {
                        tb.push(4 * p + i, col0 + j, area * x);
                    }
                }
            }
        }
        Ok(tb.build())
    }
}

/// Element means of `v`.
pub fn project_p0<S: Real>(mesh: &Mesh, v: &DgFunction<S>) -> Result<Vec<S>> {
    v.check_level(mesh)?;
    let q = S::lit(0.25);
    Ok((0..mesh.num_elements())
        .map(|e| v.element(e).iter().copied().sum::<S>() * q)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::l2_norm;
    use crate::mesh::{build_hierarchy, DomainSpec};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fine(hier: &MeshHierarchy, seed: u64) -> DgFunction<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4 * hier.fine().num_elements();
        DgFunction::from_coeffs(
            hier.fine(),
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_and_injection_roundtrip() {
        let hier = build_hierarchy(&DomainSpec::l_shape_mixed(), 1, 3).unwrap();
        let map = CoarseFineMap::<f64>::new(&hier);
        let one = DgFunction::interpolate(hier.fine(), |_, _| 1.0);
        let p = map.project_coarse(&hier, &one).unwrap();
        assert!(p.coeffs.iter().all(|c| (c - 1.0).abs() < 1e-14));
        let xy = DgFunction::interpolate(hier.coarse(), |x, y| x * y);
        let fine = map.inject_coarse(&hier, &xy).unwrap();
        let direct = DgFunction::interpolate(hier.fine(), |x, y| x * y);
        assert!(fine.sub(&direct).coeffs.iter().all(|c| c.abs() < 1e-15));
        assert!(map
            .project_coarse(&hier, &fine)
            .unwrap()
            .sub(&xy)
            .coeffs
            .iter()
            .all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn pythagoras_and_orthogonality() {
        let hier = build_hierarchy(&DomainSpec::unit_square_dirichlet(), 1, 4).unwrap();
        let map = CoarseFineMap::<f64>::new(&hier);
        let v = random_fine(&hier, 3);
        let coarse = map
            .inject_coarse(&hier, &map.project_coarse(&hier, &v).unwrap())
            .unwrap();
        let fine = map.fine_scale_part(&hier, &v).unwrap();
        let n = |f: &DgFunction<f64>| l2_norm(hier.fine(), f).unwrap().powi(2);
        assert!((n(&v) - n(&coarse) - n(&fine)).abs() < 1e-12);
        assert!(map
            .project_coarse(&hier, &fine)
            .unwrap()
            .coeffs
            .iter()
            .all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn single_element_constraint_has_full_rank() {
        let hier = build_hierarchy(&DomainSpec::unit_square_dirichlet(), 0, 1).unwrap();
        let map = CoarseFineMap::<f64>::new(&hier);
        let patch = hier.patch(0, 1).unwrap();
        let c = map.constraint_matrix(&hier, &patch).unwrap().to_dense();
        assert_eq!((c.nrows(), c.ncols()), (4, 16));
        assert_eq!(c.clone().svd(false, false).rank(1e-12), 4);
    }

    #[test]
    fn constraint_of_injected_basis_is_coarse_mass() {
        let hier = build_hierarchy(&DomainSpec::unit_square_dirichlet(), 1, 3).unwrap();
        let map = CoarseFineMap::<f64>::new(&hier);
        let patch = hier.patch(0, 1).unwrap();
        let c = map.constraint_matrix(&hier, &patch).unwrap();
        let r = ReferenceElement::<f64>::new();
        let hh = hier.coarse().width_f64();
        for j in 0..4 {
            let mut w = DgFunction::zeros(hier.coarse());
            w.coeffs[4 * patch.members[0] + j] = 1.0;
            let fine = map.inject_coarse(&hier, &w).unwrap();
            let local: Vec<f64> = patch
                .fine_elements
                .iter()
                .flat_map(|&e| fine.element(e).to_vec())
                .collect();
            let col = c.mul_vec(&local);
            for i in 0..4 {
                assert!((col[i] - hh * hh * r.mass[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fine_scale_part_satisfies_patch_constraints() {
        let hier = build_hierarchy(&DomainSpec::l_shape_mixed(), 2, 4).unwrap();
        let map = CoarseFineMap::<f64>::new(&hier);
        let v = map.fine_scale_part(&hier, &random_fine(&hier, 5)).unwrap();
        let patch = hier.patch(4, 2).unwrap();
        let local: Vec<f64> = patch
            .fine_elements
            .iter()
            .flat_map(|&e| v.element(e).to_vec())
            .collect();
        let cv = map
            .constraint_matrix(&hier, &patch)
            .unwrap()
            .mul_vec(&local);
        assert!(cv.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn projection_matches_dense_local_mass_solve() {
        let hier = build_hierarchy(&DomainSpec::unit_square_dirichlet(), 1, 3).unwrap();
        let map = CoarseFineMap::<f64>::new(&hier);
        let v = random_fine(&hier, 9);
        let p = map.project_coarse(&hier, &v).unwrap();
        let r = ReferenceElement::<f64>::new();
        let mass = DMatrix::from_fn(4, 4, |i, j| r.mass[i][j]);
        let patch = hier.patch(2, 1).unwrap();
        let c = map.constraint_matrix(&hier, &patch).unwrap();
        let p0 = patch.members.iter().position(|&m| m == 2).unwrap();
        let local: Vec<f64> = patch
            .fine_elements
            .iter()
            .flat_map(|&e| v.element(e).to_vec())
            .collect();
        let rhs = c.mul_vec(&local);
        let hh = hier.coarse().width_f64();
        let b = nalgebra::DVector::from_fn(4, |i, _| rhs[4 * p0 + i] / (hh * hh));
        let w = mass.lu().solve(&b).unwrap();
        for i in 0..4 {
            assert!((w[i] - p.element(2)[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn element_means() {
        let mesh = Mesh::new(&DomainSpec::unit_square_dirichlet(), 0).unwrap();
        let v = DgFunction::<f64>::interpolate(&mesh, |x, _| x);
        assert_eq!(project_p0(&mesh, &v).unwrap(), vec![0.5]);
    }
}
