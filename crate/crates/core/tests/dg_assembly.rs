mod support {
    pub mod oracle;
}

use dgms::coefficient::Coefficient;
use dgms::dg::{
    assemble_load, assemble_load_fn, assemble_sip, assemble_sip_parts, energy_norm, jump_seminorm,
    solve_reference, DgFunction, PenaltyRule, SolverOptions,
};
use dgms::mesh::{BoundaryKind, BoundarySelector, DomainKind, DomainSpec, Line, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::oracle;

fn max_diff(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn matrix_matches_quadrature_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases = [
        (DomainSpec::unit_square_dirichlet(), 1),
        (DomainSpec::unit_square_dirichlet(), 2),
        (DomainSpec::l_shape_mixed(), 2),
    ];
    for (domain, level) in cases {
        let mesh = Mesh::new(&domain, level).unwrap();
        for random in [false, true] {
            let a: Vec<f64> = (0..mesh.num_elements())
                .map(|_| {
                    if random {
                        rng.random_range(0.1..10.0)
                    } else {
                        1.0
                    }
                })
                .collect();
            let coef = Coefficient::from_values(&mesh, a.clone()).unwrap();
            for weighted in [false, true] {
                let pen = if weighted {
                    PenaltyRule::weighted(10.0).unwrap()
                } else {
                    PenaltyRule::plain(7.0).unwrap()
                };
                let m = assemble_sip(&mesh, &coef, &pen).unwrap().matrix.to_dense();
                let o = oracle::sip(&mesh, &a, pen.sigma0, weighted).total();
                assert!(
                    max_diff(&m, &o) < 1e-12,
                    "level {level}: {}",
                    max_diff(&m, &o)
                );
            }
        }
    }
}

#[test]
fn parts_match_oracle_parts() {
    let mesh = Mesh::new(&DomainSpec::l_shape_mixed(), 2).unwrap();
    let a: Vec<f64> = (0..mesh.num_elements())
        .map(|e| 1.0 + (e % 3) as f64)
        .collect();
    let coef = Coefficient::from_values(&mesh, a.clone()).unwrap();
    let parts = assemble_sip_parts(&mesh, &coef, &PenaltyRule::default()).unwrap();
    let o = oracle::sip(&mesh, &a, 10.0, true);
    assert!(max_diff(&parts.volume.to_dense(), &o.volume) < 1e-12);
    assert!(max_diff(&parts.consistency.to_dense(), &o.consistency) < 1e-12);
    assert!(max_diff(&parts.penalty.to_dense(), &o.penalty) < 1e-12);
}

#[test]
fn linear_function_with_single_dirichlet_edge() {
    let n = BoundaryKind::Neumann;
    let domain = DomainSpec::new(
        DomainKind::UnitSquare,
        vec![
            BoundarySelector::new(Line::X(0.0), BoundaryKind::Dirichlet),
            BoundarySelector::new(Line::X(1.0), n),
            BoundarySelector::new(Line::Y(0.0), n),
            BoundarySelector::new(Line::Y(1.0), n),
        ],
    )
    .unwrap();
    for level in [1, 3] {
        let mesh = Mesh::new(&domain, level).unwrap();
        let coef = Coefficient::constant(&mesh, 1.0).unwrap();
        let op = assemble_sip(&mesh, &coef, &PenaltyRule::default()).unwrap();
        let v = DgFunction::<f64>::interpolate(&mesh, |x, _| x);
        assert!((op.matrix.bilinear(&v.coeffs, &v.coeffs) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn load_matches_refined_quadrature() {
    let f = |x: f64, y: f64| {
        1.0 + (2.0 * std::f64::consts::PI * x).cos() * (2.0 * std::f64::consts::PI * y).cos()
    };
    for domain in [
        DomainSpec::unit_square_dirichlet(),
        DomainSpec::l_shape_mixed(),
    ] {
        let mesh = Mesh::new(&domain, 2).unwrap();
        let b = assemble_load_fn::<f64>(&mesh, f);
        let o = oracle::load(&mesh, f, 16);
        let err = b
            .iter()
            .zip(&o)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }
}

#[test]
fn discrete_load_is_mass_times_coefficients() {
    let mesh = Mesh::new(&DomainSpec::unit_square_dirichlet(), 2).unwrap();
    let g = DgFunction::<f64>::interpolate(&mesh, |x, y| 1.0 + x - 2.0 * y);
    let a = assemble_load(&mesh, &g).unwrap();
    let b = assemble_load_fn::<f64>(&mesh, |x, y| 1.0 + x - 2.0 * y);
    let err = a
        .iter()
        .zip(&b)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-15);
}

#[test]
fn energy_norm_matches_volume_plus_penalty() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mesh = Mesh::new(&DomainSpec::l_shape_mixed(), 3).unwrap();
    let a: Vec<f64> = (0..mesh.num_elements())
        .map(|_| rng.random_range(0.5..4.0))
        .collect();
    let coef = Coefficient::from_values(&mesh, a.clone()).unwrap();
    let pen = PenaltyRule::default();
    let o = oracle::sip(&mesh, &a, 10.0, true);
    let m = &o.volume + &o.penalty;
    for _ in 0..5 {
        let v: Vec<f64> = (0..4 * mesh.num_elements())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let x = nalgebra::DVector::from_vec(v.clone());
        let expect = (x.transpose() * &m * &x)[(0, 0)];
        let vf = DgFunction::from_coeffs(&mesh, v).unwrap();
        let e = energy_norm(&mesh, &coef, &pen, &vf).unwrap();
        assert!((e * e - expect).abs() < 1e-10 * expect);
        let j = jump_seminorm(&mesh, &coef, &pen, &vf).unwrap();
        let pj = (x.transpose() * &o.penalty * &x)[(0, 0)];
        assert!((j * j - pj).abs() < 1e-10 * pj);
    }
}

#[test]
fn zero_load_gives_zero_solution() {
    let mesh = Mesh::new(&DomainSpec::unit_square_dirichlet(), 4).unwrap();
    let coef = Coefficient::constant(&mesh, 1.0).unwrap();
    let b = vec![0.0; 4 * mesh.num_elements()];
    let s = solve_reference(
        &mesh,
        &coef,
        &PenaltyRule::default(),
        &b,
        &SolverOptions::default(),
    )
    .unwrap();
    assert!(s.u.coeffs.iter().all(|&c| c == 0.0));
}

#[test]
fn iterative_matches_dense_on_small_mesh() {
    let mesh = Mesh::new(&DomainSpec::l_shape_mixed(), 2).unwrap();
    let coef = Coefficient::constant(&mesh, 1.0).unwrap();
    let pen = PenaltyRule::default();
    let b = assemble_load_fn::<f64>(&mesh, |x, y| 1.0 + x * y);
    let dense = solve_reference(&mesh, &coef, &pen, &b, &SolverOptions::default()).unwrap();
    let cg_opts = SolverOptions {
        dense_max_level: 0,
        rtol: 1e-13,
        ..SolverOptions::default()
    };
    let cg = solve_reference(&mesh, &coef, &pen, &b, &cg_opts).unwrap();
    assert!(cg.iterations > 0);
    let scale = dense.u.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let err = dense
        .u
        .coeffs
        .iter()
        .zip(&cg.u.coeffs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-10 * scale, "{err}");
}

#[test]
fn sparse_direct_matches_dense() {
    let mesh = Mesh::new(&DomainSpec::l_shape_mixed(), 3).unwrap();
    let coef = Coefficient::periodic_stripes(&mesh, 0.25, 0.01, 1.0, dgms::mesh::Axis::X).unwrap();
    let pen = PenaltyRule::default();
    let b = assemble_load_fn::<f64>(&mesh, |x, y| (x - y).sin() + 2.0);
    let dense = solve_reference(&mesh, &coef, &pen, &b, &SolverOptions::default()).unwrap();
    let opts = SolverOptions {
        dense_max_level: 0,
        direct: true,
        ..SolverOptions::default()
    };
    let direct = solve_reference(&mesh, &coef, &pen, &b, &opts).unwrap();
    assert_eq!(direct.iterations, 0);
    assert!(direct.residual < 1e-13, "{}", direct.residual);
    let scale = dense.u.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let err = dense
        .u
        .coeffs
        .iter()
        .zip(&direct.u.coeffs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-11 * scale, "{err}");
}

#[test]
fn refinement_tightens_a_loose_solve() {
    let mesh = Mesh::new(&DomainSpec::l_shape_mixed(), 4).unwrap();
    let coef = Coefficient::periodic_stripes(&mesh, 0.125, 0.01, 1.0, dgms::mesh::Axis::Y).unwrap();
    let pen = PenaltyRule::default();
    let b = assemble_load_fn::<f64>(&mesh, |x, y| 1.0 + x * y);
    let loose = SolverOptions {
        dense_max_level: 0,
        rtol: 1e-4,
        ..SolverOptions::default()
    };
    let once = solve_reference(&mesh, &coef, &pen, &b, &loose).unwrap();
    let refined = solve_reference(
        &mesh,
        &coef,
        &pen,
        &b,
        &SolverOptions {
            refinement_steps: 4,
            ..loose
        },
    )
    .unwrap();
    let direct = solve_reference(
        &mesh,
        &coef,
        &pen,
        &b,
        &SolverOptions {
            direct: true,
            ..loose
        },
    )
    .unwrap();
    assert!(once.residual > 1e-6, "{}", once.residual);
    assert!(
        refined.residual < 10.0 * direct.residual.max(1e-15),
        "{} vs direct {}",
        refined.residual,
        direct.residual
    );
    assert!(refined.iterations > once.iterations);
}

#[test]
fn galerkin_residual_vanishes() {
    let mesh = Mesh::new(&DomainSpec::unit_square_dirichlet(), 5).unwrap();
    let coef = Coefficient::periodic_stripes(&mesh, 0.125, 1.0, 50.0, dgms::mesh::Axis::Y).unwrap();
    let pen = PenaltyRule::default();
    let b = assemble_load_fn::<f64>(&mesh, |_, _| 1.0);
    let s = solve_reference(&mesh, &coef, &pen, &b, &SolverOptions::default()).unwrap();
    assert!(s.residual <= 1e-10);
    let op = assemble_sip(&mesh, &coef, &pen).unwrap();
    let r = op.matrix.mul_vec(&s.u.coeffs);
    let bn = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rn = r
        .iter()
        .zip(&b)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(rn <= 1e-10 * bn);
}

#[test]
fn manufactured_solution_converges_quadratically_in_l2() {
    use std::f64::consts::PI;
    let u = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    let f = |x: f64, y: f64| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin();
    let mut errs = Vec::new();
    for level in 3..=6 {
        let mesh = Mesh::new(&DomainSpec::unit_square_dirichlet(), level).unwrap();
        let coef = Coefficient::constant(&mesh, 1.0).unwrap();
        let b = assemble_load_fn::<f64>(&mesh, f);
        let s = solve_reference(
            &mesh,
            &coef,
            &PenaltyRule::default(),
            &b,
            &SolverOptions::default(),
        )
        .unwrap();
        errs.push(oracle::l2_error(&mesh, &s.u.coeffs, u, 2));
    }
    for w in errs.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((rate - 2.0).abs() < 0.15, "rate {rate}, errors {errs:?}");
    }
}

#[test]
fn single_precision_instantiation() {
    let mesh = Mesh::new(&DomainSpec::unit_square_dirichlet(), 3).unwrap();
    let coef = Coefficient::<f32>::constant(&mesh, 1.0).unwrap();
    let b = assemble_load_fn::<f32>(&mesh, |_, _| 1.0);
    let opts = SolverOptions {
        rtol: 1e-5,
        dense_max_level: 0,
        ..SolverOptions::default()
    };
    let s32 = solve_reference(&mesh, &coef, &PenaltyRule::default(), &b, &opts).unwrap();
    let coef64 = Coefficient::<f64>::constant(&mesh, 1.0).unwrap();
    let b64 = assemble_load_fn::<f64>(&mesh, |_, _| 1.0);
    let s64 = solve_reference(
        &mesh,
        &coef64,
        &PenaltyRule::default(),
        &b64,
        &SolverOptions::default(),
    )
    .unwrap();
    let err = s32
        .u
        .coeffs
        .iter()
        .zip(&s64.u.coeffs)
        .map(|(a, b)| (*a as f64 - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-4);
}
