//! Invariant suite behind the `verify` subcommand.

use std::time::Instant;

use dgms::dg::{
    energy_norm, l2_norm, verify_face_identities, FaceSample, PenaltyRule, SolverOptions,
};
use dgms::mesh::{build_hierarchy, DomainSpec};
use dgms::multiscale::{corrector, solve_ideal_msfem, GlobalOptions};
use dgms::{CoarseFineMap, Coefficient, DgFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Worst measured value; passes when it does not exceed `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

fn timed(name: &str, tolerance: f64, f: impl FnOnce() -> dgms::Result<f64>) -> dgms::Result<Check> {
    let start = Instant::now();
    let value = f()?;
    Ok(Check {
        name: name.into(),
        value,
        tolerance,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Largest residual of the face identities over `n` random trace tuples in `[-1, 1]`.
pub fn face_identities(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair = |rng: &mut ChaCha8Rng| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let samples: Vec<FaceSample<f64>> = (0..n)
        .map(|_| FaceSample {
            v: pair(&mut rng),
            w: pair(&mut rng),
            u: pair(&mut rng),
        })
        .collect();
    verify_face_identities(&samples)
}

/// Relative Pythagoras defect and idempotence defect of the coarse projection
/// over `n` random fine functions.
pub fn projection_defects(n: usize, seed: u64) -> dgms::Result<[f64; 2]> {
    let hier = build_hierarchy(&DomainSpec::l_shape_mixed(), 2, 4)?;
    let map = CoarseFineMap::new(&hier);
    let fine = hier.fine();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 2];
    for _ in 0..n {
        let v = DgFunction::from_coeffs(
            fine,
            (0..4 * fine.num_elements())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )?;
        let pv = map.inject_coarse(&hier, &map.project_coarse(&hier, &v)?)?;
        let ppv = map.inject_coarse(&hier, &map.project_coarse(&hier, &pv)?)?;
        let (a, b, c) = (
            l2_norm(fine, &v)?,
            l2_norm(fine, &pv)?,
            l2_norm(fine, &v.sub(&pv))?,
        );
        worst[0] = worst[0].max((a * a - b * b - c * c).abs() / (a * a));
        worst[1] = worst[1].max(l2_norm(fine, &ppv.sub(&pv))? / b);
    }
    Ok(worst)
}

/// Largest `||Pi_H phi|| / ||phi||` over all correctors of a level-2 / level-4 hierarchy.
pub fn corrector_constraint(layers: usize) -> dgms::Result<f64> {
    let hier = build_hierarchy(&DomainSpec::l_shape_mixed(), 2, 4)?;
    let coef = Coefficient::periodic_stripes(hier.fine(), 0.125, 0.01, 1.0, dgms::mesh::Axis::X)?;
    let pen = PenaltyRule::default();
    let map = CoarseFineMap::new(&hier);
    let mut worst = 0.0f64;
    for t in 0..hier.coarse().num_elements() {
        for j in 0..4 {
            let phi = corrector(&hier, &coef, &pen, t, j, layers)?.to_function(&hier)?;
            let p = map.project_coarse(&hier, &phi)?;
            worst = worst.max(l2_norm(hier.coarse(), &p)? / l2_norm(hier.fine(), &phi)?);
        }
    }
    Ok(worst)
}

/// Largest `|||u_h - u_ms||| / |||u_h|||` of the ideal method for a coarse forcing,
/// coarse levels 1 to 3, fine level two above.
pub fn ideal_method() -> dgms::Result<f64> {
    let mut worst = 0.0f64;
    for coarse in 1..=3 {
        let hier = build_hierarchy(&DomainSpec::l_shape_mixed(), coarse, coarse + 2)?;
        let fine = hier.fine();
        let coef = Coefficient::constant(fine, 1.0)?;
        let pen = PenaltyRule::default();
        let map = CoarseFineMap::new(&hier);
        let tau = std::f64::consts::TAU;
        let g = DgFunction::interpolate(fine, |x: f64, y: f64| {
            1.0 + (tau * x).cos() * (tau * y).cos()
        });
        let f = map.inject_coarse(&hier, &map.project_coarse(&hier, &g)?)?;
        let ideal = solve_ideal_msfem(&hier, &coef, &pen, &f, &GlobalOptions::default())?;
        let load = dgms::dg::assemble_load(fine, &f)?;
        let opts = SolverOptions {
            dense_max_level: 5,
            ..SolverOptions::default()
        };
        let uh = dgms::dg::solve_reference(fine, &coef, &pen, &load, &opts)?.u;
        let err = energy_norm(fine, &coef, &pen, &uh.sub(&ideal.solution.u))?;
        worst = worst.max(err / energy_norm(fine, &coef, &pen, &uh)?);
    }
    Ok(worst)
}

pub fn run_verify() -> dgms::Result<Vec<Check>> {
    let mut checks = vec![timed("face identities, 1e4 random tuples", 1e-13, || {
        Ok(face_identities(10_000, 1))
    })?];
    let start = Instant::now();
    let [pyth, idem] = projection_defects(20, 2)?;
    let seconds = start.elapsed().as_secs_f64();
    checks.push(Check {
        name: "L2 Pythagoras of the coarse projection".into(),
        value: pyth,
        tolerance: 1e-12,
        seconds,
    });
    checks.push(Check {
        name: "coarse projection idempotence".into(),
        value: idem,
        tolerance: 1e-12,
        seconds,
    });
    checks.push(timed(
        "corrector constraint ||Pi_H phi|| / ||phi||",
        1e-10,
        || corrector_constraint(2),
    )?);
    checks.push(timed("ideal method, coarse forcing", 1e-8, ideal_method)?);
    Ok(checks)
}
