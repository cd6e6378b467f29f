//! Acceptance suite: one PASS/FAIL line per criterion, then a single assertion.
//!
//! The full-size studies take several minutes each on one core.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use dgms::dg::{
    assemble_load_fn, assemble_sip, solve_reference, DgFunction, PenaltyRule, SolverOptions,
};
use dgms::mesh::{build_hierarchy, DomainSpec};
use dgms::multiscale::corrector;
use dgms::{CoarseFineMap, Coefficient};
use dgms_cli::app::convergence_report;
use dgms_cli::config::StudyConfig;
use dgms_cli::study::{
    run_convergence_study, run_decay_study, run_localization_sweep, run_qoi_study,
    ConvergenceStudy, DecayStudy,
};
use dgms_cli::verify::{corrector_constraint, face_identities, ideal_method, projection_defects};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u32,
    passed: bool,
    detail: String,
}

fn report(out: &mut Vec<Outcome>, id: u32, passed: bool, detail: String) {
    let line = format!(
        "{} criterion {id:>2}: {detail}\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let mut so = std::io::stdout().lock();
    so.write_all(line.as_bytes()).unwrap();
    so.flush().unwrap();
    out.push(Outcome { id, passed, detail });
}

fn config(out: &Path, pairs: &[(&str, &str)]) -> StudyConfig {
    let mut cfg = StudyConfig::default();
    for (k, v) in pairs {
        cfg.set(k, v).unwrap();
    }
    cfg.out = out.to_path_buf();
    cfg
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Matrix, projection, load, reference solve and one corrector against dense oracles.
fn oracle_defects() -> [f64; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let hier = build_hierarchy(&DomainSpec::unit_square_dirichlet(), 1, 2).unwrap();
    let fine = hier.fine();
    let a: Vec<f64> = (0..fine.num_elements())
        .map(|_| rng.random_range(0.1..10.0))
        .collect();
    let coef = Coefficient::from_values(fine, a.clone()).unwrap();
    let pen = PenaltyRule::default();
    let k = oracle::sip(fine, &a, 10.0, true).total();
    let m = assemble_sip(fine, &coef, &pen).unwrap().matrix.to_dense();
    let matrix = (&m - &k).abs().max();

    let v: Vec<f64> = (0..4 * fine.num_elements())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let map = CoarseFineMap::new(&hier);
    let p = map
        .project_coarse(&hier, &DgFunction::from_coeffs(fine, v.clone()).unwrap())
        .unwrap();
    let projection = max_abs_diff(&p.coeffs, &oracle::projection(hier.coarse(), fine, &v));

    let f = |x: f64, y: f64| 1.0 + (7.0 * x).sin() * (3.0 * y).cos();
    let b = assemble_load_fn::<f64>(fine, f);
    let bo = oracle::load(fine, f, 16);
    let load = max_abs_diff(&b, &bo);

    let u = solve_reference(fine, &coef, &pen, &b, &SolverOptions::default())
        .unwrap()
        .u;
    let want = k
        .clone()
        .lu()
        .solve(&nalgebra::DVector::from_vec(b))
        .unwrap();
    let solve = max_abs_diff(&u.coeffs, want.as_slice());

    let mut worst = 0.0f64;
    for (t, j) in [(0, 1), (3, 3)] {
        let phi = corrector(&hier, &coef, &pen, t, j, 2)
            .unwrap()
            .to_function(&hier)
            .unwrap();
        let want = oracle::global_corrector(hier.coarse(), fine, &k, t, j);
        worst = worst.max(max_abs_diff(&phi.coeffs, &want));
    }
    [matrix, projection, load, solve, worst]
}

fn run_study(qoi: bool, cfg: &StudyConfig) -> (ConvergenceStudy, f64) {
    let start = Instant::now();
    let study = if qoi {
        run_qoi_study(cfg)
    } else {
        run_convergence_study(cfg)
    }
    .unwrap();
    let seconds = start.elapsed().as_secs_f64();
    convergence_report(cfg, &study).unwrap();
    (study, seconds)
}

fn decay_line(name: &str, d: &DecayStudy) -> (bool, String) {
    let gamma = d.gamma.unwrap_or(f64::NAN);
    (
        gamma < 1.0 && d.nonincreasing,
        format!(
            "{name}: gamma {gamma:.3}, tails nonincreasing {}",
            d.nonincreasing
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let mut out = vec![];

    let start = Instant::now();
    let worst = face_identities(10_000, 1);
    let secs = start.elapsed().as_secs_f64();
    report(
        &mut out,
        1,
        worst < 1e-13 && secs < 1.0,
        format!("face identities residual {worst:.2e} (< 1e-13), {secs:.3} s (< 1 s)"),
    );

    let start = Instant::now();
    let defects = oracle_defects();
    let secs = start.elapsed().as_secs_f64();
    let worst = defects.iter().copied().fold(0.0, f64::max);
    report(
        &mut out,
        2,
        worst < 1e-10 && secs < 5.0,
        format!(
            "oracle gaps matrix {:.1e}, projection {:.1e}, load {:.1e}, solve {:.1e}, corrector {:.1e} (< 1e-10), {secs:.2} s (< 5 s)",
            defects[0], defects[1], defects[2], defects[3], defects[4]
        ),
    );

    let [pyth, idem] = projection_defects(20, 2).unwrap();
    let constraint = corrector_constraint(2).unwrap();
    report(
        &mut out,
        3,
        pyth <= 1e-12 && idem <= 1e-12 && constraint <= 1e-10,
        format!(
            "Pythagoras {pyth:.1e}, idempotence {idem:.1e} (<= 1e-12), corrector constraint {constraint:.1e} (<= 1e-10)"
        ),
    );

    let start = Instant::now();
    let ideal = ideal_method().unwrap();
    let secs = start.elapsed().as_secs_f64();
    report(
        &mut out,
        4,
        ideal <= 1e-8 && secs < 60.0,
        format!("ideal method relative error {ideal:.1e} (<= 1e-8), {secs:.1} s (< 60 s)"),
    );

    let a1 = [("compress", "true"), ("svd_tol", "0"), ("timings", "false")];
    let first = config(&dir.path().join("a1"), &a1);
    let (study, secs) = run_study(true, &first);
    let slopes = study.slopes.unwrap();
    report(
        &mut out,
        5,
        (-1.7..=-1.3).contains(&slopes.energy) && secs <= 900.0,
        format!(
            "A1 energy slope {:.3} in [-1.7, -1.3], {secs:.0} s (<= 900 s)",
            slopes.energy
        ),
    );
    report(
        &mut out,
        6,
        (-2.3..=-1.75).contains(&slopes.l2) && slopes.l2_coarse < -0.5,
        format!(
            "A1 L2 slope {:.3} in [-2.3, -1.75], coarse-part L2 slope {:.3} (< -0.5)",
            slopes.l2, slopes.l2_coarse
        ),
    );
    let excess = study
        .compressed
        .iter()
        .map(|r| r.err_energy - r.err_energy_ms)
        .fold(f64::NEG_INFINITY, f64::max);
    report(
        &mut out,
        9,
        study.compressed.len() == study.rows.len() && excess <= 1e-9,
        format!(
            "compressed minus uncompressed energy error, worst {excess:.2e} (<= 1e-9) over {} levels",
            study.compressed.len()
        ),
    );
    let worst = study
        .qoi
        .iter()
        .map(|r| r.exact_gap / r.product_bound)
        .fold(0.0, f64::max);
    let kinds: Vec<&str> = study.qoi.iter().map(|r| r.functional.as_str()).collect();
    report(
        &mut out,
        10,
        study.qoi.len() == 2 * study.rows.len()
            && kinds.iter().any(|k| *k == "f")
            && kinds.iter().any(|k| k.starts_with("box"))
            && study
                .qoi
                .iter()
                .all(|r| r.exact_gap <= r.product_bound * (1.0 + 1e-8)),
        format!(
            "goal error over energy product, worst ratio {worst:.12} (<= 1 + 1e-8) over {} rows",
            study.qoi.len()
        ),
    );

    let second = config(&dir.path().join("a1_again"), &a1);
    run_study(true, &second);
    let same: Vec<(&str, bool)> = ["study.csv", "qoi.csv", "compressed.csv"]
        .into_iter()
        .map(|f| {
            let a = fs::read(first.out.join(f)).unwrap();
            (
                f,
                !a.is_empty() && a == fs::read(second.out.join(f)).unwrap(),
            )
        })
        .collect();
    report(
        &mut out,
        12,
        same.iter().all(|s| s.1),
        format!("bit-identical outputs of two A1 runs: {same:?}"),
    );

    let loc = config(
        &dir.path().join("loc"),
        &[("fine_level", "6"), ("coarse_levels", "2, 3, 4")],
    );
    let sweep = run_localization_sweep(&loc).unwrap();
    let gap = sweep.saturation_gap.unwrap_or(f64::NAN);
    report(
        &mut out,
        7,
        sweep.monotone.iter().all(|m| m.1) && gap <= 0.25,
        format!(
            "errors nonincreasing in C per H {:?}, saturation gap C=2 vs 5/2 at H=1/16 {:.1}% (<= 25%)",
            sweep.monotone.iter().map(|m| m.1).collect::<Vec<_>>(),
            100.0 * gap
        ),
    );

    let decay = |coef: &str| {
        let cfg = config(
            &dir.path().join("decay"),
            &[
                ("domain", "square"),
                ("coefficient", coef),
                ("fine_level", "6"),
                ("coarse_levels", "4"),
                ("decay_point", "0.5 0.5"),
            ],
        );
        run_decay_study(&cfg).unwrap()
    };
    let (ok1, d1) = decay_line("A1", &decay("constant 1"));
    let (ok2, d2) = decay_line("A2", &decay("stripes 0.03125 0.01 1 x"));
    report(&mut out, 8, ok1 && ok2, format!("{d1}; {d2}"));

    let a2 = config(
        &dir.path().join("a2"),
        &[
            ("coefficient", "stripes 0.03125 0.01 1 x"),
            ("timings", "false"),
        ],
    );
    let (study, secs) = run_study(false, &a2);
    let slope = study.slopes.unwrap().energy;
    report(
        &mut out,
        11,
        study.rows.len() == 4 && slope <= -1.2,
        format!("A2 energy slope {slope:.3} (<= -1.2), {secs:.0} s"),
    );

    out.sort_by_key(|o| o.id);
    let failed: Vec<String> = out
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("{}: {}", o.id, o.detail))
        .collect();
    assert_eq!(out.len(), 12);
    assert!(failed.is_empty(), "failed criteria: {failed:#?}");
}
