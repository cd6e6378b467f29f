use std::fs;
use std::process::Command as Process;

use dgms::dg::{assemble_load_fn, assemble_sip, solve_with_operator, PenaltyRule, SolverOptions};
use dgms::mesh::{build_hierarchy, DomainSpec};
use dgms::multiscale::{build_ms_space, cache_key, MsSystem, Radius};
use dgms::{CoarseFineMap, Coefficient, DgFunction};
use dgms_cli::app::{execute, Command};
use dgms_cli::config::{StudyConfig, StudyKind};
use dgms_cli::output::{read_study_csv, write_study_csv, write_table, STUDY_HEADER};
use dgms_cli::study::{run_convergence_study, StudyRow};

fn small(out: &std::path::Path) -> StudyConfig {
    let mut cfg = StudyConfig::default();
    for (k, v) in [
        ("fine_level", "4"),
        ("coarse_levels", "2, 3"),
        ("layers", "2"),
        ("timings", "false"),
    ] {
        cfg.set(k, v).unwrap();
    }
    cfg.out = out.to_path_buf();
    cfg
}

fn dgms() -> Process {
    Process::new(env!("CARGO_BIN_EXE_dgms"))
}

#[test]
fn bad_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--set", "fine_level=seven", "convergence"],
        vec!["--set", "no_such_key=1", "convergence"],
        vec!["--set", "coarse_levels=3", "--set", "fine_level=2", "msfem"],
    ] {
        let status = dgms()
            .args(["--out", dir.path().to_str().unwrap()])
            .args(&args)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(2), "{args:?}");
    }
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "sigma0 = -1\n").unwrap();
    let status = dgms()
        .args(["--config", cfg.to_str().unwrap(), "reference"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn empty_tables_keep_their_header() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    write_study_csv(&p, &[], true).unwrap();
    assert_eq!(fs::read_to_string(&p).unwrap(), format!("{STUDY_HEADER}\n"));
    write_table::<StudyRow>(&p, "a,b", &[]).unwrap();
    assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n");
    write_study_csv(&p, &[], false).unwrap();
    assert!(read_study_csv(&p).unwrap().is_empty());
}

#[test]
fn study_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("study.csv");
    let rows = vec![
        StudyRow {
            h: 0.25,
            ndof: 48,
            l: "4".into(),
            err_energy_rel: 9.414599093293504e-3,
            err_l2_rel: 1.637786914751378e-3,
            err_l2_coarse_rel: 0.1013600053365698,
            t_correctors_s: 1.5,
            t_solve_s: 0.25,
            iters_ref: 17,
            iters_ms: 0,
        },
        StudyRow {
            h: 0.03125,
            ndof: 3072,
            l: "global".into(),
            err_energy_rel: 3.083893422539459e-5,
            err_l2_rel: 8.329991281727839e-7,
            err_l2_coarse_rel: 1.8690165620872032e-3,
            t_correctors_s: 301.0,
            t_solve_s: 2.0,
            iters_ref: 0,
            iters_ms: 0,
        },
    ];
    write_study_csv(&p, &rows, true).unwrap();
    let text = fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().next().unwrap(), STUDY_HEADER);
    assert_eq!(read_study_csv(&p).unwrap(), rows);
    write_study_csv(&p, &rows, false).unwrap();
    for (got, want) in read_study_csv(&p).unwrap().iter().zip(&rows) {
        assert_eq!((got.t_correctors_s, got.t_solve_s), (0.0, 0.0));
        assert_eq!(got.err_energy_rel, want.err_energy_rel);
    }
}

#[test]
fn manifest_records_recomputable_cache_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    execute(Command::Study(StudyKind::Convergence), &cfg).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("study.json")).unwrap()).unwrap();
    assert_eq!(json["study"], "convergence");
    assert_eq!(
        StudyConfig::parse(json["config"].as_str().unwrap())
            .unwrap()
            .to_text(),
        cfg.to_text()
    );
    let keys: Vec<String> = json["results"]["cache_keys"]
        .as_array()
        .unwrap()
        .iter()
        .map(|k| k.as_str().unwrap().to_string())
        .collect();
    let mut want = vec![];
    for level in [2, 3] {
        let hier = build_hierarchy(&DomainSpec::l_shape_mixed(), level, 4).unwrap();
        let coef = Coefficient::constant(hier.fine(), 1.0).unwrap();
        want.push(cache_key(
            &hier,
            &coef,
            &PenaltyRule::default(),
            Radius::Layers(2),
        ));
    }
    assert_eq!(keys, want);
}

/// Rows of a small study against a solve assembled by hand from the core crate.
#[test]
fn study_rows_match_a_direct_computation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let study = run_convergence_study(&cfg).unwrap();
    assert_eq!(study.rows.len(), 2);
    let tau = std::f64::consts::TAU;
    let f = |x: f64, y: f64| 1.0 + (tau * x).cos() * (tau * y).cos();
    for (row, level) in study.rows.iter().zip([2, 3]) {
        let hier = build_hierarchy(&DomainSpec::l_shape_mixed(), level, 4).unwrap();
        let fine = hier.fine();
        let coef = Coefficient::constant(fine, 1.0).unwrap();
        let pen = PenaltyRule::default();
        let op = assemble_sip(fine, &coef, &pen).unwrap();
        let load = assemble_load_fn(fine, f);
        let uh = solve_with_operator(
            fine,
            &op,
            &load,
            &SolverOptions {
                dense_max_level: 4,
                ..SolverOptions::default()
            },
        )
        .unwrap()
        .u;
        let basis = build_ms_space(&hier, &coef, &pen, Radius::Layers(2)).unwrap();
        let sol = MsSystem::assemble(&hier, &basis, &op)
            .unwrap()
            .solve(&hier, &basis, &load)
            .unwrap();
        let map = CoarseFineMap::new(&hier);
        let p = map.project_coarse(&hier, &sol.u).unwrap();
        let scale = p.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for (a, b) in p.coeffs.iter().zip(&sol.coarse) {
            assert!((a - b).abs() < 1e-10 * scale, "{a} vs {b}");
        }
        let e = uh.sub(&sol.u);
        let rel = |v: &DgFunction| {
            dgms::dg::energy_norm(fine, &coef, &pen, v).unwrap()
                / dgms::dg::energy_norm(fine, &coef, &pen, &uh).unwrap()
        };
        assert!(
            (row.err_energy_rel - rel(&e)).abs() < 1e-8 * rel(&e),
            "level {level}"
        );
        let pu = map.inject_coarse(&hier, &p).unwrap();
        let coarse =
            dgms::dg::l2_norm(fine, &uh.sub(&pu)).unwrap() / dgms::dg::l2_norm(fine, &uh).unwrap();
        assert!((row.err_l2_coarse_rel - coarse).abs() < 1e-8 * coarse);
        assert_eq!(row.ndof, 4 * hier.coarse().num_elements());
        assert_eq!(row.l, "2");
    }
}

#[test]
fn binary_writes_identical_outputs_twice() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = dgms()
            .args(["--out", out.to_str().unwrap()])
            .args(["--set", "fine_level=4", "--set", "coarse_levels=2,3"])
            .args(["--set", "timings=false", "--set", "compress=true", "qoi"])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["study.csv", "qoi.csv", "compressed.csv", "plot.gnuplot"] {
        let x = fs::read(a.join(file)).unwrap();
        assert!(!x.is_empty(), "{file}");
        assert_eq!(x, fs::read(b.join(file)).unwrap(), "{file}");
    }
    let rows = read_study_csv(&a.join("study.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.t_correctors_s == 0.0));
}

#[test]
fn verify_subcommand_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dgms()
        .args(["--out", dir.path().to_str().unwrap(), "verify"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    assert!(dir.path().join("verify.json").exists());
}
