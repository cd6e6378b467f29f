//! Subcommand dispatch shared by the binary and the tests.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use crate::config::{StudyConfig, StudyKind};
use crate::error::CliError;
use crate::output::{emit_outputs, manifest, write_json, write_table};
use crate::study::{
    run_convergence_study, run_decay_study, run_localization_sweep, run_msfem, run_qoi_study,
    run_reference, CompressedRow, ConvergenceStudy,
};
use crate::verify::run_verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Study(StudyKind),
    Verify,
}

/// Human readable report and the files written.
#[derive(Debug, Default)]
pub struct Report {
    pub text: String,
    pub files: Vec<PathBuf>,
    /// False when `verify` found a violated invariant.
    pub ok: bool,
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Output(e.to_string()))
}

fn ensure_dir(cfg: &StudyConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Output(format!("{}: {e}", cfg.out.display())))
}

/// Writes the tables and manifest of a convergence-type study.
pub fn convergence_report(cfg: &StudyConfig, s: &ConvergenceStudy) -> Result<Report, CliError> {
    let mut files = emit_outputs(&cfg.out, cfg, &s.rows, to_value(s)?)?;
    if !s.qoi.is_empty() {
        let p = cfg.out.join("qoi.csv");
        write_table(
            &p,
            "H,L,functional,exact_gap,product_bound,ratio,dg_product,dg_constant,holds",
            &s.qoi,
        )?;
        files.push(p);
    }
    if !s.compressed.is_empty() {
        let p = cfg.out.join("compressed.csv");
        write_table(
            &p,
            "H,dimension,uncompressed_dimension,err_energy_rel,err_energy_rel_ms,err_energy,err_energy_ms,condition,t_build_s",
            &s.compressed
                .iter()
                .map(|r| CompressedRow {
                    t_build_s: if cfg.timings { r.t_build_s } else { 0.0 },
                    ..r.clone()
                })
                .collect::<Vec<_>>(),
        )?;
        files.push(p);
    }
    let mut text = String::new();
    writeln!(
        text,
        "reference: {} dofs, {} iterations, residual {:.2e}",
        s.reference.dofs, s.reference.iterations, s.reference.residual
    )
    .ok();
    for r in &s.rows {
        writeln!(
            text,
            "H = {:<10} L = {:<3} energy {:.4e}  L2 {:.4e}  coarse L2 {:.4e}",
            r.h, r.l, r.err_energy_rel, r.err_l2_rel, r.err_l2_coarse_rel
        )
        .ok();
    }
    if let Some(sl) = &s.slopes {
        writeln!(
            text,
            "slopes vs Ndof: energy {:.3}, L2 {:.3}, coarse L2 {:.3}",
            sl.energy, sl.l2, sl.l2_coarse
        )
        .ok();
    }
    for q in &s.qoi {
        writeln!(
            text,
            "H = {:<10} g = {:<20} gap {:.3e} <= {:.3e} ({})",
            q.h,
            q.functional,
            q.exact_gap,
            q.product_bound,
            if q.holds { "holds" } else { "VIOLATED" }
        )
        .ok();
    }
    Ok(Report {
        text,
        files,
        ok: true,
    })
}

/// Runs `command` under `cfg`, writing its outputs into `cfg.out`.
pub fn execute(command: Command, cfg: &StudyConfig) -> Result<Report, CliError> {
    match command {
        Command::Verify => {
            let checks = run_verify()?;
            ensure_dir(cfg)?;
            let path = cfg.out.join("verify.json");
            write_json(&path, &manifest(cfg, to_value(&checks)?))?;
            let mut text = String::new();
            for c in &checks {
                writeln!(
                    text,
                    "{} {}: {:.3e} (tolerance {:.0e}, {:.2} s)",
                    if c.passed() { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance,
                    c.seconds
                )
                .ok();
            }
            Ok(Report {
                text,
                files: vec![path],
                ok: checks.iter().all(|c| c.passed()),
            })
        }
        Command::Study(kind) => {
            let mut cfg = cfg.clone();
            cfg.study = kind;
            cfg.validate()?;
            match kind {
                StudyKind::Reference => {
                    let info = run_reference(&cfg)?;
                    ensure_dir(&cfg)?;
                    let path = cfg.out.join("reference.json");
                    write_json(&path, &manifest(&cfg, to_value(&info)?))?;
                    Ok(Report {
                        text: format!(
                            "reference: {} dofs, {} iterations, residual {:.2e}, energy {:.6e}\n",
                            info.dofs, info.iterations, info.residual, info.energy
                        ),
                        files: vec![path],
                        ok: true,
                    })
                }
                StudyKind::Msfem => convergence_report(&cfg, &run_msfem(&cfg)?),
                StudyKind::Convergence => convergence_report(&cfg, &run_convergence_study(&cfg)?),
                StudyKind::Qoi => convergence_report(&cfg, &run_qoi_study(&cfg)?),
                StudyKind::Localization => {
                    let s = run_localization_sweep(&cfg)?;
                    ensure_dir(&cfg)?;
                    let csv = cfg.out.join("localization.csv");
                    write_table(&csv, "C,H,L,err_energy_rel,err_l2_rel", &s.rows)?;
                    let json = cfg.out.join("study.json");
                    write_json(&json, &manifest(&cfg, to_value(&s)?))?;
                    let mut text = String::new();
                    for r in &s.rows {
                        writeln!(
                            text,
                            "C = {:<4} H = {:<10} L = {:<3} energy {:.4e}  L2 {:.4e}",
                            r.c, r.h, r.l, r.err_energy_rel, r.err_l2_rel
                        )
                        .ok();
                    }
                    if let Some(g) = s.saturation_gap {
                        writeln!(text, "saturation gap at the finest H: {g:.3}").ok();
                    }
                    Ok(Report {
                        text,
                        files: vec![csv, json],
                        ok: true,
                    })
                }
                StudyKind::Decay => {
                    let s = run_decay_study(&cfg)?;
                    ensure_dir(&cfg)?;
                    let csv = cfg.out.join("decay.csv");
                    write_table(&csv, "k,tail", &s.tails)?;
                    let json = cfg.out.join("study.json");
                    write_json(&json, &manifest(&cfg, json!({ "decay": to_value(&s)? })))?;
                    let gamma = s
                        .gamma
                        .map_or_else(|| "not fitted".to_string(), |g| format!("{g:.4}"));
                    Ok(Report {
                        text: format!(
                            "element {} local {}: total {:.4e}, gamma {gamma}\n",
                            s.element, s.local, s.total
                        ),
                        files: vec![csv, json],
                        ok: true,
                    })
                }
            }
        }
    }
}
