//! CSV tables, the JSON run manifest and a gnuplot script.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::StudyConfig;
use crate::error::CliError;
use crate::study::StudyRow;

pub const STUDY_HEADER: &str =
    "H,Ndof,L,err_energy_rel,err_l2_rel,err_l2_coarse_rel,t_correctors_s,t_solve_s,iters_ref,iters_ms";

fn out_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Output(format!("{}: {e}", path.display()))
}

/// Writes any serializable rows with a header line, even when `rows` is empty.
pub fn write_table<T: Serialize>(path: &Path, header: &str, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(out_err(path))?;
    w.write_record(header.split(',')).map_err(out_err(path))?;
    for r in rows {
        w.serialize(r).map_err(out_err(path))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    csv::Reader::from_path(path)
        .map_err(out_err(path))?
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(out_err(path))
}

/// `study.csv`; runtimes are zeroed unless `timings` is set.
pub fn write_study_csv(path: &Path, rows: &[StudyRow], timings: bool) -> Result<(), CliError> {
    let rows: Vec<StudyRow> = rows
        .iter()
        .map(|r| StudyRow {
            t_correctors_s: if timings { r.t_correctors_s } else { 0.0 },
            t_solve_s: if timings { r.t_solve_s } else { 0.0 },
            ..r.clone()
        })
        .collect();
    write_table(path, STUDY_HEADER, &rows)
}

pub fn read_study_csv(path: &Path) -> Result<Vec<StudyRow>, CliError> {
    read_table(path)
}

/// Config echo, software version and study results.
pub fn manifest(cfg: &StudyConfig, results: Value) -> Value {
    json!({
        "software": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "study": cfg.study.name(),
        "config": cfg.to_text(),
        "results": results,
    })
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Log-log plot of the three error columns of `study.csv` against `Ndof`.
pub fn gnuplot_script() -> String {
    [
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 'N_dof'",
        "set ylabel 'relative error'",
        "set key bottom left",
        "set terminal pngcairo size 800,600",
        "set output 'study.png'",
        "plot 'study.csv' using 2:4 skip 1 with linespoints title 'energy', \\",
        "     'study.csv' using 2:5 skip 1 with linespoints title 'L2', \\",
        "     'study.csv' using 2:6 skip 1 with linespoints title 'L2 coarse part'",
        "",
    ]
    .join("\n")
}

/// Writes `study.csv`, `study.json` and `plot.gnuplot` into `dir`.
pub fn emit_outputs(
    dir: &Path,
    cfg: &StudyConfig,
    rows: &[StudyRow],
    results: Value,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    let csv = dir.join("study.csv");
    write_study_csv(&csv, rows, cfg.timings)?;
    let json = dir.join("study.json");
    write_json(&json, &manifest(cfg, results))?;
    let plot = dir.join("plot.gnuplot");
    fs::write(&plot, gnuplot_script())?;
    Ok(vec![csv, json, plot])
}
