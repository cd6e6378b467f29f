//! Study orchestration on top of the core solver.

use std::time::Instant;

use dgms::dg::{
    assemble_load_fn, assemble_sip, energy_norm, l2_norm, solve_with_operator, PenaltyRule,
    ReferenceSolution,
};
use dgms::mesh::{build_hierarchy, Mesh, MeshHierarchy};
use dgms::multiscale::{
    build_ms_space_with, cache_key, compress_space, decay_profile, global_corrector,
    least_squares_slope, CorrectorCache, DecayProfile, MsSystem, Radius,
};
use dgms::qoi::{qoi_error_bound, solve_dual_msfem_refined, solve_dual_reference, QoiSpec};
use dgms::{CoarseFineMap, Coefficient, DgFunction, MsBasis, SipOperator};
use serde::{Deserialize, Serialize};

use crate::config::{QoiChoice, StudyConfig};
use crate::error::CliError;

/// One coarse level of a convergence study; the CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct StudyRow {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Ndof")]
    pub ndof: usize,
    #[serde(rename = "L")]
    pub l: String,
    pub err_energy_rel: f64,
    pub err_l2_rel: f64,
    pub err_l2_coarse_rel: f64,
    pub t_correctors_s: f64,
    pub t_solve_s: f64,
    pub iters_ref: usize,
    /// Zero: the coarse system is solved directly.
    pub iters_ms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressedRow {
    #[serde(rename = "H")]
    pub h: f64,
    pub dimension: usize,
    pub uncompressed_dimension: usize,
    pub err_energy_rel: f64,
    /// Relative energy error of the uncompressed solution on the same level.
    pub err_energy_rel_ms: f64,
    /// Absolute energy errors, as compared by the nesting check.
    pub err_energy: f64,
    pub err_energy_ms: f64,
    pub condition: f64,
    pub t_build_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QoiRow {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "L")]
    pub l: String,
    pub functional: String,
    pub exact_gap: f64,
    pub product_bound: f64,
    pub ratio: f64,
    pub dg_product: f64,
    pub dg_constant: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slopes {
    pub energy: f64,
    pub l2: f64,
    pub l2_coarse: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceInfo {
    pub level: u32,
    pub dofs: usize,
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    pub l2: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub reference: ReferenceInfo,
    pub rows: Vec<StudyRow>,
    /// `None` with fewer than two rows.
    pub slopes: Option<Slopes>,
    pub cache_keys: Vec<String>,
    pub compressed: Vec<CompressedRow>,
    pub qoi: Vec<QoiRow>,
    /// Condition estimate of each coarse stiffness matrix.
    pub conditions: Vec<f64>,
}

/// Fine mesh, coefficient, operator, load and reference solution shared by all levels.
pub struct Problem {
    pub fine: Mesh,
    pub coef: Coefficient,
    pub pen: PenaltyRule,
    pub op: SipOperator,
    pub load: Vec<f64>,
    pub reference: ReferenceSolution<f64>,
    pub info: ReferenceInfo,
}

impl Problem {
    pub fn setup(cfg: &StudyConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        let fine = Mesh::new(&cfg.domain.spec(), cfg.fine_level)?;
        let coef = cfg.coefficient.build(&fine)?;
        let pen = cfg.penalty()?;
        let start = Instant::now();
        let op = assemble_sip(&fine, &coef, &pen)?;
        let forcing = cfg.forcing;
        let load = assemble_load_fn(&fine, move |x, y| forcing.eval(x, y));
        let reference = solve_with_operator(&fine, &op, &load, &cfg.solver())?;
        let seconds = start.elapsed().as_secs_f64();
        let info = ReferenceInfo {
            level: cfg.fine_level,
            dofs: op.matrix.nrows(),
            iterations: reference.iterations,
            residual: reference.residual,
            energy: energy_norm(&fine, &coef, &pen, &reference.u)?,
            l2: l2_norm(&fine, &reference.u)?,
            seconds,
        };
        Ok(Self {
            fine,
            coef,
            pen,
            op,
            load,
            reference,
            info,
        })
    }

    pub fn hierarchy(&self, cfg: &StudyConfig, level: u32) -> Result<MeshHierarchy, CliError> {
        build_hierarchy(&cfg.domain.spec(), level, cfg.fine_level).map_err(CliError::at(level))
    }

    /// Corrected basis, through the cache when one is configured.
    pub fn basis(
        &self,
        cfg: &StudyConfig,
        hier: &MeshHierarchy,
        radius: Radius,
    ) -> Result<MsBasis, CliError> {
        let level = hier.coarse().level();
        let opts = cfg.global_options();
        match &cfg.cache {
            Some(dir) => CorrectorCache::new(dir)
                .and_then(|c| c.get_or_build(hier, &self.coef, &self.pen, radius, &opts)),
            None => build_ms_space_with(hier, &self.coef, &self.pen, radius, &opts),
        }
        .map_err(CliError::at(level))
    }

    /// Relative energy, L2 and coarse-part L2 errors of `u`, with `coarse` its coarse part.
    pub fn errors(
        &self,
        hier: &MeshHierarchy,
        u: &DgFunction,
        coarse: &DgFunction,
    ) -> dgms::Result<[f64; 3]> {
        let uh = &self.reference.u;
        let e = uh.sub(u);
        let map = CoarseFineMap::new(hier);
        let pu = map.inject_coarse(hier, coarse)?;
        Ok([
            energy_norm(&self.fine, &self.coef, &self.pen, &e)? / self.info.energy,
            l2_norm(&self.fine, &e)? / self.info.l2,
            l2_norm(&self.fine, &uh.sub(&pu))? / self.info.l2,
        ])
    }
}

fn coarse_size(level: u32) -> f64 {
    0.5f64.powi(level as i32)
}

fn log_slope(rows: &[StudyRow], err: impl Fn(&StudyRow) -> f64) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| (r.ndof as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| err(r).ln()).collect();
    least_squares_slope(&xs, &ys)
}

/// Least-squares slopes of the three error columns against `Ndof` on log-log axes.
pub fn fit_slopes(rows: &[StudyRow]) -> Option<Slopes> {
    (rows.len() >= 2).then(|| Slopes {
        energy: log_slope(rows, |r| r.err_energy_rel),
        l2: log_slope(rows, |r| r.err_l2_rel),
        l2_coarse: log_slope(rows, |r| r.err_l2_coarse_rel),
    })
}

fn functional_load(cfg: &StudyConfig, fine: &Mesh, q: &QoiChoice) -> dgms::Result<Vec<f64>> {
    let forcing = cfg.forcing;
    match *q {
        QoiChoice::Forcing => QoiSpec::Function(Box::new(move |x, y| forcing.eval(x, y))),
        QoiChoice::Box([x0, x1, y0, y1]) => QoiSpec::indicator(x0, x1, y0, y1),
    }
    .load(fine)
}

/// One row per coarse level, plus compressed and goal-oriented rows when configured.
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<ConvergenceStudy, CliError> {
    run_levels(cfg, &cfg.qoi)
}

/// The convergence study with the goal-oriented rows always present.
pub fn run_qoi_study(cfg: &StudyConfig) -> Result<ConvergenceStudy, CliError> {
    if cfg.qoi.is_empty() {
        return Err(CliError::config("no functionals configured"));
    }
    run_levels(cfg, &cfg.qoi)
}

fn run_levels(cfg: &StudyConfig, qoi: &[QoiChoice]) -> Result<ConvergenceStudy, CliError> {
    let p = Problem::setup(cfg)?;
    let duals: Vec<(String, Vec<f64>, DgFunction)> = qoi
        .iter()
        .map(|q| {
            let g = functional_load(cfg, &p.fine, q)?;
            let phi = solve_dual_reference(&p.fine, &p.op, &g, &cfg.solver())?;
            Ok((q.label(), g, phi))
        })
        .collect::<dgms::Result<_>>()?;
    let mut study = ConvergenceStudy {
        reference: p.info.clone(),
        rows: vec![],
        slopes: None,
        cache_keys: vec![],
        compressed: vec![],
        qoi: vec![],
        conditions: vec![],
    };
    for &level in &cfg.coarse_levels {
        let at = CliError::at(level);
        let hier = p.hierarchy(cfg, level)?;
        let radius = cfg.radius(level);
        let start = Instant::now();
        let basis = p.basis(cfg, &hier, radius)?;
        let t_correctors = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let system = MsSystem::assemble(&hier, &basis, &p.op).map_err(at)?;
        let sol = system
            .solve_refined(&hier, &basis, &p.op, &p.load, cfg.refinement_steps)
            .map_err(at)?;
        let t_solve = start.elapsed().as_secs_f64();
        let coarse = DgFunction::from_coeffs(hier.coarse(), sol.coarse.clone()).map_err(at)?;
        let [ee, el2, ec] = p.errors(&hier, &sol.u, &coarse).map_err(at)?;
        let h = coarse_size(level);
        study.rows.push(StudyRow {
            h,
            ndof: 4 * hier.coarse().num_elements(),
            l: radius.to_string(),
            err_energy_rel: ee,
            err_l2_rel: el2,
            err_l2_coarse_rel: ec,
            t_correctors_s: t_correctors,
            t_solve_s: t_solve,
            iters_ref: p.info.iterations,
            iters_ms: 0,
        });
        study.conditions.push(sol.condition);
        study
            .cache_keys
            .push(cache_key(&hier, &p.coef, &p.pen, radius));
        if cfg.compress {
            let start = Instant::now();
            let cb = compress_space(&hier, &basis, &p.op, cfg.svd_tol).map_err(at)?;
            let csys =
                dgms::multiscale::CompressedSystem::assemble(&hier, &cb, &p.op).map_err(at)?;
            let w = csys.solve(&hier, &cb, &p.load).map_err(at)?;
            let t_build = start.elapsed().as_secs_f64();
            let ew = energy_norm(&p.fine, &p.coef, &p.pen, &p.reference.u.sub(&w)).map_err(at)?;
            study.compressed.push(CompressedRow {
                h,
                dimension: cb.dimension(),
                uncompressed_dimension: cb.uncompressed_dimension(),
                err_energy_rel: ew / p.info.energy,
                err_energy_rel_ms: ee,
                err_energy: ew,
                err_energy_ms: ee * p.info.energy,
                condition: csys.condition_estimate(),
                t_build_s: t_build,
            });
        }
        for (label, g, phi) in &duals {
            let phi_ms =
                solve_dual_msfem_refined(&hier, &basis, &system, &p.op, g, cfg.refinement_steps)
                    .map_err(at)?;
            let b = qoi_error_bound(
                &p.fine,
                &p.coef,
                &p.pen,
                g,
                &p.reference.u,
                &sol.u,
                phi,
                &phi_ms.u,
            )
            .map_err(at)?;
            study.qoi.push(QoiRow {
                h,
                l: radius.to_string(),
                functional: label.clone(),
                exact_gap: b.exact_gap,
                product_bound: b.product_bound,
                ratio: b.ratio(),
                dg_product: b.dg_product,
                dg_constant: b.dg_constant(),
                holds: b.holds(),
            });
        }
    }
    study.slopes = fit_slopes(&study.rows);
    Ok(study)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub err_energy_rel: f64,
    pub err_l2_rel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizationStudy {
    pub reference: ReferenceInfo,
    pub rows: Vec<LocalizationRow>,
    /// Per coarse level: energy errors nonincreasing in `C`, up to `1e-12`.
    pub monotone: Vec<(f64, bool)>,
    /// `|err(C_last) - err(C_prev)| / err(C_prev)` at the finest coarse level.
    pub saturation_gap: Option<f64>,
}

/// Errors for every `(C, H)` pair of the sweep; equal radii share one basis.
pub fn run_localization_sweep(cfg: &StudyConfig) -> Result<LocalizationStudy, CliError> {
    let p = Problem::setup(cfg)?;
    let mut rows = vec![];
    let mut monotone = vec![];
    let mut levels = cfg.coarse_levels.clone();
    levels.sort_unstable();
    for &level in &levels {
        let at = CliError::at(level);
        let hier = p.hierarchy(cfg, level)?;
        let h = coarse_size(level);
        let mut done: Vec<(usize, [f64; 2])> = vec![];
        let first = rows.len();
        for &c in &cfg.sweep {
            let l = dgms::multiscale::localization_radius(h, c, cfg.log_base);
            let errs = match done.iter().find(|d| d.0 == l) {
                Some(d) => d.1,
                None => {
                    let basis = p.basis(cfg, &hier, Radius::Layers(l))?;
                    let system = MsSystem::assemble(&hier, &basis, &p.op).map_err(at)?;
                    let sol = system
                        .solve_refined(&hier, &basis, &p.op, &p.load, cfg.refinement_steps)
                        .map_err(at)?;
                    let coarse = DgFunction::from_coeffs(hier.coarse(), sol.coarse).map_err(at)?;
                    let [ee, el2, _] = p.errors(&hier, &sol.u, &coarse).map_err(at)?;
                    done.push((l, [ee, el2]));
                    [ee, el2]
                }
            };
            rows.push(LocalizationRow {
                c,
                h,
                l,
                err_energy_rel: errs[0],
                err_l2_rel: errs[1],
            });
        }
        let mut sorted: Vec<&LocalizationRow> = rows[first..].iter().collect();
        sorted.sort_by(|a, b| a.c.total_cmp(&b.c));
        let ok = sorted
            .windows(2)
            .all(|w| w[1].err_energy_rel <= w[0].err_energy_rel + 1e-12);
        monotone.push((h, ok));
    }
    let saturation_gap = levels.last().and_then(|&level| {
        let h = coarse_size(level);
        let mut at: Vec<&LocalizationRow> = rows.iter().filter(|r| r.h == h).collect();
        at.sort_by(|a, b| a.c.total_cmp(&b.c));
        let n = at.len();
        (n >= 2).then(|| {
            let (prev, last) = (at[n - 2].err_energy_rel, at[n - 1].err_energy_rel);
            (last - prev).abs() / prev
        })
    });
    Ok(LocalizationStudy {
        reference: p.info.clone(),
        rows,
        monotone,
        saturation_gap,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayStudy {
    pub coarse_level: u32,
    pub fine_level: u32,
    pub element: usize,
    pub local: usize,
    pub tails: Vec<(usize, f64)>,
    pub total: f64,
    pub gamma: Option<f64>,
    pub nonincreasing: bool,
}

/// Tails of the global corrector of the coarse element nearest to `decay_point`,
/// on the first configured coarse level.
pub fn run_decay_study(cfg: &StudyConfig) -> Result<DecayStudy, CliError> {
    cfg.validate()?;
    let level = cfg.coarse_levels[0];
    let at = CliError::at(level);
    let hier = build_hierarchy(&cfg.domain.spec(), level, cfg.fine_level).map_err(at)?;
    let coef = cfg.coefficient.build(hier.fine())?;
    let pen = cfg.penalty()?;
    let t = nearest_element(hier.coarse(), cfg.decay_point);
    let phi = global_corrector(
        &hier,
        &coef,
        &pen,
        t,
        cfg.decay_local,
        &cfg.global_options(),
    )
    .map_err(at)?;
    let DecayProfile {
        tails,
        total,
        gamma,
        ..
    } = decay_profile(&hier, &coef, &pen, &phi, cfg.decay_layers).map_err(at)?;
    let nonincreasing = tails.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(DecayStudy {
        coarse_level: level,
        fine_level: cfg.fine_level,
        element: t,
        local: cfg.decay_local,
        tails,
        total,
        gamma,
        nonincreasing,
    })
}

/// Element whose center is closest to `p`; ties go to the lower index.
pub fn nearest_element(mesh: &Mesh, p: [f64; 2]) -> usize {
    let h = mesh.width_f64();
    (0..mesh.num_elements())
        .map(|e| {
            let [x, y] = mesh.origin::<f64>(e);
            let d = (x + 0.5 * h - p[0]).powi(2) + (y + 0.5 * h - p[1]).powi(2);
            (e, d)
        })
        .fold(
            (0, f64::INFINITY),
            |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            },
        )
        .0
}

/// Errors of the multiscale solution on the first configured coarse level.
pub fn run_msfem(cfg: &StudyConfig) -> Result<ConvergenceStudy, CliError> {
    let mut one = cfg.clone();
    one.coarse_levels.truncate(1);
    run_levels(&one, &[])
}

pub fn run_reference(cfg: &StudyConfig) -> Result<ReferenceInfo, CliError> {
    Ok(Problem::setup(cfg)?.info)
}
