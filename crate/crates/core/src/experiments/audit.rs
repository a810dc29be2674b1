//! Residual of the glued ansatz along the triod flow, region by region.

use serde::{Deserialize, Serialize};

use super::{flow, ladder, write_json, write_timings, ExperimentConfig, Ingredients, Spacing};
use crate::ansatz::{trajectory_radii, Ansatz, AnsatzParams, Region};
use crate::error::Result;
use crate::grid::Grid;
use crate::par::Exec;
use crate::residual::{audit, check_regional_bounds, write_region_csv, BoundsCheck, ResidualReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub reports: Vec<ResidualReport>,
    pub errors: Vec<(f64, String)>,
    pub bounds: BoundsCheck,
    pub away_zero: bool,
    /// `sup·ε` on the core within a factor 2 across the ladder.
    pub core_bounded: bool,
    pub transition_rate_positive: bool,
    /// Duhamel average strictly decreasing along the ladder.
    pub duhamel_decreasing: bool,
    /// Duhamel average at most `T · sup` for every ε.
    pub kernel_mass_bound: bool,
    #[serde(skip)]
    pub runtimes: Vec<f64>,
}

pub fn run_residual_audit(cfg: &ExperimentConfig, exec: Exec) -> Result<AuditReport> {
    let ing = Ingredients::build(&cfg.potential, exec)?;
    run_residual_audit_with(cfg, &ing, exec)
}

pub fn run_residual_audit_with(cfg: &ExperimentConfig, ing: &Ingredients, exec: Exec) -> Result<AuditReport> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out)?;
    let triod = ing.triod(cfg, &cfg.triod, Spacing::Uniform)?;
    let traj = flow(cfg, &triod)?;
    let radii = trajectory_radii(&traj, &cfg.domain)?;
    let results = ladder(cfg, exec, |k| {
        let eps = cfg.eps[k];
        let ans = Ansatz::new(&ing.w, &ing.profiles, &ing.core, AnsatzParams::new(eps, cfg.rho, radii)?);
        let grid = Grid::cover(&cfg.domain, cfg.resolution(k));
        let mask = grid.mask(&cfg.domain, 2);
        audit(&ans, &traj, &grid, &mask, cfg.t_end, cfg.audit.slices, exec)
    });
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    let mut runtimes = Vec::new();
    for (k, (r, secs)) in results.into_iter().enumerate() {
        runtimes.push(secs);
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                log::warn!("ε = {}: {e}", cfg.eps[k]);
                errors.push((cfg.eps[k], e.to_string()));
            }
        }
    }
    write_region_csv(&reports, &out.join("regions.csv"))?;
    write_timings(out, &cfg.eps, &runtimes)?;
    let bounds = check_regional_bounds(&reports, cfg.audit.self_similar);
    let fit_pass = |r: Region| bounds.fits.iter().find(|f| f.region == r).is_some_and(|f| f.pass);
    let complete = errors.is_empty() && !reports.is_empty();
    let duhamel: Vec<f64> = reports.iter().map(|r| r.duhamel_sup).collect();
    let report = AuditReport {
        away_zero: complete && fit_pass(Region::Away),
        core_bounded: complete && fit_pass(Region::Core),
        transition_rate_positive: complete && reports.len() >= 2 && fit_pass(Region::Transition),
        duhamel_decreasing: complete && duhamel.windows(2).all(|w| w[1] < w[0]),
        kernel_mass_bound: complete && reports.iter().all(|r| r.duhamel_sup <= r.t_end * r.total_sup * (1.0 + 1e-12)),
        reports,
        errors,
        bounds,
        runtimes,
    };
    write_json(&out.join("audit.json"), &report)?;
    Ok(report)
}
