//! Parabolic blow-up of a triod flow at the junction, compared with the
//! expander of its initial tangent rays.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{flow, write_json, ExperimentConfig, Ingredients, Spacing};
use crate::error::{Error, Result};
use crate::geometry::hausdorff_in_window;
use crate::par::Exec;
use crate::triod::{rescale_blowup, self_similar_expander};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupEntry {
    pub beta: f64,
    /// Hausdorff distance in the window at each stored time.
    pub per_time: Vec<f64>,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub ray_angles: [f64; 3],
    pub window: f64,
    /// `sup_t √t · max|k|` along the flow.
    pub sqrt_t_curvature: f64,
    pub hypothesis_holds: bool,
    pub times: Vec<f64>,
    pub entries: Vec<BlowupEntry>,
    pub decreasing: bool,
    /// `None` when the curvature hypothesis fails.
    pub pass: Option<bool>,
}

pub fn run_blowup(cfg: &ExperimentConfig, exec: Exec) -> Result<BlowupReport> {
    let ing = Ingredients::build(&cfg.potential, exec)?;
    run_blowup_with(cfg, &ing)
}

/// Distances between `(1/β) γ(·, β² t)` and the expander on the window,
/// maximized over the stored times, for every β of the ladder.
pub fn run_blowup_with(cfg: &ExperimentConfig, ing: &Ingredients) -> Result<BlowupReport> {
    cfg.validate()?;
    let opts = &cfg.blowup;
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out)?;
    let triod = ing.triod(cfg, &cfg.triod, Spacing::Uniform)?;
    if triod.junction().norm() > 1e-12 {
        return Err(Error::InvalidArgument("the blow-up needs the junction at the origin".into()));
    }
    let flow_cfg = ExperimentConfig { flow_snapshots: opts.flow_snapshots, ..cfg.clone() };
    let traj = flow(&flow_cfg, &triod)?;
    let sqrt_t_curvature = traj
        .times
        .iter()
        .zip(&traj.triods)
        .skip(1)
        .map(|(&t, tr)| t.sqrt() * tr.max_abs_curvature())
        .fold(0.0, f64::max);
    let hypothesis_holds = sqrt_t_curvature <= opts.curvature_bound;

    let ray_angles = [0, 1, 2].map(|i| triod.tangent_angle(i));
    let expander = self_similar_expander(ray_angles, cfg.t_end, opts.expander_nodes)?;
    let mut entries = Vec::new();
    std::fs::create_dir_all(out.join("blowup"))?;
    for &beta in &opts.betas {
        let rescaled = rescale_blowup(&traj, beta)?;
        let mut per_time = Vec::with_capacity(rescaled.times.len());
        for (&t, tr) in rescaled.times.iter().zip(&rescaled.triods) {
            per_time.push(hausdorff_in_window(tr, &expander.at(t)?, opts.window));
        }
        rescaled.last().write_csv(&out.join("blowup").join(format!("rescaled_beta{:04}.csv", (beta * 1e3).round() as i64)))?;
        let distance = per_time.iter().cloned().fold(0.0, f64::max);
        entries.push(BlowupEntry { beta, per_time, distance });
    }
    expander.last().write_csv(&out.join("blowup").join("expander.csv"))?;
    let decreasing = entries.windows(2).all(|w| w[1].distance < w[0].distance);
    let pass = hypothesis_holds.then_some(decreasing);

    let mut f = std::io::BufWriter::new(std::fs::File::create(out.join("blowup.csv"))?);
    writeln!(f, "beta,time,hausdorff")?;
    for e in &entries {
        for (t, d) in traj.times.iter().zip(&e.per_time) {
            writeln!(f, "{},{},{:e}", e.beta, t, d)?;
        }
    }
    f.flush()?;
    let report = BlowupReport {
        ray_angles,
        window: opts.window,
        sqrt_t_curvature,
        hypothesis_holds,
        times: traj.times.clone(),
        entries,
        decreasing,
        pass,
    };
    write_json(&out.join("blowup.json"), &report)?;
    Ok(report)
}
