//! Experiments on an ε ladder: convergence of the PDE solution to the glued
//! ansatz, the fitted rate, parametrization independence, the blow-up limit
//! and the residual audit.
//!
//! Every experiment writes CSV and JSON into its output directory. Timings
//! go to a separate `timings.csv`; all other files depend only on the
//! configuration.

mod audit;
mod blowup;
mod config;
mod uniqueness;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use audit::{run_residual_audit, run_residual_audit_with, AuditReport};
pub use blowup::{run_blowup, run_blowup_with, BlowupReport};
pub use config::{
    angle_mode_for, field_stem, AuditOptions, Bend, BlowupOptions, ExperimentConfig, ExperimentKind, PotentialSpec,
    Spacing, TriodSpec, UniquenessOptions,
};
pub use uniqueness::{run_uniqueness, run_uniqueness_with, UniquenessReport};

use crate::ansatz::{trajectory_radii, Ansatz, AnsatzParams};
use crate::error::{Error, Result};
use crate::geometry::Radii;
use crate::grid::VectorField2D;
use crate::heteroclinic::{solve_all, HeteroclinicProfile};
use crate::io::write_snapshots;
use crate::linalg::Point;
use crate::par::Exec;
use crate::potential::{gamma_distance, junction_angles, AngleTriple, ThreeWellPotential};
use crate::solver::{solve, sup_distance, AnsatzData, AnsatzField, FieldData, Solution, SolveConfig};
use crate::stationary::{compute_stationary_triple_with, StationaryTriple};
use crate::triod::{evolve, FlowOptions, Trajectory, Triod};

/// Potential, profiles, junction angles and stationary core shared by all
/// ladder entries.
pub struct Ingredients {
    pub w: ThreeWellPotential,
    pub profiles: [HeteroclinicProfile; 3],
    pub angles: AngleTriple,
    pub core: StationaryTriple,
}

impl Ingredients {
    pub fn build(spec: &PotentialSpec, exec: Exec) -> Result<Self> {
        let w = spec.build()?;
        let profiles = solve_all(&w, 10.0, 1000, 1e-9)?;
        let g = [
            gamma_distance(&w, 1, 2, 64, 1e-10)?,
            gamma_distance(&w, 2, 0, 64, 1e-10)?,
            gamma_distance(&w, 0, 1, 64, 1e-10)?,
        ];
        let angles = junction_angles(g)?;
        let core = compute_stationary_triple_with(&w, &profiles, &angles, 12.0, 256, 1e-3, exec)?;
        Ok(Ingredients { w, profiles, angles, core })
    }

    pub fn triod(&self, cfg: &ExperimentConfig, spec: &TriodSpec, spacing: Spacing) -> Result<Triod> {
        spec.build(&cfg.domain, angle_mode_for(self.angles.alpha), spacing)
    }
}

/// Triod flow on `[0, t_end]` with the configured number of snapshots.
pub fn flow(cfg: &ExperimentConfig, triod: &Triod) -> Result<Trajectory> {
    evolve(triod, cfg.t_end, &FlowOptions { snapshots: cfg.flow_snapshots, ..FlowOptions::default() })
}

/// One PDE run from `ψ_ε` with boundary data `φ_ε`, compared with `v_ε`.
pub struct CaseRun {
    pub eps: f64,
    pub solution: Solution,
    pub reference: Vec<VectorField2D>,
    pub initial: VectorField2D,
    /// `sup|u_ε − v_ε|` over the unknowns at each snapshot.
    pub per_snapshot: Vec<f64>,
    pub sup: f64,
}

pub fn run_case(
    ing: &Ingredients,
    cfg: &ExperimentConfig,
    traj: &Trajectory,
    radii: Radii,
    k: usize,
    exec: Exec,
) -> Result<CaseRun> {
    let eps = cfg.eps[k];
    let ans = Ansatz::new(&ing.w, &ing.profiles, &ing.core, AnsatzParams::new(eps, cfg.rho, radii)?);
    let phi = AnsatzData { ansatz: ans, traj, field: AnsatzField::Boundary };
    let v = AnsatzData { ansatz: ans, traj, field: AnsatzField::Glued };
    let mut sc = SolveConfig::new(cfg.domain, cfg.resolution(k), eps, cfg.t_end, cfg.scheme);
    sc.snapshots = cfg.snapshot_times();
    let solution = solve(&sc, &ing.w, &phi, &v, exec)?;
    let grid = sc.grid();
    let pts: Vec<Point> = (0..grid.len()).map(|q| grid.point_at(q)).collect();
    let initial = VectorField2D::new(grid, v.sample(&pts, 0.0, exec)?, 0.0)?;
    let mut reference = Vec::with_capacity(sc.snapshots.len());
    for &t in &sc.snapshots {
        reference.push(VectorField2D::new(grid, v.sample(&pts, t, exec)?, t)?);
    }
    let mut per_snapshot = Vec::with_capacity(reference.len());
    for (a, b) in solution.snapshots.iter().zip(&reference) {
        per_snapshot.push(sup_distance(std::slice::from_ref(a), std::slice::from_ref(b), Some(&solution.unknown))?);
    }
    let sup = per_snapshot.iter().cloned().fold(0.0, f64::max);
    Ok(CaseRun { eps, solution, reference, initial, per_snapshot, sup })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub resolution: usize,
    pub h: f64,
    pub sup_distance: Option<f64>,
    pub per_snapshot: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Exponent `l` of `sup|u_ε − v_ε| ≈ C ε^l`.
    pub l: f64,
    pub log_c: f64,
    pub stderr: f64,
    /// 95% confidence interval of `l`.
    pub band: [f64; 2],
    pub monotone: bool,
    pub diagnostics: Vec<String>,
    pub pass: bool,
}

/// Two-sided 95% Student quantile.
fn t_quantile(dof: usize) -> f64 {
    const T: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];
    match dof {
        0 => f64::INFINITY,
        1..=10 => T[dof - 1],
        _ => 1.96 + 2.4 / dof as f64,
    }
}

/// Least-squares slope of `log d` against `log ε`.
///
/// PASS needs `d` strictly decreasing as `ε` decreases and `l > 0`.
pub fn fit_rate(eps: &[f64], d: &[f64]) -> Result<RateFit> {
    if eps.len() != d.len() {
        return Err(Error::ShapeMismatch(format!("{} ε values, {} distances", eps.len(), d.len())));
    }
    if eps.len() < 3 {
        return Err(Error::InvalidArgument(format!("{} ladder points, need at least 3", eps.len())));
    }
    if eps.iter().chain(d).any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument("ε and distances must be positive and finite".into()));
    }
    let mut pairs: Vec<(f64, f64)> = eps.iter().cloned().zip(d.iter().cloned()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut diagnostics = Vec::new();
    for w in pairs.windows(2) {
        if w[1].0 == w[0].0 {
            diagnostics.push(format!("repeated ε = {}", w[0].0));
        } else if w[1].1 >= w[0].1 {
            diagnostics.push(format!("d({}) = {:e} is not below d({}) = {:e}", w[1].0, w[1].1, w[0].0, w[0].1));
        }
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let l = sxy / sxx;
    let log_c = my - l * mx;
    let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - log_c - l * a).powi(2)).sum();
    let dof = x.len() - 2;
    let stderr = (sse / dof as f64 / sxx).sqrt();
    let q = t_quantile(dof);
    let monotone = diagnostics.is_empty();
    if l <= 0.0 {
        diagnostics.push(format!("fitted exponent {l} is not positive"));
    }
    Ok(RateFit { l, log_c, stderr, band: [l - q * stderr, l + q * stderr], monotone, pass: monotone && l > 0.0, diagnostics })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Distances strictly decrease along the ladder, all entries succeeded.
    pub decreasing: bool,
    pub fit: Option<RateFit>,
    pub pass: bool,
    /// Wall time per ladder entry in seconds; not part of the JSON.
    #[serde(skip)]
    pub runtimes: Vec<f64>,
}

fn one_line(e: &Error) -> String {
    e.to_string().replace([',', '\n'], ";")
}

/// Runs every ladder entry of `cfg` concurrently under `exec`.
pub(crate) fn ladder<T, F>(cfg: &ExperimentConfig, exec: Exec, f: F) -> Vec<(Result<T>, f64)>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    exec.map(cfg.eps.len(), |k| {
        let t0 = Instant::now();
        let r = f(k);
        (r, t0.elapsed().as_secs_f64())
    })
}

pub(crate) fn write_timings(dir: &Path, eps: &[f64], secs: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("timings.csv"))?);
    writeln!(f, "eps,seconds")?;
    for (e, s) in eps.iter().zip(secs) {
        writeln!(f, "{e},{s:.3}")?;
    }
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Triod at time 0 and at every solver snapshot, for overlays.
pub(crate) fn write_reference_triods(dir: &Path, cfg: &ExperimentConfig, traj: &Trajectory) -> Result<()> {
    let mut times = vec![0.0];
    times.extend(cfg.snapshot_times());
    let triods = times.iter().map(|&t| traj.at(t)).collect::<Result<Vec<_>>>()?;
    Trajectory { times, triods }.write(&dir.join("triod"))
}

pub fn run_convergence(cfg: &ExperimentConfig, exec: Exec) -> Result<ConvergenceReport> {
    let ing = Ingredients::build(&cfg.potential, exec)?;
    run_convergence_with(cfg, &ing, exec)
}

/// Evolves the triod, runs the PDE for every ε and tabulates
/// `sup|u_ε − v_ε|`. A failing entry becomes an error row.
pub fn run_convergence_with(cfg: &ExperimentConfig, ing: &Ingredients, exec: Exec) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out)?;
    let triod = ing.triod(cfg, &cfg.triod, Spacing::Uniform)?;
    let traj = flow(cfg, &triod)?;
    write_reference_triods(out, cfg, &traj)?;
    let radii = trajectory_radii(&traj, &cfg.domain)?;
    if cfg.write_fields {
        std::fs::create_dir_all(out.join("fields"))?;
    }
    let results = ladder(cfg, exec, |k| {
        let run = run_case(ing, cfg, &traj, radii, k, exec)?;
        if cfg.write_fields {
            let stem = out.join("fields").join(field_stem("u", run.eps));
            write_snapshots(&stem, &run.solution.snapshots, run.eps, &ing.w.id, &cfg.domain)?;
        }
        Ok((run.sup, run.per_snapshot, run.solution.diagnostics))
    });

    let mut rows = Vec::new();
    let mut runtimes = Vec::new();
    let mut snap = std::io::BufWriter::new(std::fs::File::create(out.join("snapshots.csv"))?);
    writeln!(snap, "eps,time,sup_distance,energy,sup_norm,within_bound")?;
    for (k, (r, secs)) in results.into_iter().enumerate() {
        let eps = cfg.eps[k];
        let res = cfg.resolution(k);
        let h = crate::grid::Grid::cover(&cfg.domain, res).h;
        runtimes.push(secs);
        match r {
            Ok((sup, per, diags)) => {
                for (d, g) in per.iter().zip(&diags) {
                    writeln!(snap, "{eps},{},{d:e},{:e},{:e},{}", g.time, g.energy, g.sup_norm, g.within_bound)?;
                }
                rows.push(ConvergenceRow { eps, resolution: res, h, sup_distance: Some(sup), per_snapshot: per, error: None });
            }
            Err(e) => {
                log::warn!("ε = {eps}: {e}");
                rows.push(ConvergenceRow { eps, resolution: res, h, sup_distance: None, per_snapshot: vec![], error: Some(one_line(&e)) });
            }
        }
    }
    snap.flush()?;
    write_convergence_csv(&out.join("convergence.csv"), &rows)?;
    write_timings(out, &cfg.eps, &runtimes)?;

    let all_ok = rows.iter().all(|r| r.sup_distance.is_some());
    let d: Vec<f64> = rows.iter().filter_map(|r| r.sup_distance).collect();
    let decreasing = all_ok && d.windows(2).all(|w| w[1] < w[0]);
    let fit = if all_ok && d.len() >= 3 && d.iter().all(|&x| x > 0.0) { Some(fit_rate(&cfg.eps, &d)?) } else { None };
    if let Some(f) = &fit {
        write_json(&out.join("rate.json"), f)?;
    }
    let pass = decreasing && fit.as_ref().map_or(true, |f| f.pass);
    let report = ConvergenceReport { rows, decreasing, fit, pass, runtimes };
    write_json(&out.join("convergence.json"), &report)?;
    Ok(report)
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "eps,resolution,h,sup_distance,status")?;
    for r in rows {
        match (&r.sup_distance, &r.error) {
            (Some(d), _) => writeln!(f, "{},{},{},{:e},ok", r.eps, r.resolution, r.h, d)?,
            (None, e) => writeln!(f, "{},{},{},,{}", r.eps, r.resolution, r.h, e.as_deref().unwrap_or("error"))?,
        }
    }
    f.flush()?;
    Ok(())
}

/// `(ε, sup distance)` of the successful rows of a convergence table.
pub fn read_convergence_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("eps,resolution,h,sup_distance,status") {
        return Err(Error::Config(format!("{}: unexpected header", path.display())));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Config(format!("{}: malformed row {}", path.display(), n + 2));
        if cols.len() != 5 {
            return Err(bad());
        }
        if cols[4] == "ok" {
            let e: f64 = cols[0].parse().map_err(|_| bad())?;
            let d: f64 = cols[3].parse().map_err(|_| bad())?;
            out.push((e, d));
        }
    }
    Ok(out)
}

/// Fits the rate from a stored convergence table and writes `rate.json`.
pub fn run_rate_fit(cfg: &ExperimentConfig) -> Result<RateFit> {
    let path = cfg.table.clone().unwrap_or_else(|| cfg.out_dir.join("convergence.csv"));
    let rows = read_convergence_csv(&path)?;
    let (eps, d): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let fit = fit_rate(&eps, &d)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("rate.json"), &fit)?;
    Ok(fit)
}
