//! Two parametrizations of one initial triod must give the same interfaces.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{field_stem, flow, ladder, run_case, write_json, write_timings, CaseRun, ExperimentConfig, Ingredients, Spacing};
use crate::ansatz::trajectory_radii;
use crate::error::Result;
use crate::geometry::hausdorff_points;
use crate::grid::{Grid, VectorField2D};
use crate::linalg::Point;
use crate::par::Exec;
use crate::solver::{interface_extract, sup_distance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessEntry {
    pub eps: f64,
    pub h: f64,
    /// Interface times: the initial datum, then every solver snapshot.
    pub times: Vec<f64>,
    /// Hausdorff distance between the interfaces of the two parametrizations.
    pub hausdorff: Vec<f64>,
    pub tolerance: f64,
    /// `sup|ψ_ε(σ₁) − ψ_ε(σ₂)|` over the unknowns.
    pub psi_gap: f64,
    /// Two runs of the same input agree bit for bit.
    pub identical_bitwise: bool,
    /// Hausdorff distance to the run from the displaced junction.
    pub control_hausdorff: Vec<f64>,
    /// The displaced control exceeds the tolerance somewhere.
    pub control_detected: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub entries: Vec<UniquenessEntry>,
    pub errors: Vec<(f64, String)>,
    pub pass: bool,
    #[serde(skip)]
    pub runtimes: Vec<f64>,
}

fn fields_of(run: &CaseRun) -> Vec<&VectorField2D> {
    std::iter::once(&run.initial).chain(&run.solution.snapshots).collect()
}

fn bitwise_equal(a: &CaseRun, b: &CaseRun) -> bool {
    let fa = fields_of(a);
    let fb = fields_of(b);
    fa.len() == fb.len()
        && fa.iter().zip(&fb).all(|(x, y)| {
            x.values.len() == y.values.len()
                && x.values.iter().zip(&y.values).all(|(p, q)| p.x.to_bits() == q.x.to_bits() && p.y.to_bits() == q.y.to_bits())
        })
}

pub fn run_uniqueness(cfg: &ExperimentConfig, exec: Exec) -> Result<UniquenessReport> {
    let ing = Ingredients::build(&cfg.potential, exec)?;
    run_uniqueness_with(cfg, &ing, exec)
}

/// Runs the PDE from a uniform and a Chebyshev node spacing of the same
/// triod, from the uniform spacing twice, and from a triod with the
/// junction displaced by a few cells, and compares their interfaces.
pub fn run_uniqueness_with(cfg: &ExperimentConfig, ing: &Ingredients, exec: Exec) -> Result<UniquenessReport> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out)?;
    let threshold = cfg.uniqueness.threshold * ing.w.min_well_separation();
    let results = ladder(cfg, exec, |k| {
        let eps = cfg.eps[k];
        let h = Grid::cover(&cfg.domain, cfg.resolution(k)).h;
        let run = |spec: &super::TriodSpec, spacing: Spacing| -> Result<CaseRun> {
            let traj = flow(cfg, &ing.triod(cfg, spec, spacing)?)?;
            let radii = trajectory_radii(&traj, &cfg.domain)?;
            run_case(ing, cfg, &traj, radii, k, exec)
        };
        let a = run(&cfg.triod, Spacing::Uniform)?;
        let again = run(&cfg.triod, Spacing::Uniform)?;
        let b = run(&cfg.triod, Spacing::Chebyshev)?;
        let shift = cfg.uniqueness.control_shift_cells * h;
        let c = run(&cfg.triod.shifted([shift, 0.0]), Spacing::Uniform)?;

        let mask = &a.solution.unknown;
        let crossings = |r: &CaseRun| -> Result<Vec<Vec<Point>>> {
            fields_of(r).into_iter().map(|f| Ok(interface_extract(f, &ing.w, threshold, Some(mask))?.crossings)).collect()
        };
        let (ia, ib, ic) = (crossings(&a)?, crossings(&b)?, crossings(&c)?);
        let hausdorff: Vec<f64> = ia.iter().zip(&ib).map(|(p, q)| hausdorff_points(p, q)).collect();
        let control: Vec<f64> = ia.iter().zip(&ic).map(|(p, q)| hausdorff_points(p, q)).collect();
        let tolerance = 2.0 * h;
        let psi_gap = sup_distance(std::slice::from_ref(&a.initial), std::slice::from_ref(&b.initial), Some(mask))?;
        let identical_bitwise = bitwise_equal(&a, &again);
        let control_detected = control.iter().any(|&d| d > tolerance);
        let pass = hausdorff.iter().all(|&d| d <= tolerance) && identical_bitwise && control_detected;
        let times = fields_of(&a).iter().map(|f| f.time).collect();

        let mut f = std::io::BufWriter::new(std::fs::File::create(out.join(format!("{}.csv", field_stem("interface", eps))))?);
        writeln!(f, "run,time,x,y")?;
        for (name, sets, run) in [("uniform", &ia, &a), ("chebyshev", &ib, &b), ("control", &ic, &c)] {
            for (pts, fld) in sets.iter().zip(fields_of(run)) {
                for p in pts {
                    writeln!(f, "{name},{},{:e},{:e}", fld.time, p.x, p.y)?;
                }
            }
        }
        f.flush()?;

        Ok(UniquenessEntry {
            eps,
            h,
            times,
            hausdorff,
            tolerance,
            psi_gap,
            identical_bitwise,
            control_hausdorff: control,
            control_detected,
            pass,
        })
    });

    let mut entries = Vec::new();
    let mut errors = Vec::new();
    let mut runtimes = Vec::new();
    for (k, (r, secs)) in results.into_iter().enumerate() {
        runtimes.push(secs);
        match r {
            Ok(e) => entries.push(e),
            Err(e) => {
                log::warn!("ε = {}: {e}", cfg.eps[k]);
                errors.push((cfg.eps[k], e.to_string()));
            }
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(out.join("uniqueness.csv"))?);
    writeln!(f, "eps,time,hausdorff,control_hausdorff,tolerance")?;
    for e in &entries {
        for q in 0..e.times.len() {
            writeln!(f, "{},{},{:e},{:e},{:e}", e.eps, e.times[q], e.hausdorff[q], e.control_hausdorff[q], e.tolerance)?;
        }
    }
    f.flush()?;
    write_timings(out, &cfg.eps, &runtimes)?;
    let pass = errors.is_empty() && !entries.is_empty() && entries.iter().all(|e| e.pass);
    let report = UniquenessReport { entries, errors, pass, runtimes };
    write_json(&out.join("uniqueness.json"), &report)?;
    Ok(report)
}
