//! The residual `∂_t v − Δv + ∇W(v)/ε²` of the glued solution, its
//! regional bounds and the heat-kernel (Duhamel) average.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, Frame, Region};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField2D, VectorField2D};
use crate::linalg::Point;
use crate::par::Exec;
use crate::potential::ThreeWellPotential;
use crate::triod::Trajectory;

/// Fourth-order Laplacian where the ±2 stencil fits, second order next to
/// the grid edge. Differences are taken against the center value so that
/// constant data gives exactly zero.
fn laplacian(f: &VectorField2D, i: usize, j: usize) -> Option<Point> {
    let g = &f.grid;
    let n = g.n;
    if i == 0 || j == 0 || i + 1 >= n || j + 1 >= n {
        return None;
    }
    let c = f.at(i, j);
    let ih2 = 1.0 / (g.h * g.h);
    let axis = |m2: Option<Point>, m1: Point, p1: Point, p2: Option<Point>| -> Point {
        match (m2, p2) {
            (Some(a), Some(b)) => ((m1 - c) * 16.0 + (p1 - c) * 16.0 - (a - c) - (b - c)) * (ih2 / 12.0),
            _ => ((m1 - c) + (p1 - c)) * ih2,
        }
    };
    let get = |a: isize, b: isize| -> Option<Point> {
        let (x, y) = (i as isize + a, j as isize + b);
        if x < 0 || y < 0 || x >= n as isize || y >= n as isize {
            None
        } else {
            Some(f.at(x as usize, y as usize))
        }
    };
    Some(
        axis(get(-2, 0), f.at(i - 1, j), f.at(i + 1, j), get(2, 0))
            + axis(get(0, -2), f.at(i, j - 1), f.at(i, j + 1), get(0, 2)),
    )
}

/// `|∂_t v − Δv + ∇W(v)/ε²|` on a sequence of equally spaced snapshots.
///
/// The time derivative is centered inside the sequence and one-sided at
/// its ends. Nodes outside `mask` (and grid-edge nodes) get zero.
pub fn residual_field(
    fields: &[VectorField2D],
    w: &ThreeWellPotential,
    eps: f64,
    mask: Option<&[bool]>,
    exec: Exec,
) -> Result<Vec<ScalarField2D>> {
    if fields.len() < 2 {
        return Err(Error::InvalidArgument("need at least two snapshots".into()));
    }
    let grid = fields[0].grid;
    if fields.iter().any(|f| f.grid != grid) {
        return Err(Error::ShapeMismatch("snapshots on different grids".into()));
    }
    if grid.h > eps / 4.0 {
        return Err(Error::UnderResolved(format!("h = {} > eps/4 = {}", grid.h, eps / 4.0)));
    }
    let dt = fields[1].time - fields[0].time;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("snapshot times must increase".into()));
    }
    for p in fields.windows(2) {
        if ((p[1].time - p[0].time) - dt).abs() > 1e-9 * dt.max(1e-300) + 1e-15 {
            return Err(Error::InvalidArgument("snapshot times must be equally spaced".into()));
        }
    }
    if dt > grid.h * grid.h / 4.0 {
        return Err(Error::UnderResolved(format!("dt = {dt} > h²/4 = {}", grid.h * grid.h / 4.0)));
    }
    let m = fields.len();
    let ie2 = 1.0 / (eps * eps);
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let cur = &fields[k];
        let time_derivative = |idx: usize| -> Point {
            let v = |q: usize| fields[q].values[idx] - cur.values[idx];
            if k > 0 && k + 1 < m {
                (v(k + 1) - v(k - 1)) / (2.0 * dt)
            } else if m >= 3 && k == 0 {
                (v(1) * 4.0 - v(2)) / (2.0 * dt)
            } else if m >= 3 {
                (v(k - 2) - v(k - 1) * 4.0) / (2.0 * dt)
            } else if k == 0 {
                v(1) / dt
            } else {
                -v(0) / dt
            }
        };
        let mut values = vec![0.0; grid.len()];
        exec.chunks_mut(&mut values, grid.n, |j, row| {
            for (i, slot) in row.iter_mut().enumerate() {
                let idx = grid.index(i, j);
                if let Some(mk) = mask {
                    if !mk[idx] {
                        continue;
                    }
                }
                if let Some(lap) = laplacian(cur, i, j) {
                    *slot = (time_derivative(idx) - lap + w.gradient(&cur.values[idx]) * ie2).norm();
                }
            }
        });
        out.push(ScalarField2D { grid, values, time: cur.time });
    }
    Ok(out)
}

/// Per-node labels; `None` off the mask. The away label is kept only when
/// the whole difference stencil, in space and across all `frames`, sits on
/// the same well plateau; otherwise the node counts as transition.
pub fn classify_regions(frames: &[&Frame], grid: &Grid, mask: &[bool], exec: Exec) -> Vec<Option<Region>> {
    let raw: Vec<Vec<(Region, Option<usize>)>> = frames
        .iter()
        .map(|fr| {
            exec.map(grid.len(), |k| {
                if mask[k] || near_mask(grid, mask, k, 2) {
                    fr.region_detail(&grid.point_at(k))
                } else {
                    (Region::Transition, None)
                }
            })
        })
        .collect();
    exec.map(grid.len(), |k| {
        if !mask[k] {
            return None;
        }
        let (label, well) = raw[0][k];
        if label != Region::Away {
            return Some(label);
        }
        let (i, j) = grid.coords(k);
        for r in &raw {
            for (a, b) in STENCIL {
                let (x, y) = (i as isize + a, j as isize + b);
                if x < 0 || y < 0 || x >= grid.n as isize || y >= grid.n as isize {
                    return Some(Region::Transition);
                }
                let q = r[grid.index(x as usize, y as usize)];
                if q.0 != Region::Away || q.1 != well {
                    return Some(Region::Transition);
                }
            }
        }
        Some(Region::Away)
    })
}

const STENCIL: [(isize, isize); 9] = [(0, 0), (-2, 0), (-1, 0), (1, 0), (2, 0), (0, -2), (0, -1), (0, 1), (0, 2)];

fn near_mask(grid: &Grid, mask: &[bool], k: usize, reach: isize) -> bool {
    let (i, j) = grid.coords(k);
    for (a, b) in STENCIL {
        let (x, y) = (i as isize + a * reach / 2, j as isize + b * reach / 2);
        if x >= 0 && y >= 0 && (x as usize) < grid.n && (y as usize) < grid.n && mask[grid.index(x as usize, y as usize)] {
            return true;
        }
    }
    false
}

/// Nodes needed to difference every masked node.
fn stencil_support(grid: &Grid, mask: &[bool]) -> Vec<bool> {
    (0..grid.len()).map(|k| mask[k] || near_mask(grid, mask, k, 2)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSup {
    pub region: Region,
    pub count: usize,
    pub sup: f64,
}

pub fn region_sups(residual: &ScalarField2D, labels: &[Option<Region>]) -> Vec<RegionSup> {
    Region::ALL
        .iter()
        .map(|&r| {
            let mut count = 0;
            let mut sup: f64 = 0.0;
            for (k, l) in labels.iter().enumerate() {
                if *l == Some(r) {
                    count += 1;
                    sup = sup.max(residual.values[k]);
                }
            }
            RegionSup { region: r, count, sup }
        })
        .collect()
}

/// Residual of the glued solution at time `t`, differenced over
/// `t − dt, t, t + dt` (shifted inside the trajectory at its ends).
pub fn ansatz_residual(
    ansatz: &Ansatz,
    traj: &Trajectory,
    grid: &Grid,
    mask: &[bool],
    t: f64,
    dt: f64,
    exec: Exec,
) -> Result<(ScalarField2D, Vec<Option<Region>>)> {
    let (t0, t1) = (traj.t_start(), traj.t_end());
    let (times, centre) = if t1 - t0 < 2.0 * dt {
        // static data
        ([t0, t0 + dt, t0 + 2.0 * dt], 1)
    } else if t - dt < t0 {
        ([t0, t0 + dt, t0 + 2.0 * dt], ((t - t0) / dt).round().min(2.0) as usize)
    } else if t + dt > t1 {
        ([t1 - 2.0 * dt, t1 - dt, t1], 2 - ((t1 - t) / dt).round().min(2.0) as usize)
    } else {
        ([t - dt, t, t + dt], 1)
    };
    let support = stencil_support(grid, mask);
    let mut frames = Vec::with_capacity(3);
    let mut fields = Vec::with_capacity(3);
    for &s in &times {
        let fr = ansatz.frame_at(traj, s.clamp(t0, t1))?;
        let mut f = fr.sample(grid, Some(&support), exec)?;
        f.time = s;
        fields.push(f);
        frames.push(fr);
    }
    let res = residual_field(&fields, ansatz.potential, ansatz.params.eps, Some(mask), exec)?;
    let order = [centre, (centre + 1) % 3, (centre + 2) % 3];
    let refs: Vec<&Frame> = order.iter().map(|&q| &frames[q]).collect();
    let labels = classify_regions(&refs, grid, mask, exec);
    let mut out = res[centre].clone();
    out.time = t;
    Ok((out, labels))
}

fn erf_cell_weights(h: f64, tau: f64) -> Vec<f64> {
    // ∫ over the cell of width h centered at offset k·h of the 1-D heat kernel
    let s = (4.0 * tau).sqrt();
    let half = ((6.0 * (2.0 * tau).sqrt() / h).ceil() as usize).max(1);
    let mut w = Vec::with_capacity(2 * half + 1);
    for k in -(half as isize)..=(half as isize) {
        let a = (k as f64 - 0.5) * h / s;
        let b = (k as f64 + 0.5) * h / s;
        w.push(0.5 * (libm::erf(b) - libm::erf(a)));
    }
    w
}

fn convolve_axis(src: &[f64], n: usize, kernel: &[f64], along_x: bool, exec: Exec) -> Vec<f64> {
    let half = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    exec.chunks_mut(&mut out, n, |j, row| {
        for (i, slot) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (q, &kw) in kernel.iter().enumerate() {
                let o = q as isize - half;
                let (x, y) = if along_x { (i as isize + o, j as isize) } else { (i as isize, j as isize + o) };
                if x >= 0 && y >= 0 && (x as usize) < n && (y as usize) < n {
                    acc += kw * src[y as usize * n + x as usize];
                }
            }
            *slot = acc;
        }
    });
    out
}

/// Free heat semigroup `e^{τΔ}` with cell-averaged Gaussian weights.
/// Mass leaving the grid is lost, so the total never increases.
pub fn heat_smooth(values: &[f64], grid: &Grid, tau: f64, exec: Exec) -> Vec<f64> {
    if tau <= grid.h * grid.h / 64.0 {
        return values.to_vec();
    }
    let k = erf_cell_weights(grid.h, tau);
    let tmp = convolve_axis(values, grid.n, &k, true, exec);
    convolve_axis(&tmp, grid.n, &k, false, exec)
}

/// `∫₀^Δ e^{τΔ} f dτ` by midpoint rules on dyadic pieces of `[0, Δ]`.
fn heat_integral(f: &[f64], grid: &Grid, span: f64, exec: Exec) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    let floor = grid.h * grid.h / 64.0;
    let mut hi = span;
    loop {
        let lo = if hi / 2.0 <= floor { 0.0 } else { hi / 2.0 };
        let g = heat_smooth(f, grid, 0.5 * (lo + hi), exec);
        for (o, v) in out.iter_mut().zip(g) {
            *o += (hi - lo) * v;
        }
        if lo == 0.0 {
            break;
        }
        hi = lo;
    }
    out
}

/// `sup_{x∈Ω, t} ∫₀ᵗ ∫_Ω G(x − y, t − s) |f|(y, s) dy ds` with `G` the free
/// Gaussian and `f` zero outside `mask`.
///
/// `slices[k]` is taken constant on the slab between the midpoints of
/// consecutive slice times (the first slab starts at `t_start`, the last
/// ends at `t_end`). The running integral is advanced slab by slab with the
/// semigroup property and its sup over `mask` recorded at every slab end.
pub fn duhamel_sup(slices: &[ScalarField2D], mask: &[bool], t_start: f64, t_end: f64, exec: Exec) -> Result<f64> {
    if slices.is_empty() {
        return Ok(0.0);
    }
    let grid = slices[0].grid;
    if slices.iter().any(|s| s.grid != grid) || mask.len() != grid.len() {
        return Err(Error::ShapeMismatch("slices and mask differ".into()));
    }
    let k = slices.len();
    let mut bounds = vec![t_start];
    for q in 1..k {
        bounds.push(0.5 * (slices[q - 1].time + slices[q].time));
    }
    bounds.push(t_end);
    let mut u = vec![0.0; grid.len()];
    let mut best: f64 = 0.0;
    for q in 0..k {
        let span = bounds[q + 1] - bounds[q];
        if span <= 0.0 {
            continue;
        }
        let f: Vec<f64> = slices[q].values.iter().zip(mask).map(|(v, &m)| if m { v.abs() } else { 0.0 }).collect();
        let prop = heat_smooth(&u, &grid, span, exec);
        let src = heat_integral(&f, &grid, span, exec);
        for ((a, b), c) in u.iter_mut().zip(prop).zip(src) {
            *a = b + c;
        }
        let m = u.iter().zip(mask).filter(|(_, &m)| m).fold(0.0, |a: f64, (v, _)| a.max(*v));
        best = best.max(m);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSups {
    pub time: f64,
    pub regions: Vec<RegionSup>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub eps: f64,
    pub rho: f64,
    pub h: f64,
    pub t_end: f64,
    /// Sup over all slices per region.
    pub regions: Vec<RegionSup>,
    pub slices: Vec<SliceSups>,
    pub total_sup: f64,
    pub duhamel_sup: f64,
}

impl ResidualReport {
    pub fn sup(&self, r: Region) -> f64 {
        self.regions.iter().find(|s| s.region == r).map(|s| s.sup).unwrap_or(0.0)
    }

    pub fn count(&self, r: Region) -> usize {
        self.regions.iter().find(|s| s.region == r).map(|s| s.count).unwrap_or(0)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Residual of the glued solution on `slices` equally spaced slab
/// midpoints of `[t_start, t_end]`, its regional sups and Duhamel average.
pub fn audit(
    ansatz: &Ansatz,
    traj: &Trajectory,
    grid: &Grid,
    mask: &[bool],
    t_end: f64,
    slices: usize,
    exec: Exec,
) -> Result<ResidualReport> {
    let t0 = traj.t_start();
    let dt = grid.h * grid.h / 8.0;
    let mut fields = Vec::with_capacity(slices);
    let mut per_slice = Vec::with_capacity(slices);
    let mut regions: Vec<RegionSup> =
        Region::ALL.iter().map(|&r| RegionSup { region: r, count: 0, sup: 0.0 }).collect();
    for q in 0..slices {
        let t = t0 + (q as f64 + 0.5) * (t_end - t0) / slices as f64;
        let (res, labels) = ansatz_residual(ansatz, traj, grid, mask, t, dt, exec)?;
        let sups = region_sups(&res, &labels);
        for (acc, s) in regions.iter_mut().zip(&sups) {
            acc.count += s.count;
            acc.sup = acc.sup.max(s.sup);
        }
        per_slice.push(SliceSups { time: t, regions: sups });
        fields.push(res);
    }
    let total_sup = fields.iter().map(|f| f.sup()).fold(0.0, f64::max);
    let duhamel = duhamel_sup(&fields, mask, t0, t_end, exec)?;
    Ok(ResidualReport {
        eps: ansatz.params.eps,
        rho: ansatz.params.rho,
        h: grid.h,
        t_end,
        regions,
        slices: per_slice,
        total_sup,
        duhamel_sup: duhamel,
    })
}

/// Per-region sups of several reports as CSV rows `eps,time,region,count,sup`.
pub fn write_region_csv(reports: &[ResidualReport], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "eps,time,region,count,sup")?;
    for r in reports {
        for s in &r.slices {
            for g in &s.regions {
                writeln!(f, "{},{},{},{},{:e}", r.eps, s.time, g.region.name(), g.count, g.sup)?;
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionalFit {
    pub region: Region,
    /// Functional form the constants refer to.
    pub form: String,
    /// Fitted prefactor per report, in ladder order.
    pub constants: Vec<f64>,
    /// Fitted exponent or rate where the form has one.
    pub rate: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsCheck {
    pub fits: Vec<RegionalFit>,
    pub pass: bool,
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

fn bounded_ratio(c: &[f64], factor: f64) -> bool {
    let hi = c.iter().cloned().fold(f64::MIN, f64::max);
    let lo = c.iter().cloned().fold(f64::MAX, f64::min);
    lo > 0.0 && hi <= factor * lo
}

/// Fits the functional form of each regional bound across an ε ladder.
///
/// * away: identically zero (sup ≤ 1e-12).
/// * core: `C/ε`, constants within a factor 2.
/// * near-interface: `C`, constants within a factor 2.
/// * angular transition: `C e^{−c ε^{ρ−1}}/ε²` with fitted `c > 0`.
/// * inner blend: `C ε^{−q}`, exponent reported.
/// * outer blend: `C e^{−c/ε}/ε²`, `c` reported.
///
/// With `self_similar` the per-slice sups are weighted by `√s` first, the
/// form appropriate to curvature growing like `1/√s`.
pub fn check_regional_bounds(reports: &[ResidualReport], self_similar: bool) -> BoundsCheck {
    let eps: Vec<f64> = reports.iter().map(|r| r.eps).collect();
    let sup = |reg: Region| -> Vec<f64> {
        reports
            .iter()
            .map(|r| {
                if self_similar {
                    r.slices
                        .iter()
                        .map(|s| {
                            let v = s.regions.iter().find(|g| g.region == reg).map(|g| g.sup).unwrap_or(0.0);
                            v * s.time.max(0.0).sqrt()
                        })
                        .fold(0.0, f64::max)
                } else {
                    r.sup(reg)
                }
            })
            .collect()
    };
    let mut fits = Vec::new();

    let away = sup(Region::Away);
    fits.push(RegionalFit {
        region: Region::Away,
        form: "0".into(),
        constants: away.clone(),
        rate: None,
        pass: away.iter().all(|&v| v <= 1e-12),
    });

    let core: Vec<f64> = sup(Region::Core).iter().zip(&eps).map(|(s, e)| s * e).collect();
    fits.push(RegionalFit {
        region: Region::Core,
        form: "C/eps".into(),
        constants: core.clone(),
        rate: None,
        pass: bounded_ratio(&core, 2.0),
    });

    let near = sup(Region::NearInterface);
    fits.push(RegionalFit {
        region: Region::NearInterface,
        form: "C".into(),
        constants: near.clone(),
        rate: None,
        pass: bounded_ratio(&near, 2.0),
    });

    let rho = reports.first().map(|r| r.rho).unwrap_or(crate::ansatz::DEFAULT_RHO);
    let tr = sup(Region::Transition);
    let x: Vec<f64> = eps.iter().map(|e| e.powf(rho - 1.0)).collect();
    let y: Vec<f64> = tr.iter().zip(&eps).map(|(s, e)| (s * e * e).max(1e-300).ln()).collect();
    let (a, slope) = if reports.len() >= 2 { linear_fit(&x, &y) } else { (f64::NAN, f64::NAN) };
    let c = -slope;
    fits.push(RegionalFit {
        region: Region::Transition,
        form: "C exp(-c eps^(rho-1)) / eps^2".into(),
        constants: vec![a.exp()],
        rate: Some(c),
        pass: c > 0.0,
    });

    let inner = sup(Region::InnerBlend);
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = inner.iter().map(|s| s.max(1e-300).ln()).collect();
    let (a, slope) = if reports.len() >= 2 { linear_fit(&lx, &ly) } else { (f64::NAN, f64::NAN) };
    fits.push(RegionalFit {
        region: Region::InnerBlend,
        form: "C eps^(-q)".into(),
        constants: vec![a.exp()],
        rate: Some(-slope),
        pass: slope.is_finite(),
    });

    let outer = sup(Region::OuterBlend);
    let x: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
    let y: Vec<f64> = outer.iter().zip(&eps).map(|(s, e)| (s * e * e).max(1e-300).ln()).collect();
    let (a, slope) = if reports.len() >= 2 { linear_fit(&x, &y) } else { (f64::NAN, f64::NAN) };
    fits.push(RegionalFit {
        region: Region::OuterBlend,
        form: "C exp(-c/eps) / eps^2".into(),
        constants: vec![a.exp()],
        rate: Some(-slope),
        pass: slope.is_finite(),
    });

    let pass = fits.iter().all(|f| f.pass);
    BoundsCheck { fits, pass }
}
