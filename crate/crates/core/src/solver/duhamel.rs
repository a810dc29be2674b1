//! Picard iteration of the Duhamel formula on a square.
//!
//! With `u = h + g`, `g` a lift of the Dirichlet data and `h = 0` on the
//! boundary, the semi-discrete system reads
//! `h' = Δ_D h + Δ_h g − ∂_t g − ∇W(h + g)/ε²`.
//! The Dirichlet semigroup `e^{tΔ_D}` is diagonal in the discrete sine
//! basis; each sweep re-evaluates the source on the previous iterate and
//! integrates it exactly against the semigroup, the source being linear in
//! time on every step. Sweeps run on consecutive time windows short enough
//! for the map to contract.

use crate::error::{Error, Result};
use crate::grid::{Domain, VectorField2D};
use crate::linalg::Point;
use crate::par::Exec;
use crate::potential::ThreeWellPotential;

use super::{data_range, time_levels, FieldData, Layout, Scheme, Solution, SolveConfig};

#[derive(Clone, Debug)]
pub struct DuhamelRun {
    pub solution: Solution,
    /// Sup difference between successive sweeps, per time window.
    pub history: Vec<Vec<f64>>,
}

/// Orthonormal sine transform on `m × m` interior values (its own inverse).
struct SineBasis {
    m: usize,
    s: Vec<f64>,
    /// Eigenvalues of the 1-D Dirichlet 5-point Laplacian.
    mu: Vec<f64>,
}

impl SineBasis {
    fn new(m: usize, h: f64) -> Self {
        let norm = (2.0 / (m + 1) as f64).sqrt();
        let mut s = vec![0.0; m * m];
        for p in 0..m {
            for i in 0..m {
                s[p * m + i] = norm * (std::f64::consts::PI * ((p + 1) * (i + 1)) as f64 / (m + 1) as f64).sin();
            }
        }
        let mu = (0..m)
            .map(|p| {
                let a = (std::f64::consts::PI * (p + 1) as f64 / (2 * (m + 1)) as f64).sin();
                -4.0 * a * a / (h * h)
            })
            .collect();
        SineBasis { m, s, mu }
    }

    /// `S X S` for a row-major `m × m` block.
    fn apply(&self, x: &[f64], exec: Exec) -> Vec<f64> {
        let m = self.m;
        let s = &self.s;
        let mut tmp = vec![0.0; m * m];
        exec.chunks_mut(&mut tmp, m, |j, row| {
            let xr = &x[j * m..(j + 1) * m];
            for (p, slot) in row.iter_mut().enumerate() {
                let sp = &s[p * m..(p + 1) * m];
                *slot = xr.iter().zip(sp).map(|(a, b)| a * b).sum();
            }
        });
        let mut out = vec![0.0; m * m];
        exec.chunks_mut(&mut out, m, |q, row| {
            let sq = &s[q * m..(q + 1) * m];
            for j in 0..m {
                let w = sq[j];
                let tr = &tmp[j * m..(j + 1) * m];
                for (slot, &t) in row.iter_mut().zip(tr) {
                    *slot += w * t;
                }
            }
        });
        out
    }
}

/// Interior values of both components as two `m × m` blocks.
fn split(u: &[Point], n: usize) -> [Vec<f64>; 2] {
    let m = n - 2;
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m * m];
    for j in 0..m {
        for i in 0..m {
            let p = u[(j + 1) * n + i + 1];
            a[j * m + i] = p.x;
            b[j * m + i] = p.y;
        }
    }
    [a, b]
}

fn merge(c: &[Vec<f64>; 2], n: usize) -> Vec<Point> {
    let m = n - 2;
    let mut u = vec![Point::zeros(); n * n];
    for j in 0..m {
        for i in 0..m {
            u[(j + 1) * n + i + 1] = Point::new(c[0][j * m + i], c[1][j * m + i]);
        }
    }
    u
}

/// `e^z`, `(e^z − 1)/z` and `(e^z − 1 − z)/z²`.
fn phi_functions(z: f64) -> (f64, f64, f64) {
    if z.abs() < 1e-3 {
        (z.exp(), 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0, 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0)
    } else {
        let e1 = z.exp_m1();
        (e1 + 1.0, e1 / z, (e1 - z) / (z * z))
    }
}

/// Picard sweeps `h ↦ F_ε(h)` starting from `guess − lift` (or the initial
/// gap held constant in time); returns `u = h + lift`.
///
/// `lift` must carry the Dirichlet data on the boundary of the square.
pub fn duhamel_iterate(
    config: &SolveConfig,
    w: &ThreeWellPotential,
    lift: &dyn FieldData,
    initial: &dyn FieldData,
    guess: Option<&dyn FieldData>,
    sweeps: usize,
    exec: Exec,
) -> Result<DuhamelRun> {
    if !matches!(config.domain, Domain::Square { .. }) {
        return Err(Error::InvalidArgument("the Duhamel iteration needs a square domain".into()));
    }
    if sweeps == 0 {
        return Err(Error::InvalidArgument("at least one sweep".into()));
    }
    let snaps = config.validate()?;
    let grid = config.grid();
    let n = grid.n;
    let m = n - 2;
    let layout = Layout::new(&config.domain, grid);
    let pts: Vec<Point> = (0..grid.len()).map(|k| grid.point_at(k)).collect();
    let t0 = config.t_start;
    let ie2 = 1.0 / (config.eps * config.eps);

    let psi = initial.sample(&pts, t0, exec)?;
    let g0 = lift.sample(&pts, t0, exec)?;
    let range = data_range(w, &psi, &g0);
    let lam = w.max_hessian_eigenvalue(1.1 * range);
    let dt = config.dt.unwrap_or_else(|| SolveConfig { scheme: Scheme::DuhamelIteration, ..config.clone() }.stability_bound(lam));
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt = {dt}")));
    }
    let levels = time_levels(t0, &snaps, dt);
    let nl = levels.len();

    // lift, and its forcing Δ_h g − ∂_t g, at every level
    let tau = 1e-3 * dt;
    let mut g = Vec::with_capacity(nl);
    let mut forcing = Vec::with_capacity(nl);
    for (q, &t) in levels.iter().enumerate() {
        let gt = if q == 0 { g0.clone() } else { lift.sample(&pts, t, exec)? };
        let (ta, tb) = ((t - tau).max(t0), (t + tau).min(config.t_end));
        let ga = lift.sample(&pts, ta, exec)?;
        let gb = lift.sample(&pts, tb, exec)?;
        let lap = layout.laplacian(&gt, exec);
        let f: Vec<Point> = (0..gt.len()).map(|k| lap[k] - (gb[k] - ga[k]) / (tb - ta)).collect();
        g.push(gt);
        forcing.push(f);
    }

    let mut h: Vec<Vec<Point>> = Vec::with_capacity(nl);
    let gap: Vec<Point> = (0..pts.len()).map(|k| if layout.unknown[k] { psi[k] - g0[k] } else { Point::zeros() }).collect();
    for (q, &t) in levels.iter().enumerate() {
        let start = match (q, guess) {
            (0, _) | (_, None) => gap.clone(),
            (_, Some(gs)) => {
                let v = gs.sample(&pts, t, exec)?;
                (0..pts.len()).map(|k| if layout.unknown[k] { v[k] - g[q][k] } else { Point::zeros() }).collect()
            }
        };
        h.push(start);
    }

    let basis = SineBasis::new(m, grid.h);
    let source = |q: usize, hq: &[Point]| -> [Vec<f64>; 2] {
        let f: Vec<Point> = exec.map(hq.len(), |k| {
            if layout.unknown[k] {
                forcing[q][k] - w.gradient(&(hq[k] + g[q][k])) * ie2
            } else {
                Point::zeros()
            }
        });
        let [a, b] = split(&f, n);
        [basis.apply(&a, exec), basis.apply(&b, exec)]
    };

    // windows with (Lipschitz constant) × (length) ≤ 1/2
    let window = (0.5 / (lam.max(1e-12) * ie2)).max(dt);
    let mut history = Vec::new();
    let mut a = 0;
    while a + 1 < nl {
        let mut b = a + 1;
        while b + 1 < nl && levels[b + 1] - levels[a] <= window * (1.0 + 1e-12) {
            b += 1;
        }
        let ha = {
            let [x, y] = split(&h[a], n);
            [basis.apply(&x, exec), basis.apply(&y, exec)]
        };
        let fa = source(a, &h[a]);
        let mut hist = Vec::new();
        for _ in 0..sweeps {
            let mut prev_hat = ha.clone();
            let mut prev_f = fa.clone();
            let mut diff: f64 = 0.0;
            let mut new_h = Vec::with_capacity(b - a);
            for q in a + 1..=b {
                let step = levels[q] - levels[q - 1];
                let fq = source(q, &h[q]);
                let mut next = [vec![0.0; m * m], vec![0.0; m * m]];
                for qy in 0..m {
                    for px in 0..m {
                        let z = step * (basis.mu[px] + basis.mu[qy]);
                        let (e, p1, p2) = phi_functions(z);
                        let idx = qy * m + px;
                        for c in 0..2 {
                            let f0 = prev_f[c][idx];
                            let f1 = fq[c][idx];
                            next[c][idx] = e * prev_hat[c][idx] + step * (p1 * f0 + p2 * (f1 - f0));
                        }
                    }
                }
                let phys = merge(&[basis.apply(&next[0], exec), basis.apply(&next[1], exec)], n);
                for k in 0..phys.len() {
                    diff = diff.max((phys[k] - h[q][k]).norm());
                }
                new_h.push(phys);
                prev_hat = next;
                prev_f = fq;
            }
            // Picard: the source of every step used the previous iterate
            for (q, v) in (a + 1..=b).zip(new_h) {
                h[q] = v;
            }
            hist.push(diff);
            if !diff.is_finite() || (hist[0] > 0.0 && diff > 1e3 * hist[0]) {
                history.push(hist.clone());
                return Err(Error::DuhamelDiverged(hist));
            }
            if diff <= config.sweep_tol {
                break;
            }
        }
        let n_h = hist.len();
        if n_h >= 3 && hist[n_h - 1] > config.sweep_tol && hist[n_h - 1] >= hist[n_h - 2] && hist[n_h - 2] >= hist[n_h - 3] {
            return Err(Error::DuhamelDiverged(hist));
        }
        history.push(hist);
        a = b;
    }

    let r_w = w.coercivity_radius();
    let psi_sup = layout.sup_unknown(&psi);
    let mut data_sup: f64 = 0.0;
    let mut snapshots = Vec::with_capacity(snaps.len());
    let mut diagnostics = Vec::with_capacity(snaps.len());
    let mut next_snap = 0;
    for (q, &t) in levels.iter().enumerate() {
        data_sup = layout.ring.iter().map(|&k| g[q][k].norm()).fold(data_sup, f64::max);
        while next_snap < snaps.len() && (snaps[next_snap] - t).abs() <= 1e-12 * (1.0 + t.abs()) {
            let u: Vec<Point> = (0..pts.len()).map(|k| h[q][k] + g[q][k]).collect();
            diagnostics.push(layout.diagnostics(w, &u, config.eps, t, psi_sup.max(data_sup).max(r_w)));
            snapshots.push(VectorField2D::new(grid, u, t)?);
            next_snap += 1;
        }
    }
    Ok(DuhamelRun {
        solution: Solution { snapshots, diagnostics, unknown: layout.unknown, dt, steps: nl - 1 },
        history,
    })
}
