use crate::error::{Error, Result};
use crate::linalg::Point;

use super::ThreeWellPotential;

const GAUSS_S: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const GAUSS_W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
const REPARAM_EVERY: usize = 50;
const MAX_ITER: usize = 40_000;

#[derive(Clone, Debug)]
pub struct GeodesicPath {
    pub nodes: Vec<Point>,
    pub value: f64,
    pub iterations: usize,
}

impl GeodesicPath {
    /// Same path with a midpoint inserted in every segment.
    pub fn refined(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            out.push(w[0]);
            out.push((w[0] + w[1]) * 0.5);
        }
        out.push(*self.nodes.last().unwrap());
        out
    }
}

/// Weighted length `Σ_seg ∫ W^{1/2} |γ'|` of a polyline.
pub fn weighted_length(w: &ThreeWellPotential, nodes: &[Point]) -> f64 {
    nodes
        .windows(2)
        .map(|s| {
            let d = s[1] - s[0];
            let q: f64 = (0..3).map(|g| GAUSS_W[g] * w.eval(&(s[0] + d * GAUSS_S[g])).max(0.0).sqrt()).sum();
            d.norm() * q
        })
        .sum()
}

fn length_and_gradient(w: &ThreeWellPotential, nodes: &[Point], grad: &mut [Point]) -> f64 {
    for g in grad.iter_mut() {
        *g = Point::zeros();
    }
    let mut total = 0.0;
    for k in 0..nodes.len() - 1 {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let d = b - a;
        let l = d.norm();
        if l == 0.0 {
            continue;
        }
        let mut q = 0.0;
        let mut ga = Point::zeros();
        let mut gb = Point::zeros();
        for g in 0..3 {
            let x = a + d * GAUSS_S[g];
            let wx = w.eval(&x).max(0.0);
            let sq = wx.sqrt();
            q += GAUSS_W[g] * sq;
            if sq > 1e-150 {
                let gq = w.gradient(&x) / (2.0 * sq);
                ga += gq * (GAUSS_W[g] * (1.0 - GAUSS_S[g]) * l);
                gb += gq * (GAUSS_W[g] * GAUSS_S[g] * l);
            }
        }
        total += l * q;
        let t = d / l;
        grad[k] += ga - t * q;
        grad[k + 1] += gb + t * q;
    }
    total
}

fn reparametrize(nodes: &mut [Point]) {
    let n = nodes.len();
    let mut s = vec![0.0; n];
    for k in 1..n {
        s[k] = s[k - 1] + (nodes[k] - nodes[k - 1]).norm();
    }
    let total = s[n - 1];
    if total == 0.0 {
        return;
    }
    let old = nodes.to_vec();
    let mut seg = 0;
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        while seg + 1 < n - 1 && s[seg + 1] < target {
            seg += 1;
        }
        let span = s[seg + 1] - s[seg];
        let f = if span > 0.0 { (target - s[seg]) / span } else { 0.0 };
        nodes[k] = old[seg] + (old[seg + 1] - old[seg]) * f;
    }
}

/// Γ(c_i, c_j) by minimizing the discretized weighted length over the
/// interior nodes of a polyline starting from the straight segment.
pub fn gamma_distance(w: &ThreeWellPotential, i: usize, j: usize, path_nodes: usize, tol: f64) -> Result<f64> {
    if i > 2 || j > 2 {
        return Err(Error::InvalidArgument(format!("well index out of range ({i}, {j})")));
    }
    if i == j {
        return Ok(0.0);
    }
    if path_nodes < 16 {
        return Err(Error::InvalidArgument(format!("path_nodes = {path_nodes} < 16")));
    }
    let (a, b) = (w.wells[i], w.wells[j]);
    let init: Vec<Point> = (0..path_nodes)
        .map(|k| a + (b - a) * (k as f64 / (path_nodes - 1) as f64))
        .collect();
    Ok(gamma_distance_from(w, init, tol)?.value)
}

/// Minimizes the weighted length from a given polyline (endpoints fixed)
/// by Polak-Ribière conjugate gradients with Armijo backtracking.
pub fn gamma_distance_from(w: &ThreeWellPotential, init: Vec<Point>, tol: f64) -> Result<GeodesicPath> {
    let n = init.len();
    if n < 3 {
        return Err(Error::InvalidArgument("path needs at least 3 nodes".into()));
    }
    let mut x = init;
    let mut g = vec![Point::zeros(); n];
    let mut g_old = vec![Point::zeros(); n];
    let mut dir = vec![Point::zeros(); n];
    let mut trial = x.clone();
    let mut trial_g = vec![Point::zeros(); n];
    let mut f = length_and_gradient(w, &x, &mut g);
    let mut step: f64 = 1e-2;
    let mut window_start = f;
    let mut restart = true;

    for it in 1..=MAX_ITER {
        g[0] = Point::zeros();
        g[n - 1] = Point::zeros();
        if restart {
            for k in 0..n {
                dir[k] = -g[k];
            }
            restart = false;
        } else {
            let num: f64 = (0..n).map(|k| g[k].dot(&(g[k] - g_old[k]))).sum();
            let den: f64 = (0..n).map(|k| g_old[k].norm_squared()).sum();
            let beta = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
            for k in 0..n {
                dir[k] = -g[k] + dir[k] * beta;
            }
        }
        let mut slope: f64 = (0..n).map(|k| g[k].dot(&dir[k])).sum();
        if slope >= 0.0 {
            for k in 0..n {
                dir[k] = -g[k];
            }
            slope = -(0..n).map(|k| g[k].norm_squared()).sum::<f64>();
        }
        if slope == 0.0 {
            return Ok(GeodesicPath { nodes: x, value: f, iterations: it });
        }
        let max_dir = dir.iter().map(|d| d.norm()).fold(0.0, f64::max);
        // keep individual node moves below a fraction of the local segment scale
        let seg = (x[1] - x[0]).norm().max(1e-12);
        let mut t = step.min(0.25 * seg / max_dir.max(1e-300)) * 2.0;
        let mut accepted = false;
        for _ in 0..60 {
            for k in 0..n {
                trial[k] = x[k] + dir[k] * t;
            }
            let ft = length_and_gradient(w, &trial, &mut trial_g);
            if ft <= f + 1e-4 * t * slope {
                std::mem::swap(&mut x, &mut trial);
                std::mem::swap(&mut g_old, &mut g);
                std::mem::swap(&mut g, &mut trial_g);
                f = ft;
                step = t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if restart {
                return Ok(GeodesicPath { nodes: x, value: f, iterations: it });
            }
            restart = true;
            continue;
        }
        if it % REPARAM_EVERY == 0 {
            reparametrize(&mut x);
            f = length_and_gradient(w, &x, &mut g);
            restart = true;
            if (window_start - f).abs() <= tol * f.max(1e-300) {
                return Ok(GeodesicPath { nodes: x, value: f, iterations: it });
            }
            window_start = f;
        }
    }
    Err(Error::GeodesicNotConverged { best: f, iterations: MAX_ITER })
}
