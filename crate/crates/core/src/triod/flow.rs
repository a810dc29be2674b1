use crate::error::{Error, Result};
use crate::linalg::{Mat2, Point};

use super::{AngleMode, Trajectory, Triod};

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    /// Time step as a fraction of the squared minimal segment length.
    pub cfl: f64,
    /// Number of stored snapshots after the initial one (uniform in time).
    pub snapshots: usize,
    /// Resample a curve to uniform arclength once its longest/shortest
    /// segment ratio exceeds this value.
    pub redistribute_ratio: f64,
    /// Full embeddedness check every this many steps.
    pub check_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { cfl: 0.4, snapshots: 20, redistribute_ratio: 3.0, check_every: 200 }
    }
}

pub fn stable_dt(triod: &Triod, cfl: f64) -> f64 {
    cfl * triod.min_segment().powi(2)
}

/// Point minimizing `Σ w_i |o − p_i|`, where the unit vectors from the
/// points to `o` balance with weights `w`.
fn weighted_fermat(p: &[Point; 3], w: [f64; 3], start: Point) -> Option<Point> {
    let f = |o: &Point| (0..3).map(|i| w[i] * (o - p[i]).norm()).sum::<f64>();
    let wsum = w.iter().sum::<f64>();
    let mut o = start;
    for _ in 0..100 {
        let mut g = Point::zeros();
        let mut h = Mat2::zeros();
        for i in 0..3 {
            let d = o - p[i];
            let r = d.norm();
            if r < 1e-300 {
                return None;
            }
            let u = d / r;
            g += u * w[i];
            h += (Mat2::identity() - u * u.transpose()) * (w[i] / r);
        }
        if g.norm() <= 1e-15 * wsum {
            return Some(o);
        }
        let step = h.lu().solve(&(-g)).unwrap_or(-g);
        let f0 = f(&o);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = o + step * t;
            if f(&trial) <= f0 {
                moved = trial != o;
                o = trial;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            return Some(o);
        }
    }
    Some(o)
}

/// One step of `γ_t = γ_λλ / |γ_λ|²` with fixed endpoints.
///
/// Interior nodes move explicitly. The first interior node of each curve
/// is treated implicitly in the junction position, and the junction is the
/// weighted Fermat point of the partially updated neighbours, which makes
/// the discrete tangents meet exactly at the prescribed angles.
pub fn step(triod: &Triod, dt: f64) -> Result<Triod> {
    let o = triod.junction();
    let mut out = triod.clone();
    let mut a = [Point::zeros(); 3];
    let mut kap = [0.0; 3];
    let mut p = [Point::zeros(); 3];
    for i in 0..3 {
        let c = &triod.curves[i];
        let n = c.len();
        for k in 2..n - 1 {
            let m = (c[k + 1] - c[k - 1]) * 0.5;
            out.curves[i][k] = c[k] + (c[k + 1] - c[k] * 2.0 + c[k - 1]) * (dt / m.norm_squared());
        }
        kap[i] = 1.0 / ((c[2] - c[0]) * 0.5).norm_squared();
        a[i] = c[1] + c[2] * (dt * kap[i]);
        p[i] = a[i] / (1.0 + dt * kap[i]);
    }
    let new_o = weighted_fermat(&p, triod.angle_mode.fermat_weights(), o).ok_or_else(|| Error::FlowSingular {
        time: triod.time,
        reason: "junction collapsed onto a neighbouring node".into(),
    })?;
    for i in 0..3 {
        out.curves[i][0] = new_o;
        out.curves[i][1] = (a[i] + new_o * (dt * kap[i])) / (1.0 + 2.0 * dt * kap[i]);
    }
    out.time = triod.time + dt;
    if out.curves.iter().flatten().any(|q| !q.x.is_finite() || !q.y.is_finite()) {
        return Err(Error::FlowSingular { time: out.time, reason: "non-finite node".into() });
    }
    out.check_regular()?;
    Ok(out)
}

fn segment_ratio(c: &[Point]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for w in c.windows(2) {
        let d = (w[1] - w[0]).norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    hi / lo
}

/// Resamples an open polyline to uniform arclength with Catmull-Rom
/// interpolation, keeping both end nodes.
pub(crate) fn redistribute(c: &mut [Point]) {
    let n = c.len();
    let mut s = vec![0.0; n];
    for k in 1..n {
        s[k] = s[k - 1] + (c[k] - c[k - 1]).norm();
    }
    let total = s[n - 1];
    let old = c.to_vec();
    let mut seg = 0;
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        while seg + 2 < n && s[seg + 1] < target {
            seg += 1;
        }
        // cubic Lagrange interpolation in arclength over four nodes
        let lo = seg.saturating_sub(1).min(n.saturating_sub(4));
        let idx = [lo, lo + 1, lo + 2, lo + 3];
        let mut p = Point::zeros();
        for &a in &idx {
            let mut w = 1.0;
            for &b in &idx {
                if a != b {
                    w *= (target - s[b]) / (s[a] - s[b]);
                }
            }
            p += old[a] * w;
        }
        c[k] = p;
    }
}

/// Evolves to `t_end`, storing `opts.snapshots + 1` uniformly spaced snapshots.
pub fn evolve(triod: &Triod, t_end: f64, opts: &FlowOptions) -> Result<Trajectory> {
    let mut cur = triod.clone();
    let t0 = cur.time;
    let mut times = vec![t0];
    let mut triods = vec![cur.clone()];
    let snaps = opts.snapshots.max(1);
    let mut steps = 0usize;
    for s in 1..=snaps {
        let target = t0 + (t_end - t0) * s as f64 / snaps as f64;
        while cur.time < target - 1e-14 * (1.0 + target.abs()) {
            let dt = stable_dt(&cur, opts.cfl).min(target - cur.time);
            cur = step(&cur, dt)?;
            steps += 1;
            for i in 0..3 {
                if cur.curves[i].len() > 3 && segment_ratio(&cur.curves[i]) > opts.redistribute_ratio {
                    redistribute(&mut cur.curves[i]);
                }
            }
            if opts.check_every > 0 && steps % opts.check_every == 0 {
                cur.check_embedded()?;
            }
        }
        cur.time = target;
        cur.check_embedded()?;
        times.push(target);
        triods.push(cur.clone());
    }
    Ok(Trajectory { times, triods })
}

/// One explicit step of the same law for a closed polygon.
pub fn step_closed(c: &[Point], dt: f64) -> Vec<Point> {
    let n = c.len();
    (0..n)
        .map(|k| {
            let (a, b) = (c[(k + n - 1) % n], c[(k + 1) % n]);
            let m = (b - a) * 0.5;
            c[k] + (b - c[k] * 2.0 + a) * (dt / m.norm_squared())
        })
        .collect()
}

pub fn evolve_closed(c: &[Point], t_end: f64, cfl: f64) -> Vec<Point> {
    let mut cur = c.to_vec();
    let mut t = 0.0;
    while t < t_end - 1e-15 {
        let n = cur.len();
        let hmin = (0..n).map(|k| (cur[(k + 1) % n] - cur[k]).norm()).fold(f64::INFINITY, f64::min);
        let dt = (cfl * hmin * hmin).min(t_end - t);
        cur = step_closed(&cur, dt);
        t += dt;
    }
    cur
}

/// Flow from three rays (truncated at a radius well outside the parabolic
/// scale `sqrt(t_end)`, endpoints pinned) with balanced angles.
pub fn self_similar_expander(ray_angles: [f64; 3], t_end: f64, resolution: usize) -> Result<Trajectory> {
    let a = ray_angles.map(|x| x.rem_euclid(std::f64::consts::TAU));
    for i in 0..3 {
        for j in i + 1..3 {
            if (a[i] - a[j]).abs() < 1e-9 {
                return Err(Error::InvalidArgument("ray angles must be distinct".into()));
            }
        }
    }
    let radius = (8.0 * t_end.sqrt()).max(4.0);
    let init = Triod::rays(ray_angles, radius, resolution)?;
    let opts = FlowOptions { snapshots: 200, ..FlowOptions::default() };
    evolve(&Triod { angle_mode: AngleMode::Balanced, ..init }, t_end, &opts)
}

/// `t ↦ (1/β) γ(·, β² t)` at the stored times `t` for which `β² t` is covered.
pub fn rescale_blowup(traj: &Trajectory, beta: f64) -> Result<Trajectory> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("β = {beta} must be positive")));
    }
    let mut times = Vec::new();
    let mut triods = Vec::new();
    for &t in &traj.times {
        if beta * beta * t <= traj.t_end() * (1.0 + 1e-12) && beta * beta * t >= traj.t_start() {
            times.push(t);
            triods.push(rescale_blowup_at(traj, beta, t)?);
        }
    }
    if times.is_empty() {
        return Err(Error::TimeOutOfRange(beta * beta * traj.t_end(), traj.t_start(), traj.t_end()));
    }
    Ok(Trajectory { times, triods })
}

pub fn rescale_blowup_at(traj: &Trajectory, beta: f64, t: f64) -> Result<Triod> {
    let mut tr = traj.at(beta * beta * t)?.scaled(1.0 / beta);
    tr.time = t;
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;
    use crate::linalg::pt;

    #[test]
    fn fermat_point_of_equilateral_triangle() {
        let p = [pt(1.0, 0.0), pt(-0.5, 0.8660254037844386), pt(-0.5, -0.8660254037844386)];
        let o = weighted_fermat(&p, [1.0; 3], pt(0.1, 0.05)).unwrap();
        assert!(o.norm() < 1e-12);
    }

    #[test]
    fn fixed_angles_are_enforced_after_one_step() {
        let alpha = [2.4, 1.9, std::f64::consts::TAU - 4.3];
        let th = [0.0, alpha[1], alpha[1] + alpha[2]];
        let mut t = Triod::straight(pt(0.05, -0.02), th, &Domain::unit_disk(), 33).unwrap();
        t.angle_mode = AngleMode::Fixed(alpha);
        t.curves[1][10] += pt(0.01, 0.0);
        let dt = stable_dt(&t, 0.4);
        let s = step(&t, dt).unwrap();
        assert!(s.angle_residual() < 1e-10, "{}", s.angle_residual());
    }

    #[test]
    fn redistribution_keeps_straight_lines() {
        let mut c: Vec<Point> = (0..20).map(|k| pt((k as f64 / 19.0).powi(2), 0.0)).collect();
        redistribute(&mut c);
        for (k, p) in c.iter().enumerate() {
            assert!((p.x - k as f64 / 19.0).abs() < 1e-12 && p.y == 0.0);
        }
    }
}
