//! One-dimensional connections `ζ'' = ∇W(ζ)` between two wells.

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{cubic_weights, BandMatrix, Point};
use crate::potential::ThreeWellPotential;

#[derive(Clone, Debug)]
pub struct HeteroclinicProfile {
    pub half_width: f64,
    pub samples: Vec<Point>,
    pub endpoints: (usize, usize),
    pub wells: (Point, Point),
    /// Linearized decay exponents at the start and end well.
    pub decay_rate: (f64, f64),
    /// Node derivatives `(ζ', ζ'')`, filled on first smooth evaluation.
    jets: OnceLock<Vec<(Point, Point)>>,
}

impl HeteroclinicProfile {
    pub fn nodes(&self) -> usize {
        self.samples.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.samples.len() - 1) as f64
    }

    pub fn tau(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    fn tail(&self, tau: f64) -> Option<Point> {
        let l = self.half_width;
        if tau < -l {
            let (c, s) = (self.wells.0, self.samples[0]);
            Some(c + (s - c) * (-(self.decay_rate.0) * (-l - tau)).exp())
        } else if tau > l {
            let (c, s) = (self.wells.1, *self.samples.last().unwrap());
            Some(c + (s - c) * (-(self.decay_rate.1) * (tau - l)).exp())
        } else {
            None
        }
    }

    /// Piecewise-linear evaluation with exponential tails beyond `±L`.
    pub fn eval(&self, tau: f64) -> Point {
        if let Some(p) = self.tail(tau) {
            return p;
        }
        let n = self.samples.len();
        let s = ((tau + self.half_width) / self.spacing()).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        let f = s - k as f64;
        self.samples[k] * (1.0 - f) + self.samples[k + 1] * f
    }

    fn jets(&self) -> &[(Point, Point)] {
        self.jets.get_or_init(|| {
            let h = self.spacing();
            (0..self.samples.len() as isize)
                .map(|k| {
                    let f = |o: isize| self.sample_ext(k + o);
                    let d1 = (f(3) - f(-3) + (f(-2) - f(2)) * 9.0 + (f(1) - f(-1)) * 45.0) / (60.0 * h);
                    let d2 = ((f(3) + f(-3)) * 2.0 - (f(2) + f(-2)) * 27.0 + (f(1) + f(-1)) * 270.0 - f(0) * 490.0)
                        / (180.0 * h * h);
                    (d1, d2)
                })
                .collect()
        })
    }

    /// Quintic Hermite evaluation from node values and sixth-order node
    /// derivatives, so second derivatives are continuous; used where the
    /// Laplacian of a composed field matters.
    pub fn eval_smooth(&self, tau: f64) -> Point {
        if let Some(p) = self.tail(tau) {
            return p;
        }
        let n = self.samples.len();
        let h = self.spacing();
        let s = ((tau + self.half_width) / h).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        let t = s - k as f64;
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let j = self.jets();
        let (m0, a0) = j[k];
        let (m1, a1) = j[k + 1];
        self.samples[k] * (1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5)
            + self.samples[k + 1] * (10.0 * t3 - 15.0 * t4 + 6.0 * t5)
            + m0 * (h * (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5))
            + m1 * (h * (-4.0 * t3 + 7.0 * t4 - 3.0 * t5))
            + a0 * (h * h * 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5))
            + a1 * (h * h * 0.5 * (t3 - 2.0 * t4 + t5))
    }

    fn sample_ext(&self, k: isize) -> Point {
        let n = self.samples.len() as isize;
        if k < 0 || k >= n {
            self.tail(self.tau(0) + k as f64 * self.spacing()).unwrap()
        } else {
            self.samples[k as usize]
        }
    }

    /// Discrete action `Σ (½|Δζ/Δτ|² + W(ζ)) Δτ`.
    pub fn action(&self, w: &ThreeWellPotential) -> f64 {
        let h = self.spacing();
        let kin: f64 = self.samples.windows(2).map(|p| 0.5 * (p[1] - p[0]).norm_squared() / h).sum();
        let pot: f64 = self.samples.iter().map(|p| w.eval(p)).sum::<f64>() * h;
        kin + pot
    }

    /// `sup_k | |ζ'|² − 2W(ζ) |` with centered differences at interior nodes.
    pub fn equipartition_error(&self, w: &ThreeWellPotential) -> f64 {
        let h = self.spacing();
        (1..self.samples.len() - 1)
            .map(|k| {
                let d = (self.samples[k + 1] - self.samples[k - 1]) / (2.0 * h);
                (d.norm_squared() - 2.0 * w.eval(&self.samples[k])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Max-norm of the discrete residual `ζ'' − ∇W(ζ)` at interior nodes.
    pub fn ode_residual(&self, w: &ThreeWellPotential) -> f64 {
        residual_norm(w, &self.samples, self.spacing())
    }

    pub fn max_norm(&self) -> f64 {
        self.samples.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Profile traversed in the opposite direction.
    pub fn reversed(&self) -> HeteroclinicProfile {
        let mut samples = self.samples.clone();
        samples.reverse();
        HeteroclinicProfile {
            half_width: self.half_width,
            samples,
            endpoints: (self.endpoints.1, self.endpoints.0),
            wells: (self.wells.1, self.wells.0),
            decay_rate: (self.decay_rate.1, self.decay_rate.0),
            jets: OnceLock::new(),
        }
    }

    /// Writes `tau,zeta1,zeta2` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "tau,zeta1,zeta2")?;
        for (k, p) in self.samples.iter().enumerate() {
            writeln!(f, "{:.17e},{:.17e},{:.17e}", self.tau(k), p.x, p.y)?;
        }
        Ok(())
    }
}

fn residual_norm(w: &ThreeWellPotential, z: &[Point], h: f64) -> f64 {
    (1..z.len() - 1)
        .map(|k| ((z[k + 1] - z[k] * 2.0 + z[k - 1]) / (h * h) - w.gradient(&z[k])).norm())
        .fold(0.0, f64::max)
}

fn solve_tridiagonal(sub: f64, diag: f64, rhs: &mut [f64]) {
    // constant-coefficient symmetric tridiagonal system, Thomas algorithm
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut beta = diag;
    c[0] = sub / beta;
    rhs[0] /= beta;
    for k in 1..n {
        beta = diag - sub * c[k - 1];
        c[k] = sub / beta;
        rhs[k] = (rhs[k] - sub * rhs[k - 1]) / beta;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
}

/// Semi-implicit gradient flow of the action with clamped ends.
fn relax(w: &ThreeWellPotential, z: &mut [Point], h: f64, steps: usize) {
    let n = z.len();
    let dt = 0.1;
    let r = dt / (h * h);
    let mut bx = vec![0.0; n - 2];
    let mut by = vec![0.0; n - 2];
    for _ in 0..steps {
        let mut change: f64 = 0.0;
        for k in 1..n - 1 {
            let g = w.gradient(&z[k]);
            bx[k - 1] = z[k].x - dt * g.x;
            by[k - 1] = z[k].y - dt * g.y;
        }
        bx[0] += r * z[0].x;
        by[0] += r * z[0].y;
        bx[n - 3] += r * z[n - 1].x;
        by[n - 3] += r * z[n - 1].y;
        solve_tridiagonal(-r, 1.0 + 2.0 * r, &mut bx);
        solve_tridiagonal(-r, 1.0 + 2.0 * r, &mut by);
        for k in 1..n - 1 {
            let p = Point::new(bx[k - 1], by[k - 1]);
            change = change.max((p - z[k]).norm());
            z[k] = p;
        }
        if change < 1e-7 * dt {
            break;
        }
    }
}

/// Shifts a profile by a fractional number of nodes so that the discrete
/// maximum of `W` lands on the middle node.
fn center_on_max(w: &ThreeWellPotential, z: &mut [Point]) {
    let n = z.len();
    let mid = n / 2;
    let (kmax, _) = z
        .iter()
        .enumerate()
        .map(|(k, p)| (k, w.eval(p)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    if kmax == 0 || kmax == n - 1 {
        return;
    }
    let (a, b, c) = (w.eval(&z[kmax - 1]), w.eval(&z[kmax]), w.eval(&z[kmax + 1]));
    let den = a - 2.0 * b + c;
    let frac = if den < 0.0 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };
    let shift = kmax as f64 + frac - mid as f64;
    let old = z.to_vec();
    let at = |k: isize| old[k.clamp(0, n as isize - 1) as usize];
    for k in 1..n - 1 {
        let s = k as f64 + shift;
        let base = s.floor();
        let wts = cubic_weights(s - base);
        let b = base as isize;
        let mut p = Point::zeros();
        for q in 0..4 {
            p += at(b - 1 + q as isize) * wts[q];
        }
        z[k] = p;
    }
}

/// Newton iteration on the discrete ODE with the centering condition
/// `∇W(ζ_mid) · (ζ_{mid+1} − ζ_{mid−1}) = 0` replacing one equation.
fn newton(w: &ThreeWellPotential, z: &mut [Point], h: f64, tol: f64) -> Result<f64> {
    let n = z.len();
    let m = n - 2;
    let mid = n / 2;
    let ih2 = 1.0 / (h * h);
    let eval_res = |z: &[Point], pin_row: usize| -> Vec<f64> {
        let mut f = vec![0.0; 2 * m];
        for k in 1..n - 1 {
            let r = (z[k + 1] - z[k] * 2.0 + z[k - 1]) * ih2 - w.gradient(&z[k]);
            f[2 * (k - 1)] = r.x;
            f[2 * (k - 1) + 1] = r.y;
        }
        let g = w.gradient(&z[mid]);
        f[pin_row] = g.dot(&(z[mid + 1] - z[mid - 1])) * ih2;
        f
    };
    let mut last = f64::INFINITY;
    for it in 0..60 {
        let t = z[mid + 1] - z[mid - 1];
        let pin_row = 2 * (mid - 1) + if t.x.abs() >= t.y.abs() { 0 } else { 1 };
        let f = eval_res(z, pin_row);
        let fnorm = f.iter().enumerate().filter(|(r, _)| *r != pin_row).map(|(_, v)| v.abs()).fold(0.0, f64::max);
        let res = residual_norm(w, z, h);
        if fnorm <= tol && f[pin_row].abs() <= tol {
            return Ok(res);
        }
        let mut a = BandMatrix::zeros(2 * m, 3, 3);
        for k in 1..n - 1 {
            let hs = w.hessian(&z[k]);
            for c in 0..2 {
                let row = 2 * (k - 1) + c;
                if row == pin_row {
                    continue;
                }
                for d in 0..2 {
                    let col = 2 * (k - 1) + d;
                    let diag = if c == d { -2.0 * ih2 } else { 0.0 };
                    a.set(row, col, diag - hs[(c, d)]);
                }
                if k > 1 {
                    a.set(row, row - 2, ih2);
                }
                if k < n - 2 {
                    a.set(row, row + 2, ih2);
                }
            }
        }
        let g = w.gradient(&z[mid]);
        let hs = w.hessian(&z[mid]);
        let ht = hs * t;
        for d in 0..2 {
            a.set(pin_row, 2 * (mid - 1) + d, ht[d] * ih2);
            a.set(pin_row, 2 * mid + d, g[d] * ih2);
            a.set(pin_row, 2 * (mid - 2) + d, -g[d] * ih2);
        }
        let mut delta: Vec<f64> = f.iter().map(|v| -v).collect();
        a.solve(&mut delta)?;
        let merit = |z: &[Point]| eval_res(z, pin_row).iter().map(|v| v * v).sum::<f64>();
        let m0 = f.iter().map(|v| v * v).sum::<f64>();
        let mut step = 1.0;
        let base = z.to_vec();
        loop {
            for k in 1..n - 1 {
                z[k] = base[k] + Point::new(delta[2 * (k - 1)], delta[2 * (k - 1) + 1]) * step;
            }
            if merit(z) < m0 || step < 1e-4 {
                break;
            }
            step *= 0.5;
        }
        last = res;
        log::trace!("heteroclinic newton {it}: residual {res:.3e}");
    }
    Err(Error::HeteroclinicNotConverged { residual: last, iterations: 60 })
}

/// Minimizes the discrete action with clamped ends `c_i`, `c_j`, then
/// polishes with Newton so that the interior residual of `ζ'' = ∇W(ζ)`
/// is below `tol`; the maximum of `W(ζ)` sits at `τ = 0`.
///
/// `nodes` is rounded up to an odd count so that `τ = 0` is a node.
pub fn solve_heteroclinic(
    w: &ThreeWellPotential,
    i: usize,
    j: usize,
    half_width: f64,
    nodes: usize,
    tol: f64,
) -> Result<HeteroclinicProfile> {
    if i == j || i > 2 || j > 2 {
        return Err(Error::InvalidArgument(format!("bad well pair ({i}, {j})")));
    }
    if half_width < 5.0 || nodes < 200 {
        return Err(Error::InvalidArgument(format!("need L >= 5 and nodes >= 200 (got {half_width}, {nodes})")));
    }
    let n = nodes | 1;
    let h = 2.0 * half_width / (n - 1) as f64;
    let (a, b) = (w.wells[i], w.wells[j]);
    let lam = w.decay_rate(i).min(w.decay_rate(j)).max(0.1);
    let mut z: Vec<Point> = (0..n)
        .map(|k| {
            let tau = -half_width + k as f64 * h;
            let s = 0.5 * (1.0 + (0.5 * lam * tau).tanh());
            a + (b - a) * s
        })
        .collect();
    z[0] = a;
    z[n - 1] = b;
    relax(w, &mut z, h, 20_000);
    center_on_max(w, &mut z);

    let mid = n / 2;
    let sep = (a - b).norm();
    if (z[mid] - a).norm() < 1e-3 * sep || (z[mid] - b).norm() < 1e-3 * sep {
        return Err(Error::NoConnection(i, j));
    }
    newton(w, &mut z, h, tol)?;
    let k = 3 - i - j;
    let third = w.wells[k];
    if z.iter().any(|p| (p - third).norm() < 1e-2 * sep) {
        return Err(Error::NoConnection(i, j));
    }
    Ok(HeteroclinicProfile {
        half_width,
        samples: z,
        endpoints: (i, j),
        wells: (a, b),
        decay_rate: (w.decay_rate(i), w.decay_rate(j)),
        jets: OnceLock::new(),
    })
}

/// The three profiles `ζ_{i,i+1}` for `i = 0, 1, 2`.
pub fn solve_all(w: &ThreeWellPotential, half_width: f64, nodes: usize, tol: f64) -> Result<[HeteroclinicProfile; 3]> {
    Ok([
        solve_heteroclinic(w, 0, 1, half_width, nodes, tol)?,
        solve_heteroclinic(w, 1, 2, half_width, nodes, tol)?,
        solve_heteroclinic(w, 2, 0, half_width, nodes, tol)?,
    ])
}
