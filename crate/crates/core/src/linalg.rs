//! Planar vector helpers and the small linear solvers used across the crate.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

pub fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

/// z-component of the planar cross product.
pub fn cross(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

pub fn rotate(p: &Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    Point::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

pub fn unit(angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    Point::new(c, s)
}

/// Left normal of a direction (rotation by +π/2).
pub fn left_normal(d: &Point) -> Point {
    Point::new(-d.y, d.x)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Largest eigenvalue of a symmetric 2×2 matrix.
pub fn sym_max_eigenvalue(m: &Mat2) -> f64 {
    let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    mean + r
}

pub fn sym_min_eigenvalue(m: &Mat2) -> f64 {
    let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    mean - r
}

/// Dense storage of a band matrix with `kl` sub- and `ku` super-diagonals,
/// factorized by Gaussian elimination with partial pivoting.
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // row-major, each row holds columns [i - kl, i + ku + kl] (fill-in room)
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        // column offset relative to i - kl
        i * self.width + (j + self.kl - i)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j + self.kl >= i && j <= i + self.ku);
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Solves `A x = b` in place, destroying the matrix.
    pub fn solve(mut self, b: &mut [f64]) -> Result<()> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let upper = ku + kl;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut piv = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::LinearSolve(f64::INFINITY));
            }
            let jmax = (k + upper).min(n - 1);
            if piv != k {
                for j in k..=jmax {
                    let a = self.idx(k, j);
                    let b2 = self.idx(piv, j);
                    self.data.swap(a, b2);
                }
                b.swap(k, piv);
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let f = self.get(i, k) / pivot;
                if f == 0.0 {
                    continue;
                }
                for j in k..=jmax {
                    let v = self.get(k, j);
                    if v != 0.0 {
                        let t = self.idx(i, j);
                        self.data[t] -= f * v;
                    }
                }
                b[i] -= f * b[k];
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + upper).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=jmax {
                s -= self.get(k, j) * b[j];
            }
            b[k] = s / self.get(k, k);
        }
        Ok(())
    }
}

/// Conjugate gradients for a symmetric positive definite operator.
///
/// Returns the number of iterations, or an error when the relative
/// residual stays above `tol` or negative curvature is detected.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    if rr.sqrt() <= tol * bnorm {
        return Ok(0);
    }
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::LinearSolve(rr.sqrt() / bnorm));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        if rr_new.sqrt() <= tol * bnorm {
            return Ok(it);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolve(rr.sqrt() / bnorm))
}

/// Catmull-Rom weights for a sample at fractional offset `t ∈ [0, 1]`
/// between the 2nd and 3rd of four equally spaced nodes.
pub fn cubic_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_solve_matches_dense() {
        let n = 9;
        let mut m = BandMatrix::zeros(n, 2, 1);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 1).min(n - 1) {
                let v = if i == j { 0.1 } else { 1.0 + (i * 3 + j) as f64 * 0.1 };
                m.set(i, j, v);
                dense[i][j] = v;
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense[i][j] * x_true[j]).sum()).collect();
        m.solve(&mut b).unwrap();
        for i in 0..n {
            assert!((b[i] - x_true[i]).abs() < 1e-10, "{i}: {} vs {}", b[i], x_true[i]);
        }
    }

    #[test]
    fn cg_solves_laplacian() {
        let n = 50;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r + 0.01 * x[i];
            }
        };
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        conjugate_gradient(apply, &b, &mut x, 1e-12, 500).unwrap();
        let mut y = vec![0.0; n];
        apply(&x, &mut y);
        for i in 0..n {
            assert!((y[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cubic_weights_partition_and_interpolate() {
        for &t in &[0.0, 0.3, 0.5, 1.0] {
            let w = cubic_weights(t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            // reproduces linear data exactly
            let v: f64 = (0..4).map(|k| w[k] * (k as f64 - 1.0)).sum();
            assert!((v - t).abs() < 1e-15);
        }
    }
}
