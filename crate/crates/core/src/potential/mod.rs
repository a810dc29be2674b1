//! Three-well potentials, geodesic weights between wells and the junction
//! angle condition.

mod angles;
mod gamma;

pub use angles::{junction_angles, AngleTriple};
pub use gamma::{gamma_distance, gamma_distance_from, weighted_length, GeodesicPath};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet2, Scalar};
use crate::linalg::{pt, sym_max_eigenvalue, sym_min_eigenvalue, Mat2, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialKind {
    /// `W = (1/9) Π |u - c_i|²` with wells on the unit circle.
    Standard,
    /// `W = 1 / Σ_i |u - c_i|^{-2}` for arbitrary distinct wells.
    Harmonic,
}

/// Constants witnessing `K1 |u|^p <= W(u) <= K2 |u|^p` for `|u| >= m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub k1: f64,
    pub k2: f64,
    pub m: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeWellPotential {
    pub wells: [Point; 3],
    pub kind: PotentialKind,
    pub growth: Growth,
    pub id: String,
}

pub const STANDARD_ID: &str = "symmetric-standard";

pub fn make_standard_symmetric() -> ThreeWellPotential {
    let s = 3f64.sqrt() / 2.0;
    ThreeWellPotential {
        wells: [pt(1.0, 0.0), pt(-0.5, s), pt(-0.5, -s)],
        kind: PotentialKind::Standard,
        growth: Growth {
            k1: 0.5f64.powi(6) / 9.0,
            k2: 1.5f64.powi(6) / 9.0,
            m: 2.0,
            p: 6.0,
        },
        id: STANDARD_ID.to_string(),
    }
}

impl ThreeWellPotential {
    /// Potential with user-supplied wells. Near each well `W = |u - c_i|² + O(|u - c_i|⁴)`.
    pub fn with_wells(wells: [Point; 3]) -> Result<Self> {
        for i in 0..3 {
            if !wells[i].x.is_finite() || !wells[i].y.is_finite() {
                return Err(Error::InvalidArgument("non-finite well".into()));
            }
            for j in i + 1..3 {
                if (wells[i] - wells[j]).norm() < 1e-8 {
                    return Err(Error::InvalidArgument(format!("wells {i} and {j} coincide")));
                }
            }
        }
        let rho = wells.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-3);
        Ok(ThreeWellPotential {
            wells,
            kind: PotentialKind::Harmonic,
            growth: Growth { k1: 4.0 / 27.0, k2: 16.0 / 27.0, m: 3.0 * rho, p: 2.0 },
            id: format!(
                "wells({:.6},{:.6};{:.6},{:.6};{:.6},{:.6})",
                wells[0].x, wells[0].y, wells[1].x, wells[1].y, wells[2].x, wells[2].y
            ),
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            STANDARD_ID => Ok(make_standard_symmetric()),
            other => Err(Error::Config(format!("unknown potential '{other}'"))),
        }
    }

    pub fn well(&self, i: usize) -> Point {
        self.wells[i % 3]
    }

    fn generic<S: Scalar>(&self, x: S, y: S) -> S {
        let f = |c: &Point| {
            let dx = x - S::lift(c.x);
            let dy = y - S::lift(c.y);
            dx * dx + dy * dy
        };
        let [f0, f1, f2] = [f(&self.wells[0]), f(&self.wells[1]), f(&self.wells[2])];
        match self.kind {
            PotentialKind::Standard => f0 * f1 * f2 / S::lift(9.0),
            PotentialKind::Harmonic => f0 * f1 * f2 / (f1 * f2 + f0 * f2 + f0 * f1),
        }
    }

    pub fn eval(&self, u: &Point) -> f64 {
        self.generic(u.x, u.y)
    }

    pub fn gradient(&self, u: &Point) -> Point {
        match self.kind {
            PotentialKind::Standard => {
                let d = [u - self.wells[0], u - self.wells[1], u - self.wells[2]];
                let f = [d[0].norm_squared(), d[1].norm_squared(), d[2].norm_squared()];
                (d[0] * (f[1] * f[2]) + d[1] * (f[0] * f[2]) + d[2] * (f[0] * f[1])) * (2.0 / 9.0)
            }
            PotentialKind::Harmonic => {
                let j = self.jet(u);
                pt(j.g[0], j.g[1])
            }
        }
    }

    pub fn hessian(&self, u: &Point) -> Mat2 {
        let j = self.jet(u);
        Mat2::new(j.h[0], j.h[1], j.h[1], j.h[2])
    }

    fn jet(&self, u: &Point) -> Jet2 {
        let [x, y] = Jet2::variables(u.x, u.y);
        self.generic(x, y)
    }

    /// Index and distance of the closest well.
    pub fn nearest_well(&self, u: &Point) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.wells.iter().enumerate() {
            let d = (u - c).norm();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    pub fn min_well_separation(&self) -> f64 {
        let w = &self.wells;
        (w[0] - w[1]).norm().min((w[1] - w[2]).norm()).min((w[0] - w[2]).norm())
    }

    pub fn max_well_norm(&self) -> f64 {
        self.wells.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest Hessian eigenvalue sampled over the disk of the given radius.
    pub fn max_hessian_eigenvalue(&self, radius: f64) -> f64 {
        let n = 48;
        let mut best = f64::NEG_INFINITY;
        for a in 0..=n {
            for b in 0..=n {
                let u = pt(
                    -radius + 2.0 * radius * a as f64 / n as f64,
                    -radius + 2.0 * radius * b as f64 / n as f64,
                );
                if u.norm() <= radius * (1.0 + 1e-12) {
                    best = best.max(sym_max_eigenvalue(&self.hessian(&u)));
                }
            }
        }
        for c in &self.wells {
            best = best.max(sym_max_eigenvalue(&self.hessian(c)));
        }
        best
    }

    /// Radius beyond which `u · ∇W(u) > 0` on every sampled ring.
    pub fn coercivity_radius(&self) -> f64 {
        self.last_bad_ring(|u| u.dot(&self.gradient(u)) <= 0.0)
    }

    /// Radius beyond which Hess W is positive definite on every sampled ring.
    pub fn convexity_radius(&self) -> f64 {
        self.last_bad_ring(|u| sym_min_eigenvalue(&self.hessian(u)) <= 0.0)
    }

    fn last_bad_ring<F: Fn(&Point) -> bool>(&self, bad: F) -> f64 {
        let r_max = 4.0 * self.growth.m.max(1.0);
        let rings = 800;
        let dirs = 256;
        let mut last = 0.0;
        for k in 0..=rings {
            let r = r_max * k as f64 / rings as f64;
            let hit = (0..dirs).any(|q| {
                let a = std::f64::consts::TAU * q as f64 / dirs as f64;
                bad(&(pt(a.cos(), a.sin()) * r))
            });
            if hit {
                last = r + r_max / rings as f64;
            }
        }
        last
    }

    /// For each radius returns `sup_θ |W(c_i + r e_θ)/r² − 1| / r` over all wells.
    pub fn fan_test(&self, radii: &[f64], directions: usize) -> Vec<f64> {
        radii
            .iter()
            .map(|&r| {
                let mut worst: f64 = 0.0;
                for c in &self.wells {
                    for q in 0..directions {
                        let a = std::f64::consts::TAU * q as f64 / directions as f64;
                        let w = self.eval(&(c + pt(a.cos(), a.sin()) * r));
                        worst = worst.max((w / (r * r) - 1.0).abs() / r);
                    }
                }
                worst
            })
            .collect()
    }

    /// Decay exponent of the linearization at well `i`: `sqrt(λ_min(Hess W(c_i)))`.
    pub fn decay_rate(&self, i: usize) -> f64 {
        sym_min_eigenvalue(&self.hessian(&self.wells[i])).max(0.0).sqrt()
    }
}
