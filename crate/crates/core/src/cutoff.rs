//! Smooth cutoffs and the angular partition of unity around the junction.

use crate::linalg::wrap_angle;

/// Quintic smoothstep on `[0, 1]`, `C²` at both ends.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

/// Radial cutoff: 1 for `s <= 1/2`, 0 for `s >= 1`, quintic in between.
/// Its derivative is bounded by 15/4.
pub fn eta(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - smoothstep(2.0 * s - 1.0)
    }
}

/// Angular partition of unity: an edge window of half-width `delta_int`
/// around each edge direction and a sector weight covering the rest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularPartition {
    pub theta: [f64; 3],
    pub delta_int: f64,
}

impl AngularPartition {
    pub fn new(theta: [f64; 3], delta_int: f64) -> Self {
        AngularPartition { theta, delta_int }
    }

    /// Weight of the window around edge `i` (supported in `|θ − θ_i| < δ_int`).
    pub fn edge(&self, i: usize, theta: f64) -> f64 {
        eta(wrap_angle(theta - self.theta[i]).abs() / self.delta_int)
    }

    /// Index `s` of the sector `(θ_{s-1}, θ_s)` containing `theta`; that sector holds well `s`.
    pub fn sector(&self, theta: f64) -> usize {
        for s in 0..3 {
            let lo = self.theta[(s + 2) % 3];
            let width = (self.theta[s] - lo).rem_euclid(std::f64::consts::TAU);
            let off = (theta - lo).rem_euclid(std::f64::consts::TAU);
            if off < width {
                return s;
            }
        }
        0
    }

    /// All weights at `theta`: edge windows `[e_0, e_1, e_2]` and the
    /// sector weight together with its sector index.
    pub fn weights(&self, theta: f64) -> ([f64; 3], f64, usize) {
        let e = [self.edge(0, theta), self.edge(1, theta), self.edge(2, theta)];
        let s = self.sector(theta);
        let rest = 1.0 - e[s] - e[(s + 2) % 3];
        (e, rest, s)
    }

    /// Weight with index `j`: `j = 2i` is edge `i`, `j = 2i + 1` the
    /// sector between edges `i` and `i + 1`.
    pub fn xi_int(&self, j: usize, theta: f64) -> f64 {
        let (e, rest, s) = self.weights(theta);
        if j % 2 == 0 {
            e[j / 2]
        } else if (j / 2 + 1) % 3 == s {
            rest
        } else {
            0.0
        }
    }
}
