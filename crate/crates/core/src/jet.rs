//! Second-order forward-mode jets in two variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value, gradient and Hessian `(xx, xy, yy)` of a scalar function of `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [f64; 3],
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Jet2 { v, g: [0.0; 2], h: [0.0; 3] }
    }

    pub fn variables(x: f64, y: f64) -> [Jet2; 2] {
        [
            Jet2 { v: x, g: [1.0, 0.0], h: [0.0; 3] },
            Jet2 { v: y, g: [0.0, 1.0], h: [0.0; 3] },
        ]
    }
}

/// Minimal arithmetic needed to write energies once for `f64` and [`Jet2`].
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn lift(v: f64) -> Self;
}

impl Scalar for f64 {
    fn lift(v: f64) -> Self {
        v
    }
}

impl Scalar for Jet2 {
    fn lift(v: f64) -> Self {
        Jet2::constant(v)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]],
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            v: -self.v,
            g: [-self.g[0], -self.g[1]],
            h: [-self.h[0], -self.h[1], -self.h[2]],
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let (a, b) = (self, o);
        Jet2 {
            v: a.v * b.v,
            g: [a.g[0] * b.v + a.v * b.g[0], a.g[1] * b.v + a.v * b.g[1]],
            h: [
                a.h[0] * b.v + 2.0 * a.g[0] * b.g[0] + a.v * b.h[0],
                a.h[1] * b.v + a.g[0] * b.g[1] + a.g[1] * b.g[0] + a.v * b.h[1],
                a.h[2] * b.v + 2.0 * a.g[1] * b.g[1] + a.v * b.h[2],
            ],
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        // 1/b: first derivative -b'/b², second 2b'b'/b³ - b''/b²
        let b = o;
        let inv = 1.0 / b.v;
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        let recip = Jet2 {
            v: inv,
            g: [-b.g[0] * inv2, -b.g[1] * inv2],
            h: [
                2.0 * b.g[0] * b.g[0] * inv3 - b.h[0] * inv2,
                2.0 * b.g[0] * b.g[1] * inv3 - b.h[1] * inv2,
                2.0 * b.g[1] * b.g[1] * inv3 - b.h[2] * inv2,
            ],
        };
        self * recip
    }
}
