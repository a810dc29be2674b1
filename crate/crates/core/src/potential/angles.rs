use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opening angles `alpha[i]` of the sector holding well `i` and the edge
/// directions `theta[i]` of curve `i`, with `theta[0] = 0` and
/// `theta[i] - theta[i-1] = alpha[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleTriple {
    pub alpha: [f64; 3],
    pub theta: [f64; 3],
}

impl AngleTriple {
    pub fn from_alpha(alpha: [f64; 3]) -> Self {
        let theta = [0.0, alpha[1], alpha[1] + alpha[2]];
        AngleTriple { alpha, theta }
    }

    pub fn balanced() -> Self {
        Self::from_alpha([TAU / 3.0; 3])
    }

    pub fn min_alpha(&self) -> f64 {
        self.alpha.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Residual of the sine rule for the weights `g[i]` opposite `alpha[i]`.
    pub fn sine_rule_residual(&self, g: [f64; 3]) -> f64 {
        let r: Vec<f64> = (0..3).map(|i| self.alpha[i].sin() / g[i]).collect();
        let sum = self.alpha.iter().sum::<f64>() - TAU;
        (r[0] - r[1]).abs().max((r[1] - r[2]).abs()).max(sum.abs())
    }
}

/// Solves `sin α_i / g_i` = const, `Σ α_i = 2π`, where `g[i]` is the weight
/// between the two wells other than `i`.
pub fn junction_angles(g: [f64; 3]) -> Result<AngleTriple> {
    if g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::AngleConditionUnsolvable(g[0], g[1], g[2]));
    }
    let gmax = g.iter().cloned().fold(0.0, f64::max);
    let w = [g[0] / gmax, g[1] / gmax, g[2] / gmax];
    let mut best: Option<(f64, [f64; 3])> = None;
    for mask in 0..8u32 {
        let alphas = |r: f64| -> [f64; 3] {
            let mut a = [0.0; 3];
            for i in 0..3 {
                let s = (r * w[i]).clamp(-1.0, 1.0).asin();
                a[i] = if mask & (1 << i) != 0 { PI - s } else { s };
            }
            a
        };
        let f = |r: f64| alphas(r).iter().sum::<f64>() - TAU;
        let samples = 400;
        let mut prev_r = 0.0;
        let mut prev_f = f(0.0);
        for k in 1..=samples {
            let r = k as f64 / samples as f64;
            let fr = f(r);
            let root = if fr == 0.0 {
                Some(r)
            } else if prev_f.signum() != fr.signum() && prev_f != 0.0 {
                let (mut lo, mut hi, mut flo) = (prev_r, r, prev_f);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm == 0.0 || hi - lo < 1e-17 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                Some(0.5 * (lo + hi))
            } else {
                None
            };
            if let Some(r) = root {
                let a = alphas(r);
                if r > 0.0 && a.iter().all(|&x| x > 1e-12 && x <= PI) {
                    let res = f(r).abs();
                    if best.map_or(true, |(b, _)| res < b) {
                        best = Some((res, a));
                    }
                }
            }
            prev_r = r;
            prev_f = fr;
        }
    }
    match best {
        Some((res, a)) if res < 1e-9 => Ok(AngleTriple::from_alpha(a)),
        _ => Err(Error::AngleConditionUnsolvable(g[0], g[1], g[2])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_weights_give_equal_angles() {
        let a = junction_angles([1.0, 1.0, 1.0]).unwrap();
        for x in a.alpha {
            assert!((x - TAU / 3.0).abs() < 1e-10);
        }
        assert_eq!(a.theta[0], 0.0);
    }

    #[test]
    fn degenerate_weights_rejected() {
        assert!(junction_angles([1.0, 1.0, 2.5]).is_err());
        assert!(junction_angles([0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn obtuse_triangle_uses_acute_branch() {
        // triangle with sides 1, 1, 1.9 has an obtuse angle opposite 1.9
        let a = junction_angles([1.0, 1.0, 1.9]).unwrap();
        assert!(a.alpha[2] < PI / 2.0);
        assert!(a.sine_rule_residual([1.0, 1.0, 1.9]) < 1e-10);
    }
}
