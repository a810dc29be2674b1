//! Polylines with nearest-point queries pruned by bounding circles of
//! segment chunks.

use crate::linalg::{cross, left_normal, Point};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Foot {
    pub dist: f64,
    pub point: Point,
    /// Segment index and parameter in `[0, 1]` along it.
    pub seg: usize,
    pub t: f64,
}

/// Consecutive segments `start..end` enclosed by a circle.
#[derive(Clone, Copy, Debug)]
struct Chunk {
    center: Point,
    radius: f64,
    start: usize,
    end: usize,
}

#[derive(Clone, Debug)]
pub struct Polyline {
    pub pts: Vec<Point>,
    pub closed: bool,
    chunks: Vec<Chunk>,
}

fn seg_dist(p: &Point, a: &Point, b: &Point) -> (f64, f64) {
    let d = b - a;
    let l2 = d.norm_squared();
    let t = if l2 > 0.0 { ((p - a).dot(&d) / l2).clamp(0.0, 1.0) } else { 0.0 };
    ((p - (a + d * t)).norm(), t)
}

impl Polyline {
    pub fn new(pts: Vec<Point>, closed: bool) -> Self {
        assert!(pts.len() >= 2, "polyline needs two points");
        let nseg = if closed { pts.len() } else { pts.len() - 1 };
        let size = ((nseg as f64).sqrt().ceil() as usize).max(8);
        let mut chunks = Vec::new();
        let mut start = 0;
        while start < nseg {
            let end = (start + size).min(nseg);
            let mut center = Point::zeros();
            for k in start..=end {
                center += pts[k % pts.len()];
            }
            center /= (end - start + 1) as f64;
            let radius = (start..=end).map(|k| (pts[k % pts.len()] - center).norm()).fold(0.0, f64::max);
            chunks.push(Chunk { center, radius, start, end });
            start = end;
        }
        Polyline { pts, closed, chunks }
    }

    pub fn num_segments(&self) -> usize {
        if self.closed {
            self.pts.len()
        } else {
            self.pts.len() - 1
        }
    }

    pub fn segment(&self, k: usize) -> (Point, Point) {
        (self.pts[k], self.pts[(k + 1) % self.pts.len()])
    }

    pub fn length(&self) -> f64 {
        (0..self.num_segments()).map(|k| {
            let (a, b) = self.segment(k);
            (b - a).norm()
        }).sum()
    }

    /// Nearest point by exhaustive scan.
    pub fn nearest_brute(&self, p: &Point) -> Foot {
        let mut best = Foot { dist: f64::INFINITY, point: self.pts[0], seg: 0, t: 0.0 };
        for k in 0..self.num_segments() {
            let (a, b) = self.segment(k);
            let (d, t) = seg_dist(p, &a, &b);
            if d < best.dist {
                best = Foot { dist: d, point: a + (b - a) * t, seg: k, t };
            }
        }
        best
    }

    /// Nearest point, visiting chunks by increasing lower bound; identical
    /// result to [`Polyline::nearest_brute`].
    pub fn nearest(&self, p: &Point) -> Foot {
        let mut order: Vec<(f64, usize)> = self
            .chunks
            .iter()
            .enumerate()
            .map(|(q, c)| (((p - c.center).norm() - c.radius).max(0.0), q))
            .collect();
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = Foot { dist: f64::INFINITY, point: self.pts[0], seg: 0, t: 0.0 };
        for (lb, q) in order {
            if lb > best.dist {
                break;
            }
            let c = &self.chunks[q];
            for k in c.start..c.end {
                let (a, bb) = self.segment(k);
                let (d, t) = seg_dist(p, &a, &bb);
                if d < best.dist || (d == best.dist && k < best.seg) {
                    best = Foot { dist: d, point: a + (bb - a) * t, seg: k, t };
                }
            }
        }
        best
    }

    /// Unit tangent of segment `k`.
    pub fn tangent(&self, k: usize) -> Point {
        let (a, b) = self.segment(k);
        (b - a).normalize()
    }

    /// `+1` if `p` lies to the left of the curve at its foot point, using
    /// the angle-weighted pseudo-normal at vertices; `0` on the curve.
    pub fn side(&self, p: &Point, foot: &Foot) -> f64 {
        let v = p - foot.point;
        if v.norm() == 0.0 {
            return 0.0;
        }
        let n = self.pts.len();
        let nseg = self.num_segments();
        let at_start = foot.t <= 0.0;
        let at_end = foot.t >= 1.0;
        let normal = if !(at_start || at_end) {
            left_normal(&self.tangent(foot.seg))
        } else {
            let vertex = if at_start { foot.seg } else { (foot.seg + 1) % n };
            let prev = if vertex > 0 { Some(vertex - 1) } else if self.closed { Some(nseg - 1) } else { None };
            let next = if vertex < nseg { Some(vertex) } else { None };
            match (prev, next) {
                (Some(a), Some(b)) => {
                    let s = left_normal(&self.tangent(a)) + left_normal(&self.tangent(b));
                    if s.norm() > 1e-14 { s } else { left_normal(&self.tangent(b)) }
                }
                (Some(a), None) => {
                    // beyond the last node: side of the extended last segment
                    return cross(&self.tangent(a), &v).signum();
                }
                (None, Some(b)) => return cross(&self.tangent(b), &v).signum(),
                (None, None) => unreachable!(),
            }
        };
        let s = normal.dot(&v);
        if s == 0.0 {
            cross(&self.tangent(foot.seg), &v).signum()
        } else {
            s.signum()
        }
    }

    /// Signed distance with the local left-positive convention.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        let f = self.nearest(p);
        f.dist * self.side(p, &f)
    }

    /// Discrete curvature at interior vertex `k` with the convention
    /// `k = −γ_ss · N_left` (a counter-clockwise circle has `k = −1/R`).
    pub fn vertex_curvature(&self, k: usize) -> Option<f64> {
        let n = self.pts.len();
        let (a, b, c) = if self.closed {
            (self.pts[(k + n - 1) % n], self.pts[k], self.pts[(k + 1) % n])
        } else {
            if k == 0 || k + 1 >= n {
                return None;
            }
            (self.pts[k - 1], self.pts[k], self.pts[k + 1])
        };
        let den = (b - a).norm() * (c - b).norm() * (c - a).norm();
        if den == 0.0 {
            return None;
        }
        Some(-2.0 * cross(&(b - a), &(c - b)) / den)
    }

    /// Curvature at a foot point, interpolated linearly between vertices;
    /// `None` when the foot lies on an end segment of an open curve.
    pub fn curvature_at(&self, foot: &Foot) -> Option<f64> {
        let k0 = self.vertex_curvature(foot.seg)?;
        let k1 = self.vertex_curvature((foot.seg + 1) % self.pts.len())?;
        Some(k0 * (1.0 - foot.t) + k1 * foot.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pt;

    #[test]
    fn indexed_matches_brute_force() {
        let pts: Vec<Point> = (0..300)
            .map(|k| {
                let s = k as f64 / 299.0;
                pt(s * 2.0 - 1.0, (5.0 * s).sin() * 0.4)
            })
            .collect();
        let poly = Polyline::new(pts, false);
        let mut seed = 12345u64;
        for _ in 0..2000 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = ((seed >> 11) as f64 / (1u64 << 53) as f64) * 6.0 - 3.0;
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = ((seed >> 11) as f64 / (1u64 << 53) as f64) * 6.0 - 3.0;
            let p = pt(x, y);
            let a = poly.nearest(&p);
            let b = poly.nearest_brute(&p);
            assert!((a.dist - b.dist).abs() <= 1e-15, "{p:?}: {} vs {}", a.dist, b.dist);
        }
    }

    #[test]
    fn circle_curvature_sign() {
        let n = 512;
        let r = 0.7;
        let pts: Vec<Point> = (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                pt(r * a.cos(), r * a.sin())
            })
            .collect();
        let c = Polyline::new(pts, true);
        let k = c.vertex_curvature(5).unwrap();
        assert!((k + 1.0 / r).abs() < 1e-3 / r);
        assert!(c.signed_distance(&pt(0.1, 0.0)) > 0.0);
        assert!(c.signed_distance(&pt(2.0, 0.0)) < 0.0);
    }
}
