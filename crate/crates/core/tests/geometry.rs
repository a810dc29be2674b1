use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trijunction::curve::Polyline;
use trijunction::geometry::{
    admissibility_radii, distance_evolution_residual, distance_residual_with, TriodGeometry,
};
use trijunction::grid::Domain;
use trijunction::linalg::{left_normal, pt, unit};
use trijunction::triod::{evolve, AngleMode, FlowOptions, Triod};
use trijunction::Point;

fn bent(nodes: usize, amp: f64) -> Triod {
    let mut t = Triod::straight(Point::zeros(), [0.3, 0.3 + TAU / 3.0, 0.3 + 2.0 * TAU / 3.0], &Domain::unit_disk(), nodes)
        .unwrap();
    let n = left_normal(&t.tangent(0));
    for k in 1..nodes - 1 {
        let s = k as f64 / (nodes - 1) as f64;
        t.curves[0][k] += n * (amp * (PI * s).sin() * s);
    }
    t
}

fn brute(poly: &[Point], x: &Point) -> f64 {
    poly.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let t = ((x - w[0]).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            (x - (w[0] + d * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn distances_match_exhaustive_scan() {
    let t = bent(200, 0.2);
    let g = TriodGeometry::new(&t);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let x = pt(rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2));
        let d = g.distances(&x);
        for i in 0..3 {
            let b = brute(&t.curves[i], &x);
            assert!((d.signed[i].abs() - b).abs() <= 1e-12);
        }
        for (i, j) in [(0, 1), (1, 2), (2, 0), (0, 2)] {
            let dij = g.pair_distance(i, j, &x);
            assert_eq!(dij, -g.pair_distance(j, i, &x));
            assert!((dij.abs() - d.signed[i].abs().min(d.signed[j].abs())).abs() <= 1e-15);
        }
        // sign table
        let s = d.sector;
        assert!(d.signed[(s + 2) % 3] >= 0.0 && d.signed[s] <= 0.0);
        assert!(g.pair_distance((s + 2) % 3, s, &x) >= 0.0);
    }
}

#[test]
fn vertical_segment_example() {
    let c = Polyline::new(vec![pt(0.0, -1.0), pt(0.0, 1.0)], false);
    let d = c.signed_distance(&pt(0.3, 0.0));
    // the curve points up, so +x lies on its right
    assert!((d + 0.3).abs() < 1e-15);
    assert_eq!(c.signed_distance(&pt(0.0, 0.5)), 0.0);
}

#[test]
fn hook_limits_graph_radius() {
    // arm 0 leaves the junction, turns around and comes back to radius 0.4
    let mut pts = Vec::new();
    for k in 0..=60 {
        pts.push(pt(0.7 * k as f64 / 60.0, 0.0));
    }
    for k in 1..=40 {
        let a = PI * k as f64 / 40.0;
        pts.push(pt(0.7 + 0.1 * a.sin(), 0.1 - 0.1 * a.cos()));
    }
    for k in 1..=30 {
        pts.push(pt(0.7 - 0.3 * k as f64 / 30.0, 0.2));
    }
    let return_dist = pts.last().unwrap().norm();
    for k in 1..=40 {
        let a = PI / 2.0 * k as f64 / 40.0;
        pts.push(pt(0.4 - 0.0 * a, 0.2 + 0.75 * a.sin()));
    }
    let other = |ang: f64| (0..=60).map(|k| unit(ang) * (0.95 * k as f64 / 60.0)).collect::<Vec<_>>();
    let t = Triod::from_curves([pts, other(TAU / 3.0), other(2.0 * TAU / 3.0)], AngleMode::Balanced).unwrap();
    let r = admissibility_radii(&t, &Domain::Disk { radius: 2.0 }).unwrap();
    assert!(r.delta_tilde < return_dist, "{} vs {return_dist}", r.delta_tilde);
}

#[test]
fn tube_radius_respects_separation() {
    let t = bent(128, 0.25);
    let r = admissibility_radii(&t, &Domain::unit_disk()).unwrap();
    let o = t.junction();
    let mut sep = f64::INFINITY;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let pj = t.polyline(j);
                for p in t.curves[i].iter().filter(|p| (*p - o).norm() > r.delta_tilde) {
                    sep = sep.min(pj.nearest(p).dist);
                }
            }
        }
    }
    assert!(r.delta <= 0.5 * sep + 1e-12);
}

fn circle(radius: f64, n: usize) -> Polyline {
    Polyline::new((0..n).map(|k| unit(TAU * k as f64 / n as f64) * radius).collect(), true)
}

#[test]
fn shrinking_circle_identity() {
    let r0: f64 = 0.8;
    let radius = |t: f64| (r0 * r0 - 2.0 * t).sqrt();
    let (h, dt) = (1e-2, 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for _ in 0..1000 {
        let t = rng.gen_range(0.01..0.1);
        let r = radius(t) + rng.gen_range(-0.2..0.2);
        let x = unit(rng.gen_range(0.0..TAU)) * r;
        let res = distance_residual_with(|s| Ok(circle(radius(s), 8192)), &x, t, h, dt).unwrap();
        worst = worst.max(res.residual.abs());
        worst_grad = worst_grad.max(res.gradient_defect.abs());
    }
    assert!(worst <= 5.0 * (h + dt), "{worst}");
    assert!(worst_grad <= 1e-3, "{worst_grad}");
}

#[test]
fn straight_static_curve_has_zero_residual() {
    let t = Triod::straight(Point::zeros(), [0.0, TAU / 3.0, 2.0 * TAU / 3.0], &Domain::unit_disk(), 65).unwrap();
    let traj = evolve(&t, 0.01, &FlowOptions { snapshots: 4, ..FlowOptions::default() }).unwrap();
    let x = unit(0.0) * 0.5 + pt(0.0, 0.05);
    let r = distance_evolution_residual(&traj, 0, &x, 0.005, 1e-2, 1e-3).unwrap();
    assert!(r.residual.abs() < 1e-9 && r.gradient_defect.abs() < 1e-12, "{r:?}");
    // foot at the junction is outside the tube of validity
    assert!(distance_evolution_residual(&traj, 0, &pt(-0.3, 0.0), 0.005, 1e-2, 1e-3).is_err());
}

#[test]
fn evolving_arm_residual_refines() {
    let run = |nodes: usize, h: f64, dt: f64| {
        let t = bent(nodes, 0.3);
        let traj = evolve(&t, 0.02, &FlowOptions { snapshots: 40, ..FlowOptions::default() }).unwrap();
        let n = left_normal(&traj.at(0.01).unwrap().tangent(0));
        let base = unit(0.3) * 0.5;
        [-0.04, -0.02, 0.02, 0.04]
            .iter()
            .map(|&s| distance_evolution_residual(&traj, 0, &(base + n * s), 0.01, h, dt).unwrap().residual.abs())
            .fold(0.0, f64::max)
    };
    let coarse = run(64, 2e-2, 1e-3);
    let fine = run(128, 1e-2, 5e-4);
    println!("arm residual {coarse:.3e} -> {fine:.3e}");
    assert!(fine < 0.75 * coarse, "{coarse} -> {fine}");
}
