use std::f64::consts::TAU;
use std::sync::OnceLock;

use trijunction::ansatz::{trajectory_radii, Ansatz, AnsatzParams};
use trijunction::grid::{Domain, Grid, VectorField2D};
use trijunction::heteroclinic::{solve_all, solve_heteroclinic, HeteroclinicProfile};
use trijunction::io::{read_snapshots, write_snapshots};
use trijunction::linalg::pt;
use trijunction::par::Exec;
use trijunction::potential::{gamma_distance, junction_angles, make_standard_symmetric, ThreeWellPotential};
use trijunction::solver::{
    duhamel_iterate, interface_extract, solve, sup_distance, AnsatzData, AnsatzField, FieldData, Scheme,
    SolveConfig,
};
use trijunction::stationary::{compute_stationary_triple, StationaryTriple};
use trijunction::triod::{Trajectory, Triod};
use trijunction::{Error, Point};

struct Fixture {
    w: ThreeWellPotential,
    profiles: [HeteroclinicProfile; 3],
    core: StationaryTriple,
    stripe: HeteroclinicProfile,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let w = make_standard_symmetric();
        let profiles = solve_all(&w, 10.0, 1000, 1e-9).unwrap();
        let g = gamma_distance(&w, 0, 1, 64, 1e-10).unwrap();
        let angles = junction_angles([g, g, g]).unwrap();
        let core = compute_stationary_triple(&w, &profiles, &angles, 12.0, 256, 1e-3).unwrap();
        let stripe = solve_heteroclinic(&w, 0, 1, 10.0, 2000, 1e-10).unwrap();
        Fixture { w, profiles, core, stripe }
    })
}

fn static_triod(domain: &Domain) -> Trajectory {
    let t = Triod::straight(Point::zeros(), [0.0, TAU / 3.0, 2.0 * TAU / 3.0], domain, 257).unwrap();
    Trajectory { times: vec![0.0], triods: vec![t] }
}

#[test]
fn well_is_an_exact_equilibrium() {
    let w = make_standard_symmetric();
    for scheme in [Scheme::SemiImplicit, Scheme::Explicit, Scheme::ConvexSplit] {
        for c in w.wells {
            let mut cfg = SolveConfig::new(Domain::unit_disk(), 48, 0.1, 0.01, scheme);
            cfg.snapshots = vec![0.0, 0.005, 0.01];
            let data = move |_: &Point, _: f64| c;
            let sol = solve(&cfg, &w, &data, &data, Exec::default()).unwrap();
            assert!(sol.steps > 1);
            let worst = sol
                .snapshots
                .iter()
                .flat_map(|s| s.values.iter())
                .map(|u| (u - c).norm())
                .fold(0.0, f64::max);
            assert!(worst <= 1e-12 * sol.steps as f64, "{scheme:?}: {worst}");
        }
    }
}

#[test]
fn standing_stripe_stays_put() {
    // ζ(x/ε) solves the equation exactly on the line; its midline should not move
    let f = fixture();
    let eps = 0.05;
    let p = &f.stripe;
    let data = |x: &Point, _: f64| p.eval_smooth(x.x / eps);
    let mut cfg = SolveConfig::new(Domain::unit_square(), 128, eps, 0.1, Scheme::SemiImplicit);
    cfg.snapshots = vec![0.025, 0.05, 0.075, 0.1];
    let sol = solve(&cfg, &f.w, &data, &data, Exec::default()).unwrap();
    let h = cfg.grid().h;
    for s in &sol.snapshots {
        let iface = interface_extract(s, &f.w, 0.1, Some(&sol.unknown)).unwrap();
        assert!(!iface.crossings.is_empty());
        let off = iface.crossings.iter().map(|q| q.x.abs()).fold(0.0, f64::max);
        assert!(off <= h, "t = {}: midline at {off}", s.time);
    }
    for d in &sol.diagnostics {
        assert!(d.within_bound, "{d:?}");
    }
}

#[test]
fn energy_decreases_with_static_data() {
    let f = fixture();
    let eps = 0.08;
    let p = &f.stripe;
    let bump = |x: &Point| (-(x - pt(0.1, 0.05)).norm_squared() / 0.02).exp();
    let bdry = |x: &Point, _: f64| p.eval_smooth(x.x / eps);
    let init = |x: &Point, _: f64| p.eval_smooth(x.x / eps) + pt(0.4, -0.3) * bump(x);
    let mut cfg = SolveConfig::new(Domain::unit_disk(), 64, eps, 0.02, Scheme::SemiImplicit);
    cfg.snapshots = (0..=10).map(|k| 0.002 * k as f64).collect();
    let sol = solve(&cfg, &f.w, &bdry, &init, Exec::default()).unwrap();
    for pair in sol.diagnostics.windows(2) {
        assert!(pair[1].energy <= pair[0].energy * (1.0 + 1e-12), "{} -> {}", pair[0].energy, pair[1].energy);
    }
    assert!(sol.diagnostics.last().unwrap().energy < sol.diagnostics[0].energy);
    assert!(sol.diagnostics.iter().all(|d| d.within_bound));
}

#[test]
fn explicit_and_semi_implicit_agree_to_first_order() {
    let w = make_standard_symmetric();
    let eps = 0.25;
    let init = |x: &Point, _: f64| w.wells[0] * (0.5 + 0.5 * (3.0 * x.x).cos()) + w.wells[1] * (0.5 - 0.5 * (3.0 * x.x).cos()) + pt(0.0, 0.2 * (2.0 * x.y).sin());
    let run = |scheme: Scheme, dt: f64| {
        let mut cfg = SolveConfig::new(Domain::unit_square(), 16, eps, 0.01, scheme);
        cfg.dt = Some(dt);
        solve(&cfg, &w, &init, &init, Exec::default()).unwrap().snapshots
    };
    let dt = 0.01 / 16.0;
    let d1 = sup_distance(&run(Scheme::Explicit, dt), &run(Scheme::SemiImplicit, dt), None).unwrap();
    let d2 = sup_distance(&run(Scheme::Explicit, dt / 2.0), &run(Scheme::SemiImplicit, dt / 2.0), None).unwrap();
    assert!(d1 > 0.0 && d1 < 0.05, "{d1}");
    let ratio = d1 / d2;
    assert!(ratio > 1.8 && ratio < 2.2, "{d1} / {d2}");
}

#[test]
fn invalid_configurations() {
    let w = make_standard_symmetric();
    let c = w.wells[0];
    let data = move |_: &Point, _: f64| c;
    let mut cfg = SolveConfig::new(Domain::unit_disk(), 32, 0.1, 0.01, Scheme::Explicit);
    cfg.dt = Some(1.0);
    assert!(matches!(solve(&cfg, &w, &data, &data, Exec::default()), Err(Error::InvalidArgument(_))));
    let cfg = SolveConfig::new(Domain::unit_disk(), 32, 0.1, 0.01, Scheme::SemiImplicit);
    let other = move |_: &Point, _: f64| c * 0.5;
    assert!(matches!(solve(&cfg, &w, &data, &other, Exec::default()), Err(Error::InvalidArgument(_))));
    let mut bad = cfg.clone();
    bad.snapshots = vec![0.5];
    assert!(matches!(solve(&bad, &w, &data, &data, Exec::default()), Err(Error::InvalidArgument(_))));
    // boundary data running away in time is caught by the blow-up guard
    let runaway = move |_: &Point, t: f64| c * (1.0 + 1e5 * t);
    assert!(matches!(solve(&cfg, &w, &runaway, &runaway, Exec::default()), Err(Error::Instability { .. })));
}

#[test]
fn sup_distance_examples() {
    let w = make_standard_symmetric();
    let g = Grid::centered(1.0, 8);
    let a = vec![VectorField2D::constant(g, w.wells[0], 0.0), VectorField2D::constant(g, w.wells[0], 1.0)];
    let b = vec![VectorField2D::constant(g, w.wells[1], 0.0), VectorField2D::constant(g, w.wells[1], 1.0)];
    assert_eq!(sup_distance(&a, &a, None).unwrap(), 0.0);
    assert_eq!(sup_distance(&a, &b, None).unwrap(), (w.wells[0] - w.wells[1]).norm());
    assert!(matches!(sup_distance(&a, &b[..1], None), Err(Error::ShapeMismatch(_))));
    let c = vec![VectorField2D::constant(Grid::centered(1.0, 4), w.wells[1], 0.0), b[1].clone()];
    assert!(matches!(sup_distance(&a, &c, None), Err(Error::ShapeMismatch(_))));
}

#[test]
fn interface_of_simple_fields() {
    let f = fixture();
    let g = Grid::centered(1.0, 64);
    let flat = VectorField2D::constant(g, f.w.wells[2], 0.0);
    let iface = interface_extract(&flat, &f.w, 0.1, None).unwrap();
    assert!(iface.is_empty());
    assert!(iface.labels.iter().all(|&l| l == Some(2)));
    assert!(matches!(interface_extract(&flat, &f.w, 2.0, None), Err(Error::InvalidArgument(_))));
    assert!(matches!(interface_extract(&flat, &f.w, 0.0, None), Err(Error::InvalidArgument(_))));

    let eps = 0.05;
    let vals = (0..g.len()).map(|k| f.stripe.eval_smooth(g.point_at(k).x / eps)).collect();
    let stripe = VectorField2D::new(g, vals, 0.0).unwrap();
    let iface = interface_extract(&stripe, &f.w, 0.1, None).unwrap();
    assert_eq!(iface.crossings.len(), g.n);
    assert!(iface.crossings.iter().all(|q| q.x.abs() <= g.h));
    // the band is where |ζ − c| > threshold, a width of order ε ln(1/ε)
    let width = iface.band.iter().map(|q| q.x.abs()).fold(0.0, f64::max);
    assert!(width > eps && width < 3.0 * eps * (1.0 / eps).ln(), "{width}");
}

#[test]
fn interface_of_the_glued_triod_follows_the_arms() {
    let f = fixture();
    let dom = Domain::unit_disk();
    let traj = static_triod(&dom);
    let radii = trajectory_radii(&traj, &dom).unwrap();
    let eps = 0.04;
    let ans = Ansatz::new(&f.w, &f.profiles, &f.core, AnsatzParams::new(eps, 0.55, radii).unwrap());
    let g = Grid::cover(&dom, 256);
    let field = ans.frame(&traj.triods[0]).sample(&g, None, Exec::default()).unwrap();
    let mask: Vec<bool> = (0..g.len()).map(|k| dom.contains(&g.point_at(k))).collect();
    let iface = interface_extract(&field, &f.w, 0.1, Some(&mask)).unwrap();
    let core = 3.0 * eps * (1.0 / eps).ln();
    let polys = [traj.triods[0].polyline(0), traj.triods[0].polyline(1), traj.triods[0].polyline(2)];
    let far: Vec<Point> = iface.crossings.iter().copied().filter(|q| q.norm() > core).collect();
    assert!(far.len() > 250, "{}", far.len());
    let worst = far
        .iter()
        .map(|q| polys.iter().map(|c| c.nearest(q).dist).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    assert!(worst <= 2.0 * g.h, "{worst} vs {}", 2.0 * g.h);
}

#[test]
fn duhamel_zero_forcing_is_one_sweep() {
    let w = make_standard_symmetric();
    let c = w.wells[1];
    let data = move |_: &Point, _: f64| c;
    let mut cfg = SolveConfig::new(Domain::unit_square(), 16, 0.1, 0.01, Scheme::DuhamelIteration);
    cfg.snapshots = vec![0.005, 0.01];
    let run = duhamel_iterate(&cfg, &w, &data, &data, None, 5, Exec::default()).unwrap();
    assert!(run.history.iter().all(|h| h == &vec![0.0]));
    for s in &run.solution.snapshots {
        assert!(s.values.iter().all(|&u| u == c));
    }
    let disk = SolveConfig { domain: Domain::unit_disk(), ..cfg.clone() };
    assert!(matches!(duhamel_iterate(&disk, &w, &data, &data, None, 5, Exec::default()), Err(Error::InvalidArgument(_))));
}

fn square_instance(dt: f64, scheme: Scheme) -> SolveConfig {
    let mut cfg = SolveConfig::new(Domain::unit_square(), 64, 0.1, 0.01, scheme);
    cfg.dt = Some(dt);
    cfg.snapshots = vec![0.0025, 0.005, 0.0075, 0.01];
    cfg
}

#[test]
fn duhamel_agrees_with_time_stepping_under_refinement() {
    let f = fixture();
    let dom = Domain::unit_square();
    let traj = static_triod(&dom);
    let radii = trajectory_radii(&traj, &dom).unwrap();
    let ans = Ansatz::new(&f.w, &f.profiles, &f.core, AnsatzParams::new(0.1, 0.55, radii).unwrap());
    let phi = AnsatzData { ansatz: ans, traj: &traj, field: AnsatzField::Boundary };
    let lift = AnsatzData { ansatz: ans, traj: &traj, field: AnsatzField::Lift };
    let psi = AnsatzData { ansatz: ans, traj: &traj, field: AnsatzField::Glued };
    let mut diffs = Vec::new();
    for k in 0..3 {
        let dt = 0.01 / (16 << k) as f64;
        let a = solve(&square_instance(dt, Scheme::SemiImplicit), &f.w, &phi, &psi, Exec::default()).unwrap();
        let guess: &dyn FieldData = &psi;
        let b = duhamel_iterate(&square_instance(dt, Scheme::DuhamelIteration), &f.w, &lift, &psi, Some(guess), 40, Exec::default())
            .unwrap();
        // sweeps contract geometrically on every window
        for h in &b.history {
            for p in h.windows(2) {
                assert!(p[1] <= 0.6 * p[0] || p[1] <= 1e-10, "{h:?}");
            }
        }
        diffs.push(sup_distance(&a.snapshots, &b.solution.snapshots, None).unwrap());
    }
    assert!(diffs[0] < 0.1, "{diffs:?}");
    for p in diffs.windows(2) {
        assert!(p[1] <= 0.6 * p[0], "{diffs:?}");
    }
}

#[test]
fn snapshot_files_round_trip() {
    let w = make_standard_symmetric();
    let g = Grid::centered(1.0, 10);
    let fields: Vec<VectorField2D> = (0..3)
        .map(|s| {
            let vals = (0..g.len()).map(|k| g.point_at(k) * (s as f64 + 0.5) + w.wells[s]).collect();
            VectorField2D::new(g, vals, 0.1 * s as f64).unwrap()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("run");
    write_snapshots(&stem, &fields, 0.05, &w.id, &Domain::unit_disk()).unwrap();
    let (header, back) = read_snapshots(&stem).unwrap();
    assert_eq!(back, fields);
    assert_eq!(header.times, vec![0.0, 0.1, 0.2]);
    assert_eq!(header.nx, 11);
    assert_eq!(std::fs::metadata(dir.path().join("run.bin")).unwrap().len(), 3 * 121 * 16);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    for key in ["schema_version", "nx", "ny", "x0", "y0", "h", "times", "eps", "potential"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}
