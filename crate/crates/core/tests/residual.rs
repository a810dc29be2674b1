use std::f64::consts::TAU;
use std::sync::OnceLock;

use proptest::prelude::*;
use trijunction::ansatz::{trajectory_radii, Ansatz, AnsatzParams, Region};
use trijunction::grid::{Domain, Grid, ScalarField2D, VectorField2D};
use trijunction::heteroclinic::{solve_all, solve_heteroclinic, HeteroclinicProfile};
use trijunction::linalg::pt;
use trijunction::par::Exec;
use trijunction::potential::{gamma_distance, junction_angles, make_standard_symmetric, ThreeWellPotential};
use trijunction::residual::{
    ansatz_residual, audit, check_regional_bounds, duhamel_sup, heat_smooth, residual_field, write_region_csv,
    ResidualReport,
};
use trijunction::stationary::{compute_stationary_triple, StationaryTriple};
use trijunction::triod::{Trajectory, Triod};
use trijunction::{Error, Point};

struct Fixture {
    w: ThreeWellPotential,
    profiles: [HeteroclinicProfile; 3],
    core: StationaryTriple,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let w = make_standard_symmetric();
        let profiles = solve_all(&w, 10.0, 1000, 1e-9).unwrap();
        let g = gamma_distance(&w, 0, 1, 64, 1e-10).unwrap();
        let angles = junction_angles([g, g, g]).unwrap();
        let core = compute_stationary_triple(&w, &profiles, &angles, 12.0, 256, 1e-3).unwrap();
        Fixture { w, profiles, core }
    })
}

fn static_triod() -> Trajectory {
    let t = Triod::straight(Point::zeros(), [0.0, TAU / 3.0, 2.0 * TAU / 3.0], &Domain::unit_disk(), 257).unwrap();
    Trajectory { times: vec![0.0], triods: vec![t] }
}

fn frames(grid: Grid, dt: f64, f: impl Fn(&Point, f64) -> Point) -> Vec<VectorField2D> {
    (0..3)
        .map(|q| {
            let t = q as f64 * dt;
            let values = (0..grid.len()).map(|k| f(&grid.point_at(k), t)).collect();
            VectorField2D::new(grid, values, t).unwrap()
        })
        .collect()
}

#[test]
fn constant_well_has_zero_residual() {
    let w = make_standard_symmetric();
    let grid = Grid::centered(1.0, 128);
    let dt = grid.h * grid.h / 8.0;
    for c in w.wells {
        let r = residual_field(&frames(grid, dt, |_, _| c), &w, 0.1, None, Exec::default()).unwrap();
        for f in &r {
            assert!(f.values.iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn time_derivative_of_spatially_constant_data() {
    // v(t) = c + t·e has Δv = 0, so the residual is |e + ∇W(v)/ε²| exactly
    let w = make_standard_symmetric();
    let grid = Grid::centered(1.0, 128);
    let dt = grid.h * grid.h / 8.0;
    let c = w.wells[1] + pt(0.01, -0.02);
    let e = pt(0.3, 0.7);
    let eps = 0.1;
    let fs = frames(grid, dt, |_, t| c + e * t);
    let r = residual_field(&fs, &w, eps, None, Exec::default()).unwrap();
    for (f, s) in r.iter().zip(&fs) {
        let want = (e + w.gradient(&(c + e * s.time)) / (eps * eps)).norm();
        let k = grid.index(64, 64);
        assert!((f.values[k] - want).abs() <= 1e-9 * want, "{} vs {want}", f.values[k]);
    }
}

#[test]
fn straight_heteroclinic_layer_converges_at_fourth_order() {
    // v = ζ(x/ε) solves ∇W(v)/ε² = Δv, so only the stencil error remains
    let w = make_standard_symmetric();
    let p = solve_heteroclinic(&w, 0, 1, 10.0, 4000, 1e-10).unwrap();
    let eps = 0.1;
    let sup = |cells: usize| {
        let grid = Grid::centered(1.0, cells);
        let dt = grid.h * grid.h / 8.0;
        let r = residual_field(&frames(grid, dt, |x, _| p.eval_smooth(x.x / eps)), &w, eps, None, Exec::default())
            .unwrap();
        // interior rows where the fourth-order stencil applies
        let f = &r[1];
        (0..grid.len())
            .filter(|&k| {
                let (i, j) = grid.coords(k);
                i >= 2 && j >= 2 && i + 2 < grid.n && j + 2 < grid.n
            })
            .map(|k| f.values[k])
            .fold(0.0, f64::max)
    };
    let coarse = sup(80);
    let fine = sup(160);
    assert!(coarse > 0.0);
    assert!(fine <= coarse / 10.0, "{coarse} -> {fine}");
    assert!(fine <= 0.05, "{fine}");
}

#[test]
fn under_resolution_is_rejected() {
    let w = make_standard_symmetric();
    let grid = Grid::centered(1.0, 32);
    let good = frames(grid, grid.h * grid.h / 8.0, |_, _| w.wells[0]);
    assert!(matches!(residual_field(&good, &w, 0.1, None, Exec::default()), Err(Error::UnderResolved(_))));
    let slow = frames(grid, grid.h * grid.h, |_, _| w.wells[0]);
    assert!(matches!(residual_field(&slow, &w, 1.0, None, Exec::default()), Err(Error::UnderResolved(_))));
    assert!(residual_field(&good, &w, 1.0, None, Exec::default()).is_ok());
}

#[test]
fn heat_smoothing_spreads_variance_by_two_tau() {
    let grid = Grid::centered(1.0, 200);
    let c = grid.n / 2;
    let mut delta = vec![0.0; grid.len()];
    delta[grid.index(c, c)] = 1.0;
    let tau = 0.004;
    let out = heat_smooth(&delta, &grid, tau, Exec::default());
    let mass: f64 = out.iter().sum();
    let var_x: f64 = (0..grid.len()).map(|k| out[k] * grid.point_at(k).x.powi(2)).sum::<f64>() / mass;
    // the kernel is truncated at six standard deviations
    assert!(mass <= 1.0 && mass >= 1.0 - 1e-8, "{mass}");
    // cell averaging adds h²/12
    let want = 2.0 * tau + grid.h * grid.h / 12.0;
    assert!((var_x - want).abs() <= 1e-3 * want, "{var_x} vs {want}");
    assert_eq!(heat_smooth(&delta, &grid, grid.h * grid.h / 100.0, Exec::default()), delta);
}

#[test]
fn duhamel_of_zero_and_of_one() {
    let grid = Grid::centered(1.0, 64);
    let mask = vec![true; grid.len()];
    let zero = ScalarField2D::zeros(grid, 0.01);
    assert_eq!(duhamel_sup(&[zero], &mask, 0.0, 0.02, Exec::default()).unwrap(), 0.0);
    let t_end = 0.02;
    let ones: Vec<ScalarField2D> = (0..4)
        .map(|q| ScalarField2D { grid, values: vec![1.0; grid.len()], time: (q as f64 + 0.5) * t_end / 4.0 })
        .collect();
    let d = duhamel_sup(&ones, &mask, 0.0, t_end, Exec::default()).unwrap();
    assert!(d >= 0.9 * t_end && d <= t_end * (1.0 + 1e-12), "{d}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn duhamel_respects_kernel_mass(vals in prop::collection::vec(0.0f64..5.0, 4), seed in 0u64..1000, span in 0.001f64..0.05) {
        let grid = Grid::centered(1.0, 24);
        let mask: Vec<bool> = (0..grid.len()).map(|k| (k as u64 * 2654435761 + seed) % 7 != 0).collect();
        let slices: Vec<ScalarField2D> = vals
            .iter()
            .enumerate()
            .map(|(q, &v)| ScalarField2D {
                grid,
                values: (0..grid.len()).map(|k| v * (((k as u64 + seed) % 5) as f64 / 4.0)).collect(),
                time: (q as f64 + 0.5) * span / 4.0,
            })
            .collect();
        let sup = slices.iter().map(|s| s.sup()).fold(0.0, f64::max);
        let d = duhamel_sup(&slices, &mask, 0.0, span, Exec::default()).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(d <= span * sup * (1.0 + 1e-12) + 1e-15, "{} > {}", d, span * sup);
    }
}

fn report(eps: f64) -> ResidualReport {
    let f = fixture();
    let traj = static_triod();
    let dom = Domain::unit_disk();
    let radii = trajectory_radii(&traj, &dom).unwrap();
    let ans = Ansatz::new(&f.w, &f.profiles, &f.core, AnsatzParams::new(eps, 0.55, radii).unwrap());
    let grid = Grid::cover(&dom, 128);
    let mask = grid.mask(&dom, 2);
    audit(&ans, &traj, &grid, &mask, 0.02, 2, Exec::default()).unwrap()
}

#[test]
fn static_triod_regions() {
    let f = fixture();
    let traj = static_triod();
    let dom = Domain::unit_disk();
    let radii = trajectory_radii(&traj, &dom).unwrap();
    let eps = 0.08;
    let ans = Ansatz::new(&f.w, &f.profiles, &f.core, AnsatzParams::new(eps, 0.55, radii).unwrap());
    let grid = Grid::cover(&dom, 128);
    let mask = grid.mask(&dom, 2);
    let (res, labels) = ansatz_residual(&ans, &traj, &grid, &mask, 0.0, grid.h * grid.h / 8.0, Exec::default()).unwrap();
    let fr = ans.frame(&traj.triods[0]);
    let mut seen = std::collections::HashSet::new();
    for k in 0..grid.len() {
        match labels[k] {
            None => assert!(!mask[k]),
            Some(Region::Away) => {
                assert_eq!(res.values[k], 0.0);
                let (r, well) = fr.region_detail(&grid.point_at(k));
                assert_eq!(r, Region::Away);
                assert_eq!(fr.v(&grid.point_at(k)).unwrap(), f.w.wells[well.unwrap()]);
                seen.insert(Region::Away);
            }
            Some(r) => {
                seen.insert(r);
            }
        }
    }
    assert_eq!(seen.len(), 6, "{seen:?}");
    // a mid-sector point between the balls is away, a point on an arm near the boundary is near the interface
    let k = grid.index(grid.n / 2 - 30, grid.n / 2);
    assert_eq!(labels[k], Some(Region::Away));
    let q = grid.index(grid.n / 2 + 40, grid.n / 2);
    assert_eq!(labels[q], Some(Region::NearInterface));
}

#[test]
fn audit_exports_and_fits() {
    let reports = [report(0.12), report(0.08)];
    for r in &reports {
        assert_eq!(r.sup(Region::Away), 0.0);
        assert!(r.count(Region::Away) > 0);
        assert!(r.duhamel_sup <= r.t_end * r.total_sup * (1.0 + 1e-12));
        assert_eq!(r.slices.len(), 2);
    }
    let check = check_regional_bounds(&reports, false);
    assert_eq!(check.fits.len(), 6);
    let away = check.fits.iter().find(|f| f.region == Region::Away).unwrap();
    assert!(away.pass);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("regions.csv");
    write_region_csv(&reports, &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,time,region,count,sup"));
    assert_eq!(lines.count(), 2 * 2 * 6);
    assert!(text.contains("angular-transition"));
    let js = dir.path().join("report.json");
    reports[0].write_json(&js).unwrap();
    let back: ResidualReport = serde_json::from_str(&std::fs::read_to_string(&js).unwrap()).unwrap();
    assert_eq!(back, reports[0]);
}
