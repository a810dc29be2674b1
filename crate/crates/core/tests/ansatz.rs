use std::f64::consts::TAU;
use std::sync::OnceLock;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trijunction::ansatz::{Ansatz, AnsatzParams, Frame, Region};
use trijunction::geometry::{admissibility_radii, Radii};
use trijunction::grid::{Domain, Grid};
use trijunction::heteroclinic::{solve_all, HeteroclinicProfile};
use trijunction::linalg::{pt, rotate, unit};
use trijunction::par::Exec;
use trijunction::potential::{gamma_distance, junction_angles, make_standard_symmetric, ThreeWellPotential};
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

fn straight(rot: f64) -> Triod {
    Triod::straight(Point::zeros(), [rot, rot + TAU / 3.0, rot + 2.0 * TAU / 3.0], &Domain::unit_disk(), 257).unwrap()
}

fn frame_for(triod: &Triod, eps: f64) -> (Frame<'static>, Radii) {
    let f = fixture();
    let radii = admissibility_radii(triod, &Domain::unit_disk()).unwrap();
    let params = AnsatzParams::new(eps, 0.75, radii).unwrap();
    (Ansatz::new(&f.w, &f.profiles, &f.core, params).frame(triod), radii)
}

fn mid(s: usize, rot: f64) -> Point {
    // sector s lies between curve s − 1 and curve s
    unit(rot + (s as f64 - 0.5) * TAU / 3.0)
}

#[test]
fn parameter_validation() {
    let r = Radii { delta_tilde: 0.9, delta_int: 0.9, delta: 0.3 };
    assert!(AnsatzParams::new(0.05, 0.5, r).is_err());
    assert!(AnsatzParams::new(0.05, 1.0, r).is_err());
    assert!(AnsatzParams::new(0.3, 0.75, r).is_err());
    assert!(AnsatzParams::new(0.05, 0.75, r).is_ok());
}

#[test]
fn exterior_weights() {
    let t = straight(0.0);
    let (fr, radii) = frame_for(&t, 0.05);
    // on a curve
    let x = unit(TAU / 3.0) * 0.97;
    let w = fr.xi_ext(&x).unwrap();
    assert_eq!(w.tube[1], 1.0);
    assert_eq!(fr.xi_ext_pair(1, 1, &x).unwrap(), 1.0);
    // mid-sector, far from every curve
    let x = mid(2, 0.0) * 0.97;
    assert_eq!(fr.xi_ext_pair(1, 2, &x).unwrap(), 1.0);
    assert_eq!(fr.xi_ext_pair(0, 1, &x).unwrap(), 0.0);
    // partition and gradient bound on a fine grid outside the junction ball
    let h = 2e-3;
    let mut worst: f64 = 0.0;
    let n = 900;
    for a in 0..n {
        for b in 0..n {
            let x = pt(-0.9 + 1.8 * a as f64 / n as f64, -0.9 + 1.8 * b as f64 / n as f64);
            if x.norm() < radii.delta_tilde - 0.05 || x.norm() > 1.0 {
                continue;
            }
            let w = fr.xi_ext(&x).unwrap();
            let s: f64 = w.tube.iter().sum::<f64>() + w.sector_weight;
            assert!((s - 1.0).abs() <= 1e-14);
            let wx = fr.xi_ext(&(x + pt(h, 0.0))).unwrap();
            let wy = fr.xi_ext(&(x + pt(0.0, h))).unwrap();
            for i in 0..3 {
                let g = ((wx.tube[i] - w.tube[i]).powi(2) + (wy.tube[i] - w.tube[i]).powi(2)).sqrt() / h;
                worst = worst.max(g * radii.delta);
            }
            if wx.sector == w.sector && wy.sector == w.sector {
                let g = ((wx.sector_weight - w.sector_weight).powi(2) + (wy.sector_weight - w.sector_weight).powi(2))
                    .sqrt()
                    / h;
                worst = worst.max(g * radii.delta);
            }
        }
    }
    assert!(worst <= 8.0 && worst > 1.0, "gradient constant {worst}");
}

#[test]
fn overlapping_tubes_are_reported() {
    let f = fixture();
    let t = straight(0.0);
    let radii = Radii { delta_tilde: 0.9, delta_int: 0.9, delta: 0.5 };
    let params = AnsatzParams::new(0.05, 0.75, radii).unwrap();
    let fr = Ansatz::new(&f.w, &f.profiles, &f.core, params).frame(&t);
    assert!(matches!(fr.xi_ext(&pt(0.05, 0.05)), Err(Error::Uncovered(..))));
}

#[test]
fn boundary_datum() {
    let f = fixture();
    let t = straight(0.0);
    let eps = 0.05;
    let (fr, radii) = frame_for(&t, eps);
    let x = unit(TAU / 3.0) * 0.97;
    assert!((fr.phi(&x).unwrap() - f.profiles[1].eval_smooth(0.0)).norm() <= 1e-12);
    for s in 0..3 {
        assert_eq!(fr.phi(&(mid(s, 0.0) * 0.97)).unwrap(), f.w.wells[s]);
    }
    // overlap of tube and sector plateau: both branches are near the well
    let lam = f.profiles[0].decay_rate.0.min(f.profiles[0].decay_rate.1);
    // prefactor of the measured tail |ζ(τ) − c₁| ≈ A e^{−λτ}
    let a = (0..=60)
        .map(|k| {
            let tau = 2.0 + 0.1 * k as f64;
            (f.profiles[0].eval_smooth(tau) - f.w.wells[1]).norm() * (lam * tau).exp()
        })
        .fold(0.0, f64::max);
    let bound = a * (-lam * radii.delta / (2.0 * eps)).exp();
    let e = unit(0.0);
    let n = pt(0.0, 1.0);
    for k in 0..20 {
        let d = radii.delta * (0.5 + 0.5 * k as f64 / 20.0);
        let x = e * 0.97 + n * d;
        let s = fr.geom.sector(&x);
        assert!((fr.phi(&x).unwrap() - f.w.wells[s]).norm() <= bound, "d = {d}");
    }
}

#[test]
fn cut_boundary_datum() {
    let t = straight(0.0);
    let eps = 0.05;
    let (fr, radii) = frame_for(&t, eps);
    let dt = radii.delta_tilde;
    for k in 0..12 {
        let x = unit(0.3 + k as f64) * (0.5 * dt);
        assert_eq!(fr.phi_eta(&x).unwrap(), Point::zeros());
        let x = unit(0.3 + k as f64) * (dt - eps - 1e-9);
        assert_eq!(fr.phi_eta(&x).unwrap(), Point::zeros());
        let x = unit(0.3 + k as f64) * dt;
        assert_eq!(fr.phi_eta(&x).unwrap(), fr.phi(&x).unwrap());
    }
    // the transition band is (δ̃ − ε, δ̃): solving the cutoff argument for ½ and 1
    let p = fr.ansatz.params;
    assert_eq!(p.eta2(dt - eps), 1.0);
    assert_eq!(p.eta2(dt), 0.0);
    assert!(p.eta2(dt - 0.5 * eps) > 0.0 && p.eta2(dt - 0.5 * eps) < 1.0);
}

#[test]
fn interior_blend() {
    let f = fixture();
    let t = straight(0.0);
    let (fr, radii) = frame_for(&t, 0.05);
    assert!(matches!(fr.tilde_phi(&Point::zeros()), Err(Error::AngleUndefined)));
    let x = unit(TAU / 3.0) * 0.4;
    assert!((fr.tilde_phi(&x).unwrap() - f.profiles[1].eval_smooth(0.0)).norm() <= 1e-12);
    for s in 0..3 {
        assert_eq!(fr.tilde_phi(&(mid(s, 0.0) * 0.4)).unwrap(), f.w.wells[s]);
    }
    // agreement with the boundary datum on an annulus outside the junction ball
    let lam = f.profiles[0].decay_rate.0.min(f.profiles[0].decay_rate.1);
    let mut prev = f64::INFINITY;
    for eps in [0.08, 0.04] {
        let (fr, _) = frame_for(&t, eps);
        let mut worst: f64 = 0.0;
        for a in 0..720 {
            for b in 0..5 {
                let r = radii.delta_tilde + radii.delta * b as f64 / 4.0;
                let x = unit(TAU * a as f64 / 720.0) * r;
                worst = worst.max((fr.tilde_phi(&x).unwrap() - fr.phi(&x).unwrap()).norm());
            }
        }
        assert!(worst <= 2.0 * (-lam * radii.delta / (2.0 * eps)).exp(), "eps {eps}: {worst}");
        assert!(worst < prev);
        prev = worst;
    }
}

#[test]
fn glued_solution_special_points() {
    let f = fixture();
    let t = straight(0.0);
    let eps = 0.05;
    let (fr, radii) = frame_for(&t, eps);
    assert_eq!(fr.v(&Point::zeros()).unwrap(), f.core.value_at_center());
    let rin = fr.ansatz.params.inner_radius();
    for s in 0..3 {
        for r in [rin * 1.01, 0.5 * (rin + radii.delta_tilde - 2.0 * eps), radii.delta_tilde - 2.0 * eps] {
            assert_eq!(fr.v(&(mid(s, 0.0) * r)).unwrap(), f.w.wells[s]);
        }
    }
    for k in 0..100 {
        let x = unit(TAU * k as f64 / 100.0);
        assert_eq!(fr.v(&x).unwrap(), fr.phi(&x).unwrap());
    }
}

#[test]
fn no_overshoot_and_no_seams() {
    let f = fixture();
    let t = straight(0.0);
    let (fr, _) = frame_for(&t, 0.05);
    let bound = f
        .w
        .max_well_norm()
        .max(f.core.sup_norm())
        .max(f.profiles.iter().map(|p| p.max_norm()).fold(0.0, f64::max));
    let n = 1024;
    let grid = Grid::centered(1.0, n);
    let field = fr.sample(&grid, None, Exec::default()).unwrap();
    let mut jump: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let v = field.at(i, j);
            assert!(v.norm() <= bound + 1e-12);
            // outside the disk the sector rule beyond the endpoints is arbitrary
            if grid.point(i, j).norm() < 1.0 - 2.0 * grid.h {
                jump = jump.max((field.at(i + 1, j) - v).norm()).max((field.at(i, j + 1) - v).norm());
            }
        }
    }
    // Lipschitz budget: profiles |ζ'|/ε = sqrt(2W)/ε, doubled for the
    // angular and tube weights, plus the inner blend |∇η₁|·|u_* − φ̃| ≤ 3.75·2/ε^ρ
    let slope = f
        .profiles
        .iter()
        .map(|p| p.samples.iter().map(|z| (2.0 * f.w.eval(z)).sqrt()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let lip = 2.0 * slope / 0.05 + 3.75 * 2.0 / fr.ansatz.params.inner_radius();
    assert!(jump <= lip * grid.h, "jump {jump} vs {}", lip * grid.h);
}

#[test]
fn gauge_covariance() {
    let phi = 0.7;
    let (a, _) = frame_for(&straight(0.0), 0.05);
    let (b, _) = frame_for(&straight(phi), 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let x = unit(rng.gen_range(0.0..TAU)) * rng.gen_range(0.0..1.0);
        let va = a.v(&x).unwrap();
        let vb = b.v(&rotate(&x, phi)).unwrap();
        assert!((va - vb).norm() <= 1e-9, "{x:?}");
    }
}

#[test]
fn initial_datum_reproduces_sectors() {
    let f = fixture();
    let t = straight(0.2);
    let traj = Trajectory { times: vec![0.0], triods: vec![t.clone()] };
    let eps = 0.04;
    let radii = admissibility_radii(&t, &Domain::unit_disk()).unwrap();
    let params = AnsatzParams::new(eps, 0.75, radii).unwrap();
    let ans = Ansatz::new(&f.w, &f.profiles, &f.core, params);
    let grid = Grid::centered(1.0, 128);
    let psi = ans.psi(&traj, &grid, None, Exec::default()).unwrap();
    let fr = ans.frame(&t);
    assert_eq!(psi.time, 0.0);
    let tube = 3.0 * eps * (1.0 / eps).ln();
    let mut checked = 0;
    for k in 0..grid.len() {
        let x = grid.point_at(k);
        if x.norm() > 1.0 {
            continue;
        }
        let d = fr.geom.distances(&x);
        if d.signed.iter().any(|v| v.abs() < tube) {
            continue;
        }
        assert_eq!(f.w.nearest_well(&psi.values[k]).0, d.sector);
        checked += 1;
    }
    assert!(checked > 3000, "{checked}");
    // boundary trace
    for k in 0..60 {
        let x = unit(TAU * k as f64 / 60.0);
        assert_eq!(fr.v(&x).unwrap(), fr.phi(&x).unwrap());
    }
}

#[test]
fn region_labels() {
    let t = straight(0.0);
    let (fr, radii) = frame_for(&t, 0.05);
    assert_eq!(fr.region(&Point::zeros()), Region::Core);
    assert_eq!(fr.region(&(unit(0.0) * (0.5 * radii.delta_tilde))), Region::NearInterface);
    assert_eq!(fr.region(&(mid(1, 0.0) * (0.5 * radii.delta_tilde))), Region::Away);
    assert_eq!(fr.region(&(mid(1, 0.0) * (radii.delta_tilde - 0.02))), Region::OuterBlend);
    let rin = fr.ansatz.params.inner_radius();
    assert_eq!(fr.region(&(mid(1, 0.0) * (0.75 * rin))), Region::InnerBlend);
}

proptest! {
    #[test]
    fn weights_form_partitions(r in 0.0f64..1.0, a in 0.0f64..TAU) {
        let t = straight(0.0);
        let (fr, radii) = frame_for(&t, 0.05);
        let x = unit(a) * r;
        if r >= radii.delta_tilde - 0.05 {
            let w = fr.xi_ext(&x).unwrap();
            prop_assert!((w.tube.iter().sum::<f64>() + w.sector_weight - 1.0).abs() <= 1e-14);
        }
        let v = fr.v(&x).unwrap();
        prop_assert!(v.norm() <= 1.0 + 1e-9);
    }
}
