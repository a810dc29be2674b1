use std::f64::consts::TAU;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trijunction::ansatz::{trajectory_radii, Ansatz, AnsatzParams};
use trijunction::grid::{Domain, Grid};
use trijunction::heteroclinic::solve_all;
use trijunction::par::Exec;
use trijunction::potential::{gamma_distance, junction_angles, make_standard_symmetric};
use trijunction::residual::{audit, heat_smooth};
use trijunction::solver::{solve, AnsatzData, AnsatzField, Scheme, SolveConfig};
use trijunction::stationary::compute_stationary_triple;
use trijunction::triod::{Trajectory, Triod};
use trijunction::Point;

fn kernels(c: &mut Criterion) {
    let w = make_standard_symmetric();
    let profiles = solve_all(&w, 10.0, 1000, 1e-9).unwrap();
    let g = gamma_distance(&w, 0, 1, 64, 1e-10).unwrap();
    let angles = junction_angles([g, g, g]).unwrap();
    let core = compute_stationary_triple(&w, &profiles, &angles, 12.0, 256, 1e-3).unwrap();
    let dom = Domain::unit_disk();
    let triod = Triod::straight(Point::zeros(), [0.0, TAU / 3.0, 2.0 * TAU / 3.0], &dom, 257).unwrap();
    let traj = Trajectory { times: vec![0.0], triods: vec![triod] };
    let radii = trajectory_radii(&traj, &dom).unwrap();
    let ans = Ansatz::new(&w, &profiles, &core, AnsatzParams::new(0.08, 0.55, radii).unwrap());
    let grid = Grid::cover(&dom, 128);
    let mask = grid.mask(&dom, 2);

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let name = format!("{exec:?}");
        group.bench_with_input(BenchmarkId::new("ansatz_sample", &name), &exec, |b, &e| {
            b.iter(|| ans.frame(&traj.triods[0]).sample(&grid, Some(&mask), e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("residual_audit", &name), &exec, |b, &e| {
            b.iter(|| audit(&ans, &traj, &grid, &mask, 0.02, 1, e).unwrap())
        });
        let values: Vec<f64> = (0..grid.len()).map(|k| (k % 7) as f64).collect();
        group.bench_with_input(BenchmarkId::new("heat_smooth", &name), &exec, |b, &e| {
            b.iter(|| heat_smooth(&values, &grid, 1e-3, e))
        });
        group.bench_with_input(BenchmarkId::new("semi_implicit_solve", &name), &exec, |b, &e| {
            let phi = AnsatzData { ansatz: ans, traj: &traj, field: AnsatzField::Boundary };
            let psi = AnsatzData { ansatz: ans, traj: &traj, field: AnsatzField::Glued };
            let mut cfg = SolveConfig::new(dom, 128, 0.08, 0.002, Scheme::SemiImplicit);
            cfg.snapshots = vec![0.002];
            b.iter(|| solve(&cfg, &w, &phi, &psi, e).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
