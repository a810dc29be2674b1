//! The glued approximate solution `v_ε` built around a moving triod, its
//! boundary data `φ_ε`, `φ^η_ε` and the initial datum `ψ_ε`.

use serde::{Deserialize, Serialize};

use crate::cutoff::{eta, AngularPartition};
use crate::error::{Error, Result};
use crate::geometry::{admissibility_radii, PointDistances, Radii, TriodGeometry};
use crate::grid::{Domain, Grid, VectorField2D};
use crate::heteroclinic::HeteroclinicProfile;
use crate::linalg::Point;
use crate::par::Exec;
use crate::potential::ThreeWellPotential;
use crate::stationary::StationaryTriple;
use crate::triod::{Trajectory, Triod};

pub const DEFAULT_RHO: f64 = 0.55;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub eps: f64,
    pub rho: f64,
    pub radii: Radii,
}

impl AnsatzParams {
    pub fn new(eps: f64, rho: f64, radii: Radii) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps = {eps}")));
        }
        if !(rho > 0.5 && rho < 1.0) {
            return Err(Error::InvalidArgument(format!("rho = {rho} outside (1/2, 1)")));
        }
        if eps >= radii.delta_tilde / 4.0 {
            return Err(Error::InvalidArgument(format!(
                "eps = {eps} not below delta_tilde / 4 = {}",
                radii.delta_tilde / 4.0
            )));
        }
        Ok(AnsatzParams { eps, rho, radii })
    }

    /// Radius `ε^ρ` of the inner blend.
    pub fn inner_radius(&self) -> f64 {
        self.eps.powf(self.rho)
    }

    /// `η₂(r/(2ε) + 1 − δ̃/(2ε))`: 1 for `r ≤ δ̃ − ε`, 0 for `r ≥ δ̃`.
    pub fn eta2(&self, r: f64) -> f64 {
        eta(r / (2.0 * self.eps) + 1.0 - self.radii.delta_tilde / (2.0 * self.eps))
    }

    /// `η₁((x − O)/ε^ρ)` as a function of `r = |x − O|`.
    pub fn eta1(&self, r: f64) -> f64 {
        eta(r / self.inner_radius())
    }
}

/// Radii admissible at every snapshot of a trajectory.
pub fn trajectory_radii(traj: &Trajectory, domain: &Domain) -> Result<Radii> {
    let mut out: Option<Radii> = None;
    for t in &traj.triods {
        let r = admissibility_radii(t, domain)?;
        out = Some(match out {
            None => r,
            Some(o) => Radii {
                delta_tilde: o.delta_tilde.min(r.delta_tilde),
                delta_int: o.delta_int.min(r.delta_int),
                delta: o.delta.min(r.delta),
            },
        });
    }
    out.ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))
}

/// Tube weights `ξ^ext_{ii}` and the sector weight `ξ^ext` of the point's sector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtWeights {
    pub tube: [f64; 3],
    pub sector_weight: f64,
    pub sector: usize,
}

/// Which formula is active at a point; the labels partition space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Core,
    InnerBlend,
    NearInterface,
    Away,
    /// Angular windows inside the junction ball and tube edges outside it.
    #[serde(rename = "angular-transition")]
    Transition,
    OuterBlend,
}

impl Region {
    pub const ALL: [Region; 6] = [
        Region::Core,
        Region::InnerBlend,
        Region::NearInterface,
        Region::Away,
        Region::Transition,
        Region::OuterBlend,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Region::Core => "core",
            Region::InnerBlend => "inner-blend",
            Region::NearInterface => "near-interface",
            Region::Away => "away",
            Region::Transition => "angular-transition",
            Region::OuterBlend => "outer-blend",
        }
    }
}

/// Immutable ingredients of the construction.
#[derive(Clone, Copy, Debug)]
pub struct Ansatz<'a> {
    pub potential: &'a ThreeWellPotential,
    pub profiles: &'a [HeteroclinicProfile; 3],
    pub core: &'a StationaryTriple,
    pub params: AnsatzParams,
}

impl<'a> Ansatz<'a> {
    pub fn new(
        potential: &'a ThreeWellPotential,
        profiles: &'a [HeteroclinicProfile; 3],
        core: &'a StationaryTriple,
        params: AnsatzParams,
    ) -> Self {
        Ansatz { potential, profiles, core, params }
    }

    pub fn frame(&self, triod: &Triod) -> Frame<'a> {
        let geom = TriodGeometry::new(triod);
        let theta0 = triod.tangent_angle(0);
        let partition = AngularPartition::new(self.core.angles.theta, self.params.radii.delta_int);
        Frame { ansatz: *self, junction: geom.junction, geom, theta0, time: triod.time, partition }
    }

    pub fn frame_at(&self, traj: &Trajectory, t: f64) -> Result<Frame<'a>> {
        Ok(self.frame(&traj.at(t)?))
    }

    /// `ψ_ε = v_ε(·, 0)` on the nodes of `grid` selected by `mask`.
    pub fn psi(&self, traj: &Trajectory, grid: &Grid, mask: Option<&[bool]>, exec: Exec) -> Result<VectorField2D> {
        self.frame_at(traj, traj.t_start())?.sample(grid, mask, exec)
    }
}

/// The construction frozen at one triod snapshot.
#[derive(Clone, Debug)]
pub struct Frame<'a> {
    pub ansatz: Ansatz<'a>,
    pub geom: TriodGeometry,
    pub junction: Point,
    /// Tangent angle of curve 0 at the junction; the gauge `θ(t)`.
    pub theta0: f64,
    pub time: f64,
    partition: AngularPartition,
}

impl<'a> Frame<'a> {
    fn eps(&self) -> f64 {
        self.ansatz.params.eps
    }

    fn wells(&self) -> &[Point; 3] {
        &self.ansatz.potential.wells
    }

    fn polar(&self, x: &Point) -> (f64, f64) {
        let v = x - self.junction;
        (v.norm(), v.y.atan2(v.x) - self.theta0)
    }

    fn ext_from(&self, d: &PointDistances, x: &Point) -> Result<ExtWeights> {
        let delta = self.ansatz.params.radii.delta;
        let tube = [eta(d.signed[0].abs() / delta), eta(d.signed[1].abs() / delta), eta(d.signed[2].abs() / delta)];
        let sum: f64 = tube.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(Error::Uncovered(x.x, x.y));
        }
        Ok(ExtWeights { tube, sector_weight: (1.0 - sum).max(0.0), sector: d.sector })
    }

    pub fn xi_ext(&self, x: &Point) -> Result<ExtWeights> {
        self.ext_from(&self.geom.distances(x), x)
    }

    /// `ξ^ext_{ij}`: `i == j` is the tube around curve `i`, `(i, i + 1)`
    /// the plateau of sector `i + 1`.
    pub fn xi_ext_pair(&self, i: usize, j: usize, x: &Point) -> Result<f64> {
        let w = self.xi_ext(x)?;
        if i == j {
            Ok(w.tube[i])
        } else if j == (i + 1) % 3 && w.sector == j {
            Ok(w.sector_weight)
        } else {
            Ok(0.0)
        }
    }

    fn phi_from(&self, d: &PointDistances, x: &Point) -> Result<Point> {
        let w = self.ext_from(d, x)?;
        let mut out = self.wells()[w.sector] * w.sector_weight;
        for i in 0..3 {
            if w.tube[i] > 0.0 {
                out += self.ansatz.profiles[i].eval_smooth(d.signed[i] / self.eps()) * w.tube[i];
            }
        }
        Ok(out)
    }

    /// Tube/sector blend of profiles and wells.
    pub fn phi(&self, x: &Point) -> Result<Point> {
        self.phi_from(&self.geom.distances(x), x)
    }

    pub fn phi_eta(&self, x: &Point) -> Result<Point> {
        let (r, _) = self.polar(x);
        let cut = 1.0 - self.ansatz.params.eta2(r);
        if cut == 0.0 {
            return Ok(Point::zeros());
        }
        Ok(self.phi(x)? * cut)
    }

    fn tilde_from(&self, d: &PointDistances, phi: f64) -> Point {
        let (e, rest, s) = self.partition.weights(phi);
        let mut out = self.wells()[s] * rest;
        for i in 0..3 {
            if e[i] > 0.0 {
                out += self.ansatz.profiles[i].eval_smooth(d.signed[i] / self.eps()) * e[i];
            }
        }
        out
    }

    /// Angular blend of profiles and wells around the junction.
    pub fn tilde_phi(&self, x: &Point) -> Result<Point> {
        let (r, phi) = self.polar(x);
        if r == 0.0 {
            return Err(Error::AngleUndefined);
        }
        Ok(self.tilde_from(&self.geom.distances(x), phi))
    }

    pub fn core_value(&self, x: &Point) -> Point {
        self.ansatz.core.eval_junction_core(x, &self.junction, -self.theta0, self.eps())
    }

    pub fn v(&self, x: &Point) -> Result<Point> {
        let p = &self.ansatz.params;
        let (r, phi) = self.polar(x);
        let e2 = p.eta2(r);
        let e1 = p.eta1(r);
        let needs_d = e2 < 1.0 || e1 < 1.0;
        let d = if needs_d { Some(self.geom.distances(x)) } else { None };
        let mut out = Point::zeros();
        if e2 < 1.0 {
            out += self.phi_from(d.as_ref().unwrap(), x)? * (1.0 - e2);
        }
        if e2 > 0.0 {
            let mut inner = Point::zeros();
            if e1 < 1.0 {
                inner += self.tilde_from(d.as_ref().unwrap(), phi) * (1.0 - e1);
            }
            if e1 > 0.0 {
                inner += self.core_value(x) * e1;
            }
            out += inner * e2;
        }
        Ok(out)
    }

    pub fn region(&self, x: &Point) -> Region {
        self.region_detail(x).0
    }

    /// Region label and, in the away region, the index of the well.
    pub fn region_detail(&self, x: &Point) -> (Region, Option<usize>) {
        let p = &self.ansatz.params;
        let (r, phi) = self.polar(x);
        let rin = p.inner_radius();
        let dt = p.radii.delta_tilde;
        if r < 0.5 * rin {
            return (Region::Core, None);
        }
        if r < rin {
            return (Region::InnerBlend, None);
        }
        if r < dt - p.eps {
            let (e, rest, s) = self.partition.weights(phi);
            return if rest == 1.0 {
                (Region::Away, Some(s))
            } else if e.iter().any(|&w| w == 1.0) {
                (Region::NearInterface, None)
            } else {
                (Region::Transition, None)
            };
        }
        if r < dt {
            return (Region::OuterBlend, None);
        }
        match self.xi_ext(x) {
            Ok(w) if w.sector_weight == 1.0 => (Region::Away, Some(w.sector)),
            Ok(w) if w.tube.iter().any(|&a| a == 1.0) => (Region::NearInterface, None),
            _ => (Region::Transition, None),
        }
    }

    /// `v_ε` on the nodes of `grid`; nodes outside `mask` are set to zero.
    pub fn sample(&self, grid: &Grid, mask: Option<&[bool]>, exec: Exec) -> Result<VectorField2D> {
        let vals: Vec<Result<Point>> = exec.map(grid.len(), |k| match mask {
            Some(m) if !m[k] => Ok(Point::zeros()),
            _ => self.v(&grid.point_at(k)),
        });
        let values = vals.into_iter().collect::<Result<Vec<_>>>()?;
        VectorField2D::new(*grid, values, self.time())
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}
