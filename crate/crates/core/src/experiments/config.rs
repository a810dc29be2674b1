//! Experiment configuration, read from TOML.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, Grid};
use crate::linalg::{left_normal, pt, unit, Point};
use crate::potential::{ThreeWellPotential, STANDARD_ID};
use crate::solver::Scheme;
use crate::triod::{AngleMode, Triod};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Convergence,
    RateFit,
    Uniqueness,
    Blowup,
    ResidualAudit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Named(String),
    Wells { wells: [[f64; 2]; 3] },
}

impl PotentialSpec {
    pub fn build(&self) -> Result<ThreeWellPotential> {
        match self {
            PotentialSpec::Named(name) => ThreeWellPotential::by_name(name),
            PotentialSpec::Wells { wells } => ThreeWellPotential::with_wells(wells.map(|[x, y]| pt(x, y))),
        }
    }
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Named(STANDARD_ID.to_string())
    }
}

/// Node placement along each arm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    /// Uniform in the arm parameter.
    Uniform,
    /// Clustered at both ends, `s_k = (1 − cos(πk/(n−1)))/2`.
    Chebyshev,
}

impl Spacing {
    pub fn params(self, nodes: usize) -> Vec<f64> {
        let m = (nodes - 1) as f64;
        (0..nodes)
            .map(|k| match self {
                Spacing::Uniform => k as f64 / m,
                Spacing::Chebyshev => 0.5 * (1.0 - (PI * k as f64 / m).cos()),
            })
            .collect()
    }
}

/// Arm `arm` displaced along its left normal by `amplitude · s · sin(πs)`,
/// `s ∈ [0, 1]` the arm parameter. The junction angle is unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bend {
    pub arm: usize,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TriodSpec {
    /// Straight arms from `junction` in the given directions (degrees) up
    /// to the domain boundary, optionally with one bent arm.
    Rays {
        #[serde(default)]
        junction: [f64; 2],
        angles_deg: [f64; 3],
        #[serde(default = "default_nodes")]
        nodes: usize,
        #[serde(default)]
        bend: Option<Bend>,
    },
    /// Three polylines starting at a common junction, optionally resampled
    /// to `nodes` points per curve.
    Polylines {
        curves: [Vec<[f64; 2]>; 3],
        #[serde(default)]
        nodes: Option<usize>,
    },
}

fn default_nodes() -> usize {
    257
}

/// Cumulative arclength fractions of a polyline.
fn arclength_fractions(c: &[Point]) -> Vec<f64> {
    let mut s = vec![0.0];
    for w in c.windows(2) {
        s.push(s.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *s.last().unwrap();
    s.iter().map(|x| x / total).collect()
}

fn resample(c: &[Point], params: &[f64]) -> Vec<Point> {
    let s = arclength_fractions(c);
    params
        .iter()
        .map(|&t| {
            let k = s.partition_point(|&x| x < t).clamp(1, c.len() - 1);
            let span = s[k] - s[k - 1];
            let f = if span > 0.0 { ((t - s[k - 1]) / span).clamp(0.0, 1.0) } else { 0.0 };
            c[k - 1] * (1.0 - f) + c[k] * f
        })
        .collect()
}

impl TriodSpec {
    pub fn build(&self, domain: &Domain, mode: AngleMode, spacing: Spacing) -> Result<Triod> {
        match self {
            TriodSpec::Rays { junction, angles_deg, nodes, bend } => {
                if *nodes < 3 {
                    return Err(Error::Config("at least 3 nodes per arm".into()));
                }
                let o = pt(junction[0], junction[1]);
                if !domain.contains(&o) {
                    return Err(Error::Config("junction outside the domain".into()));
                }
                let s = spacing.params(*nodes);
                let curves = [0, 1, 2].map(|i| {
                    let dir = unit(angles_deg[i].to_radians());
                    let end = domain.ray_exit(&o, &dir);
                    let n = left_normal(&dir);
                    s.iter()
                        .map(|&t| {
                            let off = match bend {
                                Some(b) if b.arm == i => b.amplitude * t * (PI * t).sin(),
                                _ => 0.0,
                            };
                            o + (end - o) * t + n * off
                        })
                        .collect::<Vec<_>>()
                });
                Triod::from_curves(curves, mode)
            }
            TriodSpec::Polylines { curves, nodes } => {
                if curves.iter().any(|c| c.len() < 2) || nodes.is_some_and(|n| n < 3) {
                    return Err(Error::Config("polylines need at least 2 points, resampling at least 3".into()));
                }
                let pts = curves.clone().map(|c| c.iter().map(|&[x, y]| pt(x, y)).collect::<Vec<_>>());
                let pts = match (spacing, nodes) {
                    (Spacing::Uniform, None) => pts,
                    (sp, n) => pts.map(|c| {
                        let params = sp.params(n.unwrap_or(c.len()));
                        resample(&c, &params)
                    }),
                };
                Triod::from_curves(pts, mode)
            }
        }
    }

    /// The same data with the junction moved by `shift`.
    pub fn shifted(&self, shift: [f64; 2]) -> TriodSpec {
        match self {
            TriodSpec::Rays { junction, angles_deg, nodes, bend } => TriodSpec::Rays {
                junction: [junction[0] + shift[0], junction[1] + shift[1]],
                angles_deg: *angles_deg,
                nodes: *nodes,
                bend: *bend,
            },
            TriodSpec::Polylines { curves, nodes } => {
                let mut curves = curves.clone();
                for c in curves.iter_mut() {
                    let n = c.len() - 1;
                    for (k, p) in c.iter_mut().enumerate() {
                        // fade the shift out towards the fixed endpoints
                        let f = 1.0 - k as f64 / n as f64;
                        p[0] += f * shift[0];
                        p[1] += f * shift[1];
                    }
                }
                TriodSpec::Polylines { curves, nodes: *nodes }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessOptions {
    /// Junction displacement of the negative control, in grid cells.
    #[serde(default = "default_control_cells")]
    pub control_shift_cells: f64,
    /// Threshold of the well classification as a fraction of the minimal
    /// well separation.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_control_cells() -> f64 {
    6.0
}

fn default_threshold() -> f64 {
    0.25
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        UniquenessOptions { control_shift_cells: default_control_cells(), threshold: default_threshold() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupOptions {
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    /// Radius of the comparison window around the origin.
    #[serde(default = "default_window")]
    pub window: f64,
    /// Largest admissible `√t · max|k|`.
    #[serde(default = "default_curvature_bound")]
    pub curvature_bound: f64,
    #[serde(default = "default_flow_snapshots")]
    pub flow_snapshots: usize,
    #[serde(default = "default_expander_nodes")]
    pub expander_nodes: usize,
}

fn default_betas() -> Vec<f64> {
    vec![1.0, 0.5, 0.25]
}

fn default_window() -> f64 {
    0.5
}

fn default_curvature_bound() -> f64 {
    10.0
}

fn default_flow_snapshots() -> usize {
    400
}

fn default_expander_nodes() -> usize {
    513
}

impl Default for BlowupOptions {
    fn default() -> Self {
        BlowupOptions {
            betas: default_betas(),
            window: default_window(),
            curvature_bound: default_curvature_bound(),
            flow_snapshots: default_flow_snapshots(),
            expander_nodes: default_expander_nodes(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditOptions {
    #[serde(default = "default_slices")]
    pub slices: usize,
    /// Weight slice sups by `√t` before fitting.
    #[serde(default)]
    pub self_similar: bool,
}

fn default_slices() -> usize {
    8
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { slices: default_slices(), self_similar: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub triod: TriodSpec,
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    pub t_end: f64,
    /// Grid cells per ε, or one value for the whole ladder.
    pub resolutions: Vec<usize>,
    #[serde(default = "default_domain")]
    pub domain: Domain,
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Number of solver snapshots, uniform in `(0, t_end]`.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    /// Snapshots stored along the triod flow.
    #[serde(default = "default_flow_snapshots_traj")]
    pub flow_snapshots: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Write solver snapshots as binary fields.
    #[serde(default = "default_true")]
    pub write_fields: bool,
    /// Convergence table read by `rate-fit`; `<out_dir>/convergence.csv` by default.
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[serde(default)]
    pub uniqueness: UniquenessOptions,
    #[serde(default)]
    pub blowup: BlowupOptions,
    #[serde(default)]
    pub audit: AuditOptions,
}

fn default_domain() -> Domain {
    Domain::unit_disk()
}

fn default_rho() -> f64 {
    crate::ansatz::DEFAULT_RHO
}

fn default_snapshots() -> usize {
    8
}

fn default_scheme() -> Scheme {
    Scheme::SemiImplicit
}

fn default_flow_snapshots_traj() -> usize {
    200
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolution(&self, k: usize) -> usize {
        if self.resolutions.len() == 1 {
            self.resolutions[0]
        } else {
            self.resolutions[k]
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::Config("empty ε ladder".into()));
        }
        if self.eps.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Config("ε must be positive".into()));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(format!("ε ladder {:?} is not strictly decreasing", self.eps)));
        }
        if self.resolutions.len() != 1 && self.resolutions.len() != self.eps.len() {
            return Err(Error::Config("give one resolution or one per ε".into()));
        }
        for (k, &e) in self.eps.iter().enumerate() {
            let h = Grid::cover(&self.domain, self.resolution(k)).h;
            if h > e / 4.0 * (1.0 + 1e-12) {
                return Err(Error::Config(format!("h = {h} exceeds ε/4 = {} at ε = {e}", e / 4.0)));
            }
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Config(format!("t_end = {}", self.t_end)));
        }
        if !(self.rho > 0.5 && self.rho < 1.0) {
            return Err(Error::Config(format!("ρ = {} outside (1/2, 1)", self.rho)));
        }
        if self.snapshots == 0 || self.flow_snapshots == 0 {
            return Err(Error::Config("snapshot counts must be positive".into()));
        }
        let b = &self.blowup;
        if b.betas.iter().any(|&x| !(x > 0.0 && x <= 1.0)) || b.betas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("β ladder must be strictly decreasing in (0, 1]".into()));
        }
        if !(b.window > 0.0) {
            return Err(Error::Config("blow-up window must be positive".into()));
        }
        if !(self.uniqueness.threshold > 0.0 && self.uniqueness.threshold < 0.5) {
            return Err(Error::Config("uniqueness threshold outside (0, 1/2)".into()));
        }
        if self.audit.slices == 0 {
            return Err(Error::Config("at least one audit slice".into()));
        }
        Ok(())
    }

    /// Output times of the solver.
    pub fn snapshot_times(&self) -> Vec<f64> {
        (1..=self.snapshots).map(|k| self.t_end * k as f64 / self.snapshots as f64).collect()
    }
}

/// Stem of the field files of one ladder entry, free of dots.
pub fn field_stem(prefix: &str, eps: f64) -> String {
    format!("{prefix}_eps{:04}", (eps * 1e4).round() as i64)
}

/// Angle mode matching the junction angles of the potential.
pub fn angle_mode_for(alpha: [f64; 3]) -> AngleMode {
    if alpha.iter().all(|a| (a - TAU / 3.0).abs() < 1e-9) {
        AngleMode::Balanced
    } else {
        AngleMode::Fixed(alpha)
    }
}
