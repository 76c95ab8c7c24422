//! Simulation configuration (TOML) and the imposed flows.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::{ColloidMode, SolveOptions};
use crate::colloid::{ColloidState, Vec2};
use crate::dynamics::Scheme;
use crate::error::{Error, Result};
use crate::linsolve::{AmgOptions, GmresOptions};
use crate::pointcloud::{OuterBoundary, RefinementSpec};

/// Imposed flow: wall velocity w, body force f and, where known, the exact field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Flow {
    #[default]
    None,
    /// Parabolic inflow/outflow profile with centreline speed `u_max` on the
    /// short sides of a rectangle; the remaining walls are at rest.
    Poiseuille { u_max: f64 },
    /// w = (γ̇ y, 0) on every wall.
    Couette { shear_rate: f64 },
    /// Rigid rotation w = Ω × (x − center).
    Rotation {
        omega: f64,
        #[serde(default)]
        center: Vec2,
    },
    /// u = (sin πx cos πy, −cos πx sin πy), p = cos πx cos πy.
    Manufactured,
}

impl Flow {
    pub fn wall_velocity(&self, outer: &OuterBoundary) -> impl Fn(Vec2) -> Vec2 + use<> {
        let flow = *self;
        let (lo, hi) = outer.bounding_box();
        move |x: Vec2| match flow {
            Flow::None => [0.0, 0.0],
            Flow::Poiseuille { u_max } => {
                let tol = 1e-9 * (hi[0] - lo[0]);
                if (x[0] - lo[0]).abs() <= tol || (x[0] - hi[0]).abs() <= tol {
                    [poiseuille(u_max, lo[1], hi[1], x[1]), 0.0]
                } else {
                    [0.0, 0.0]
                }
            }
            Flow::Couette { shear_rate } => [shear_rate * x[1], 0.0],
            Flow::Rotation { omega, center } => [-omega * (x[1] - center[1]), omega * (x[0] - center[0])],
            Flow::Manufactured => manufactured_velocity(x),
        }
    }

    pub fn body_force(&self, nu: f64) -> impl Fn(Vec2) -> Vec2 + use<> {
        let flow = *self;
        move |x: Vec2| match flow {
            Flow::Manufactured => {
                let u = manufactured_velocity(x);
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                [
                    2.0 * PI * PI * nu * u[0] - PI * sx * cy,
                    2.0 * PI * PI * nu * u[1] - PI * cx * sy,
                ]
            }
            _ => [0.0, 0.0],
        }
    }

    pub fn force_divergence(&self) -> impl Fn(Vec2) -> f64 + use<> {
        let flow = *self;
        move |x: Vec2| match flow {
            Flow::Manufactured => -2.0 * PI * PI * manufactured_pressure(x),
            _ => 0.0,
        }
    }

    /// Exact (u, p) in the empty domain, when the flow has one. Pressures
    /// are defined up to a constant.
    pub fn exact(&self, outer: &OuterBoundary, nu: f64) -> Option<impl Fn(Vec2) -> (Vec2, f64) + use<>> {
        let flow = *self;
        let (lo, hi) = outer.bounding_box();
        let rectangle = matches!(outer, OuterBoundary::Rectangle { notch: None, .. });
        let ok = match flow {
            Flow::Poiseuille { .. } | Flow::Couette { .. } => rectangle,
            _ => true,
        };
        ok.then(|| {
            move |x: Vec2| match flow {
                Flow::None => ([0.0, 0.0], 0.0),
                Flow::Poiseuille { u_max } => {
                    let h = hi[1] - lo[1];
                    ([poiseuille(u_max, lo[1], hi[1], x[1]), 0.0], -8.0 * nu * u_max / (h * h) * x[0])
                }
                Flow::Couette { shear_rate } => ([shear_rate * x[1], 0.0], 0.0),
                Flow::Rotation { omega, center } => {
                    ([-omega * (x[1] - center[1]), omega * (x[0] - center[0])], 0.0)
                }
                Flow::Manufactured => (manufactured_velocity(x), manufactured_pressure(x)),
            }
        })
    }
}

fn poiseuille(u_max: f64, y0: f64, y1: f64, y: f64) -> f64 {
    let h = y1 - y0;
    4.0 * u_max * (y - y0) * (y1 - y) / (h * h)
}

pub fn manufactured_velocity(x: Vec2) -> Vec2 {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    [sx * cy, -cx * sy]
}

pub fn manufactured_pressure(x: Vec2) -> f64 {
    (PI * x[0]).cos() * (PI * x[1]).cos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub outer: OuterBoundary,
    #[serde(default)]
    pub colloids: Vec<ColloidState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    /// Refinement levels may be raised up to this value to keep gaps resolved.
    pub max_levels: Option<u32>,
    pub min_gap_factor: f64,
    /// Wall-clock budget in seconds; the run stops once it is spent.
    pub wall_seconds: Option<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            dt: 0.1,
            steps: 0,
            scheme: Scheme::DifferencePc,
            max_levels: None,
            min_gap_factor: 4.0,
            wall_seconds: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub precondition: bool,
    pub amg_strength: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 2000,
            restart: 200,
            precondition: true,
            amg_strength: AmgOptions::default().strength,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            gmres: GmresOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                restart: self.restart,
            },
            amg: AmgOptions {
                strength: self.amg_strength,
                ..AmgOptions::default()
            },
            precondition: self.precondition,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    /// Grid counts N per side of the unit square (spacing 1/N).
    pub resolutions: Vec<usize>,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            resolutions: vec![16, 32, 64],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CylindersConfig {
    /// Number of times the eccentric gap is halved.
    pub gap_halvings: u32,
    /// Minimum number of finest-level spacings across the narrowest gap.
    pub points_across_gap: f64,
}

impl Default for CylindersConfig {
    fn default() -> Self {
        CylindersConfig {
            gap_halvings: 3,
            points_across_gap: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Colloid speed V used for the prescribed-mode drag cases.
    pub colloid_speed: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig { colloid_speed: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NotchConfig {
    /// The run stops once the colloid centre passes this abscissa.
    pub exit_x: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub nu: f64,
    #[serde(default = "default_order")]
    pub order: usize,
    pub refinement: RefinementSpec,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub flow: Flow,
    #[serde(default)]
    pub colloid_mode: ColloidMode,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub cylinders: CylindersConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub notch: NotchConfig,
}

fn default_order() -> usize {
    4
}

const PRESETS: [(&str, &str); 6] = [
    ("converge", include_str!("../configs/converge.toml")),
    ("cylinders", include_str!("../configs/cylinders.toml")),
    ("channel", include_str!("../configs/channel.toml")),
    ("shear", include_str!("../configs/shear.toml")),
    ("notch", include_str!("../configs/notch.toml")),
    ("quiescent", include_str!("../configs/quiescent.toml")),
];

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Built-in configuration shipped for a scenario name.
    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Usage(format!("no built-in config named `{name}`")))?;
        Self::parse(text)
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(n, _)| *n)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if self.order != 2 && self.order != 4 {
            return Err(Error::Config(format!("order must be 2 or 4, got {}", self.order)));
        }
        self.refinement.validate()?;
        if !(self.time.dt.is_finite() && self.time.dt > 0.0) {
            return Err(Error::Config(format!("time.dt must be positive, got {}", self.time.dt)));
        }
        if self.time.wall_seconds.is_some_and(|w| !(w > 0.0)) {
            return Err(Error::Config("time.wall_seconds must be positive".into()));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(Error::Config(format!("solver.tol must lie in (0, 1), got {}", self.solver.tol)));
        }
        if self.solver.restart == 0 || self.solver.max_iter == 0 {
            return Err(Error::Config("solver.restart and solver.max_iter must be positive".into()));
        }
        for c in &self.geometry.colloids {
            if !c.shape.is_valid() {
                return Err(Error::Config(format!("invalid colloid shape {:?}", c.shape)));
            }
        }
        if self.converge.resolutions.iter().any(|&n| n < 2) {
            return Err(Error::Config("converge.resolutions entries must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_round_trip() {
        for name in SimConfig::preset_names() {
            let cfg = SimConfig::preset(name).unwrap();
            let again = SimConfig::parse(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, again, "{name}");
        }
    }

    #[test]
    fn missing_nu_is_named() {
        let text = "[refinement]\ndx_inf = 0.1\nlevels = 1\nlayers = 1\n[geometry.outer]\nkind = \"circle\"\ncenter = [0.0, 0.0]\nradius = 1.0\n";
        let err = SimConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("nu"), "{err}");
    }

    #[test]
    fn unknown_field_is_rejected_with_location() {
        let mut text = include_str!("../configs/quiescent.toml").to_string();
        text.push_str("\n[solver]\ntolerance = 1e-3\n");
        let err = SimConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("tolerance") || err.contains("line"), "{err}");
    }

    #[test]
    fn manufactured_field_is_solenoidal_with_zero_mean_pressure() {
        let h = 1e-5;
        let n = 40;
        let mut mean = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
                let du = (manufactured_velocity([x[0] + h, x[1]])[0] - manufactured_velocity([x[0] - h, x[1]])[0]) / (2.0 * h);
                let dv = (manufactured_velocity([x[0], x[1] + h])[1] - manufactured_velocity([x[0], x[1] - h])[1]) / (2.0 * h);
                assert!((du + dv).abs() < 1e-8);
                mean += manufactured_pressure(x);
            }
        }
        assert!((mean / (n * n) as f64).abs() < 1e-12);
    }

    #[test]
    fn manufactured_force_matches_momentum_balance() {
        let nu = 0.7;
        let f = Flow::Manufactured.body_force(nu);
        let h = 1e-4;
        let x = [0.31, 0.77];
        let lap = |c: usize| {
            let u = |p: Vec2| manufactured_velocity(p)[c];
            (u([x[0] + h, x[1]]) + u([x[0] - h, x[1]]) + u([x[0], x[1] + h]) + u([x[0], x[1] - h]) - 4.0 * u(x)) / (h * h)
        };
        let px = (manufactured_pressure([x[0] + h, x[1]]) - manufactured_pressure([x[0] - h, x[1]])) / (2.0 * h);
        let py = (manufactured_pressure([x[0], x[1] + h]) - manufactured_pressure([x[0], x[1] - h])) / (2.0 * h);
        let fx = f(x);
        assert!((fx[0] - (-nu * lap(0) + px)).abs() < 1e-5);
        assert!((fx[1] - (-nu * lap(1) + py)).abs() < 1e-5);
    }

    #[test]
    fn poiseuille_walls_and_exact_field() {
        let outer = OuterBoundary::Rectangle {
            lower: [-3.0, -1.0],
            upper: [3.0, 1.0],
            notch: None,
        };
        let flow = Flow::Poiseuille { u_max: 2.0 };
        let w = flow.wall_velocity(&outer);
        assert_eq!(w([-3.0, 0.0]), [2.0, 0.0]);
        assert_eq!(w([0.0, 1.0]), [0.0, 0.0]);
        let exact = flow.exact(&outer, 1.0).unwrap();
        assert_eq!(exact([1.0, 0.0]).0, [2.0, 0.0]);
        assert_eq!(exact([1.0, 0.0]).1, -4.0);
    }
}
