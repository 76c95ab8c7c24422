//! Outer domain description and the adaptive refinement triplet.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::colloid::{ColloidState, Vec2};
use crate::error::{Error, Result};

/// Adaptive discretization triplet {Δx∞, M_r, M_l}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementSpec {
    pub dx_inf: f64,
    pub levels: u32,
    pub layers: u32,
}

impl RefinementSpec {
    pub fn new(dx_inf: f64, levels: u32, layers: u32) -> Result<Self> {
        let spec = RefinementSpec {
            dx_inf,
            levels,
            layers,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx_inf.is_finite() && self.dx_inf > 0.0) {
            return Err(Error::Geometry(format!("dx_inf must be positive, got {}", self.dx_inf)));
        }
        if self.levels < 1 || self.layers < 1 {
            return Err(Error::Geometry(format!(
                "refinement needs levels >= 1 and layers >= 1, got {} and {}",
                self.levels, self.layers
            )));
        }
        Ok(())
    }

    /// Lengthscale of level `i`: Δx∞·2^(i − M_r).
    pub fn level_spacing(&self, i: u32) -> f64 {
        self.dx_inf * 2f64.powi(i as i32 - self.levels as i32)
    }

    /// Finest spacing, used on colloid surfaces.
    pub fn finest(&self) -> f64 {
        self.level_spacing(0)
    }

    /// Offset from the colloid surface of the outermost layer of level `i`.
    pub fn cumulative_thickness(&self, i: u32) -> f64 {
        (1..=i).map(|l| self.layers as f64 * self.level_spacing(l)).sum()
    }

    pub fn total_thickness(&self) -> f64 {
        self.cumulative_thickness(self.levels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NotchWall {
    #[default]
    Bottom,
    Top,
}

/// Rectangular indentation cut into the top or bottom channel wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Notch {
    pub x_start: f64,
    pub x_end: f64,
    pub depth: f64,
    #[serde(default)]
    pub wall: NotchWall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OuterBoundary {
    Rectangle {
        lower: Vec2,
        upper: Vec2,
        #[serde(default)]
        notch: Option<Notch>,
    },
    Circle {
        center: Vec2,
        radius: f64,
    },
}

/// A boundary point of the outer wall with its outward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSample {
    pub point: Vec2,
    pub normal: Vec2,
}

impl OuterBoundary {
    pub fn unit_square() -> Self {
        OuterBoundary::Rectangle {
            lower: [0.0, 0.0],
            upper: [1.0, 1.0],
            notch: None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            OuterBoundary::Rectangle { lower, upper, notch } => {
                if !(upper[0] > lower[0] && upper[1] > lower[1]) {
                    return Err(Error::Geometry("rectangle upper corner must exceed lower corner".into()));
                }
                if let Some(n) = notch {
                    if n.depth < 0.0 || n.depth >= upper[1] - lower[1] {
                        return Err(Error::Geometry(format!("notch depth {} out of range", n.depth)));
                    }
                    if n.depth > 0.0 && !(n.x_start > lower[0] && n.x_end < upper[0] && n.x_end > n.x_start) {
                        return Err(Error::Geometry("notch must lie strictly inside the wall span".into()));
                    }
                }
                Ok(())
            }
            OuterBoundary::Circle { radius, .. } => {
                if radius.is_finite() && *radius > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Geometry(format!("outer radius must be positive, got {radius}")))
                }
            }
        }
    }

    /// Vertices of the wall polygon in counter-clockwise order.
    fn polygon(&self) -> Option<Vec<Vec2>> {
        let OuterBoundary::Rectangle { lower, upper, notch } = self else {
            return None;
        };
        let (x0, y0, x1, y1) = (lower[0], lower[1], upper[0], upper[1]);
        let mut v = Vec::with_capacity(8);
        match notch {
            Some(n) if n.depth > 0.0 && n.wall == NotchWall::Bottom => {
                v.extend([[x0, y0], [n.x_start, y0], [n.x_start, y0 + n.depth]]);
                v.extend([[n.x_end, y0 + n.depth], [n.x_end, y0], [x1, y0], [x1, y1], [x0, y1]]);
            }
            Some(n) if n.depth > 0.0 => {
                v.extend([[x0, y0], [x1, y0], [x1, y1], [n.x_end, y1]]);
                v.extend([[n.x_end, y1 - n.depth], [n.x_start, y1 - n.depth], [n.x_start, y1], [x0, y1]]);
            }
            _ => v.extend([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]),
        }
        Some(v)
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        match self {
            OuterBoundary::Rectangle { lower, upper, .. } => (*lower, *upper),
            OuterBoundary::Circle { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
        }
    }

    /// True when `p` lies strictly inside the fluid region bounded by the wall.
    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            OuterBoundary::Circle { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) < *radius
            }
            OuterBoundary::Rectangle { .. } => {
                let poly = self.polygon().expect("rectangle has polygon");
                let mut inside = false;
                let n = poly.len();
                for k in 0..n {
                    let a = poly[k];
                    let b = poly[(k + 1) % n];
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                }
                inside && self.distance(p) > 0.0
            }
        }
    }

    /// Unsigned distance from `p` to the wall.
    pub fn distance(&self, p: Vec2) -> f64 {
        match self {
            OuterBoundary::Circle { center, radius } => {
                ((p[0] - center[0]).hypot(p[1] - center[1]) - radius).abs()
            }
            OuterBoundary::Rectangle { .. } => {
                let poly = self.polygon().expect("rectangle has polygon");
                let n = poly.len();
                (0..n)
                    .map(|k| segment_distance(p, poly[k], poly[(k + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Places wall points at spacing close to `spacing`; polygon corners are
    /// sampled once with the bisector of the adjacent edge normals.
    pub fn sample_perimeter(&self, spacing: f64) -> Vec<WallSample> {
        match self {
            OuterBoundary::Circle { center, radius } => {
                let n = (TAU * radius / spacing).ceil().max(3.0) as usize;
                (0..n)
                    .map(|k| {
                        let (s, c) = (TAU * k as f64 / n as f64).sin_cos();
                        WallSample {
                            point: [center[0] + radius * c, center[1] + radius * s],
                            normal: [c, s],
                        }
                    })
                    .collect()
            }
            OuterBoundary::Rectangle { .. } => {
                let poly = self.polygon().expect("rectangle has polygon");
                let n = poly.len();
                let edge_normal = |k: usize| {
                    let a = poly[k];
                    let b = poly[(k + 1) % n];
                    let d = [b[0] - a[0], b[1] - a[1]];
                    let len = d[0].hypot(d[1]);
                    [d[1] / len, -d[0] / len]
                };
                let mut out = Vec::new();
                for k in 0..n {
                    let a = poly[k];
                    let b = poly[(k + 1) % n];
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    let segs = (len / spacing).round().max(1.0) as usize;
                    let ne = edge_normal(k);
                    let np = edge_normal((k + n - 1) % n);
                    let bis = [ne[0] + np[0], ne[1] + np[1]];
                    let bl = bis[0].hypot(bis[1]);
                    out.push(WallSample {
                        point: a,
                        normal: [bis[0] / bl, bis[1] / bl],
                    });
                    for s in 1..segs {
                        let t = s as f64 / segs as f64;
                        out.push(WallSample {
                            point: [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                            normal: ne,
                        });
                    }
                }
                out
            }
        }
    }
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
    (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
}

/// Fluid domain: outer wall plus reference colloid placements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub outer: OuterBoundary,
    #[serde(default)]
    pub colloids: Vec<ColloidState>,
}

impl Geometry {
    pub fn new(outer: OuterBoundary, colloids: Vec<ColloidState>) -> Self {
        Geometry { outer, colloids }
    }

    /// Checks that colloids sit strictly inside the wall and do not overlap.
    pub fn validate_with(&self, colloids: &[ColloidState], probe_spacing: f64) -> Result<()> {
        self.outer.validate()?;
        for (k, c) in colloids.iter().enumerate() {
            if !c.shape.is_valid() {
                return Err(Error::Geometry(format!("colloid {k} has a non-positive size")));
            }
            for s in c.sample_offset(0.0, probe_spacing) {
                if !self.outer.contains(s.point) {
                    return Err(Error::Geometry(format!("colloid {k} overlaps the outer boundary")));
                }
            }
        }
        for a in 0..colloids.len() {
            for b in (a + 1)..colloids.len() {
                if colloid_gap(&colloids[a], &colloids[b], probe_spacing) <= 0.0 {
                    return Err(Error::Geometry(format!("colloids {a} and {b} intersect")));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self, probe_spacing: f64) -> Result<()> {
        self.validate_with(&self.colloids, probe_spacing)
    }
}

/// Surface-to-surface gap between two colloids (exact for disk pairs,
/// sampled at `probe_spacing` otherwise).
pub fn colloid_gap(a: &ColloidState, b: &ColloidState, probe_spacing: f64) -> f64 {
    use crate::colloid::Shape;
    match (a.shape, b.shape) {
        (Shape::Disk { radius: ra }, Shape::Disk { radius: rb }) => {
            let d = (a.position[0] - b.position[0]).hypot(a.position[1] - b.position[1]);
            d - ra - rb
        }
        _ => {
            let ab = a
                .sample_offset(0.0, probe_spacing)
                .iter()
                .map(|s| b.signed_distance(s.point))
                .fold(f64::INFINITY, f64::min);
            let ba = b
                .sample_offset(0.0, probe_spacing)
                .iter()
                .map(|s| a.signed_distance(s.point))
                .fold(f64::INFINITY, f64::min);
            ab.min(ba)
        }
    }
}

/// Smallest distance from a colloid surface to the outer wall.
pub fn wall_gap(outer: &OuterBoundary, c: &ColloidState, probe_spacing: f64) -> f64 {
    use crate::colloid::Shape;
    match (outer, c.shape) {
        (OuterBoundary::Circle { center, radius }, Shape::Disk { radius: a }) => {
            radius - (c.position[0] - center[0]).hypot(c.position[1] - center[1]) - a
        }
        _ => c
            .sample_offset(0.0, probe_spacing)
            .iter()
            .map(|s| {
                if outer.contains(s.point) {
                    outer.distance(s.point)
                } else {
                    -outer.distance(s.point)
                }
            })
            .fold(f64::INFINITY, f64::min),
    }
}
