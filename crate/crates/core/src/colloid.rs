//! Rigid colloid shapes and kinematic state.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub type Vec2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Disk { radius: f64 },
    Square { side: f64 },
}

impl Shape {
    /// Smallest geometric lengthscale of the shape (radius, or half the side).
    pub fn feature_size(&self) -> f64 {
        match *self {
            Shape::Disk { radius } => radius,
            Shape::Square { side } => 0.5 * side,
        }
    }

    /// Radius of the smallest disk centred on the colloid that contains it.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Disk { radius } => radius,
            Shape::Square { side } => 0.5 * side * std::f64::consts::SQRT_2,
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            Shape::Disk { radius } => radius.is_finite() && radius > 0.0,
            Shape::Square { side } => side.is_finite() && side > 0.0,
        }
    }
}

/// Position, orientation and rigid-body velocity of one colloid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColloidState {
    #[serde(flatten)]
    pub shape: Shape,
    pub position: Vec2,
    #[serde(default)]
    pub orientation: f64,
    #[serde(default)]
    pub velocity: Vec2,
    #[serde(default)]
    pub angular_velocity: f64,
}

/// A boundary sample: location plus unit normal pointing away from the colloid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub point: Vec2,
    pub normal: Vec2,
}

/// ⌈x⌉ rounded up to an even count (at least `min`), so that curves sampled
/// for point-mirrored colloids are themselves point-mirrored.
fn even_count(x: f64, min: usize) -> usize {
    let n = (x.ceil() as usize).max(min);
    n + n % 2
}

pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl ColloidState {
    pub fn disk(radius: f64, position: Vec2) -> Self {
        ColloidState {
            shape: Shape::Disk { radius },
            position,
            orientation: 0.0,
            velocity: [0.0; 2],
            angular_velocity: 0.0,
        }
    }

    pub fn square(side: f64, position: Vec2, orientation: f64) -> Self {
        ColloidState {
            shape: Shape::Square { side },
            position,
            orientation: wrap_angle(orientation),
            velocity: [0.0; 2],
            angular_velocity: 0.0,
        }
    }

    /// Velocity of the rigid motion Ẋ + Θ̇ × (x − X) at `x`.
    pub fn rigid_velocity(&self, x: Vec2) -> Vec2 {
        let r = [x[0] - self.position[0], x[1] - self.position[1]];
        [
            self.velocity[0] - self.angular_velocity * r[1],
            self.velocity[1] + self.angular_velocity * r[0],
        ]
    }

    fn to_local(&self, p: Vec2) -> Vec2 {
        let (s, c) = self.orientation.sin_cos();
        let d = [p[0] - self.position[0], p[1] - self.position[1]];
        [c * d[0] + s * d[1], -s * d[0] + c * d[1]]
    }

    fn rotate(&self, v: Vec2) -> Vec2 {
        let (s, c) = self.orientation.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }

    fn to_global(&self, p: Vec2) -> Vec2 {
        let r = self.rotate(p);
        [r[0] + self.position[0], r[1] + self.position[1]]
    }

    /// Signed distance from `p` to the colloid surface (negative inside).
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        match self.shape {
            Shape::Disk { radius } => {
                let d = [p[0] - self.position[0], p[1] - self.position[1]];
                d[0].hypot(d[1]) - radius
            }
            Shape::Square { side } => {
                let q = self.to_local(p);
                let h = 0.5 * side;
                let dx = q[0].abs() - h;
                let dy = q[1].abs() - h;
                let outside = dx.max(0.0).hypot(dy.max(0.0));
                outside + dx.max(dy).min(0.0)
            }
        }
    }

    /// Perimeter of the curve at distance `offset` outside the surface.
    pub fn perimeter_at_offset(&self, offset: f64) -> f64 {
        match self.shape {
            Shape::Disk { radius } => TAU * (radius + offset),
            Shape::Square { side } => 4.0 * side + TAU * offset,
        }
    }

    /// Samples the curve at distance `offset` from the surface at arclength
    /// close to `spacing`, ordered counter-clockwise.
    ///
    /// Disks use ⌈perimeter/spacing⌉ (rounded up to even) equispaced points starting at the
    /// orientation angle. The bare square surface places a point on every
    /// corner (bisector normal) and ⌈side/spacing⌉ segments per edge; offset
    /// squares follow the rounded offset curve.
    pub fn sample_offset(&self, offset: f64, spacing: f64) -> Vec<BoundarySample> {
        match self.shape {
            Shape::Disk { radius } => {
                let r = radius + offset;
                let n = even_count(TAU * r / spacing, 4);
                (0..n)
                    .map(|k| {
                        let t = self.orientation + TAU * k as f64 / n as f64;
                        let (s, c) = t.sin_cos();
                        BoundarySample {
                            point: [self.position[0] + r * c, self.position[1] + r * s],
                            normal: [c, s],
                        }
                    })
                    .collect()
            }
            Shape::Square { side } if offset == 0.0 => self.sample_square_surface(side, spacing),
            Shape::Square { side } => self.sample_rounded_square(side, offset, spacing),
        }
    }

    fn sample_square_surface(&self, side: f64, spacing: f64) -> Vec<BoundarySample> {
        let h = 0.5 * side;
        let per_edge = (side / spacing).ceil().max(1.0) as usize;
        let corners = [[-h, -h], [h, -h], [h, h], [-h, h]];
        let normals = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = Vec::with_capacity(4 * per_edge);
        for e in 0..4 {
            let a = corners[e];
            let b = corners[(e + 1) % 4];
            let prev = normals[(e + 3) % 4];
            let corner_normal = [
                (prev[0] + normals[e][0]) * inv_sqrt2,
                (prev[1] + normals[e][1]) * inv_sqrt2,
            ];
            for k in 0..per_edge {
                let t = k as f64 / per_edge as f64;
                let local = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let n = if k == 0 { corner_normal } else { normals[e] };
                out.push(BoundarySample {
                    point: self.to_global(local),
                    normal: self.rotate(n),
                });
            }
        }
        out
    }

    fn sample_rounded_square(&self, side: f64, offset: f64, spacing: f64) -> Vec<BoundarySample> {
        let h = 0.5 * side;
        let arc = 0.5 * PI * offset;
        let piece = side + arc;
        let total = 4.0 * piece;
        let n = even_count(total / spacing, 4);
        let corners = [[h, -h], [h, h], [-h, h], [-h, -h]];
        let starts = [[-h, -h - offset], [h + offset, -h], [h, h + offset], [-h - offset, h]];
        let dirs = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        let normals = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        (0..n)
            .map(|k| {
                let s = total * k as f64 / n as f64;
                let e = ((s / piece) as usize).min(3);
                let t = s - e as f64 * piece;
                let (local, normal) = if t <= side {
                    let p = [starts[e][0] + t * dirs[e][0], starts[e][1] + t * dirs[e][1]];
                    (p, normals[e])
                } else {
                    let phi = -0.5 * PI + e as f64 * 0.5 * PI + (t - side) / offset;
                    let (sn, cs) = phi.sin_cos();
                    let c = corners[e];
                    ([c[0] + offset * cs, c[1] + offset * sn], [cs, sn])
                };
                BoundarySample {
                    point: self.to_global(local),
                    normal: self.rotate(normal),
                }
            })
            .collect()
    }
}
