//! Planar geometry in the field frame.
//!
//! The field frame has its origin at the center spot, +x pointing toward the
//! opponent goal and +y to the left. Headings are radians in (-π, π] with 0
//! facing the opponent goal.

mod field;
mod path;
mod targets;

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use field::{classify_ball_region, FieldModel, Region};
pub use path::{surround_path, Disc, PlannedPath};
pub use targets::{
    defender_target_pose, presence_line_clear, wait_clearout_target, wait_clearout_targets,
    DefenderParams, TargetStatus, WaitClearOutParams, WaitTarget,
};

/// Wraps an angle into (-π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    // In-range angles pass through untouched so that negation stays exact.
    if angle > -PI && angle <= PI {
        return angle;
    }
    let wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

pub type Point2 = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(range: f64, angle: f64) -> Self {
        Self::new(range * angle.cos(), range * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Direction of the vector; `atan2(0, 0)` is 0.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Unit vector, or `None` for (near-)zero vectors.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n <= 1e-12 || !n.is_finite() {
            None
        } else {
            Some(Vec2::new(self.x / n, self.y / n))
        }
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn mirrored(self) -> Vec2 {
        Vec2::new(self.x, -self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Planar pose; `theta` is kept in (-π, π] by the constructor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn at(position: Vec2, theta: f64) -> Self {
        Self::new(position.x, position.y, theta)
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Pose facing `target` from `position`; heading 0 when they coincide.
    pub fn looking_at(position: Vec2, target: Vec2) -> Self {
        let heading = (target - position).normalized().map_or(0.0, Vec2::angle);
        Self::at(position, heading)
    }

    /// Composes a body-frame displacement onto this pose.
    pub fn compose(&self, dx: f64, dy: f64, dtheta: f64) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(
            self.x + c * dx - s * dy,
            self.y + s * dx + c * dy,
            self.theta + dtheta,
        )
    }

    /// Maps a body-frame point into the field frame.
    pub fn transform_point(&self, local: Vec2) -> Vec2 {
        self.position() + local.rotated(self.theta)
    }

    /// Maps a field-frame point into this pose's body frame.
    pub fn inverse_transform_point(&self, global: Vec2) -> Vec2 {
        (global - self.position()).rotated(-self.theta)
    }

    /// Reflection across the field x-axis.
    pub fn mirrored(&self) -> Pose2D {
        Pose2D::new(self.x, -self.y, -self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Distance from `point` to the segment `a`-`b`, together with the closest point.
pub fn closest_point_on_segment(point: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= 0.0 {
        return a;
    }
    let t = ((point - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

pub fn distance_to_segment(point: Vec2, a: Vec2, b: Vec2) -> f64 {
    point.distance(closest_point_on_segment(point, a, b))
}

/// Distance from `point` to the ray starting at `origin` along unit `direction`.
pub fn distance_to_ray(point: Vec2, origin: Vec2, direction: Vec2) -> f64 {
    let t = (point - origin).dot(direction).max(0.0);
    point.distance(origin + direction * t)
}
