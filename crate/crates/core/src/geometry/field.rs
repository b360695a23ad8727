use serde::{Deserialize, Serialize};

use super::Vec2;
use crate::error::ConfigError;

/// Field dimensions and the goalkeeper clear-out region boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldModel {
    pub length: f64,
    pub width: f64,
    pub goal_area_depth: f64,
    pub goal_area_width: f64,
    pub goal_width: f64,
    /// Distance of the penalty mark from the goal line.
    pub penalty_mark_distance: f64,
    pub center_circle_radius: f64,
    /// Outward tolerance added to the own goal area to form Region 1.
    pub region1_tolerance: f64,
    /// Region 2 covers everything outside Region 1 with `x <= region2_limit_x`.
    pub region2_limit_x: f64,
    pub presence_line_x: f64,
}

impl Default for FieldModel {
    fn default() -> Self {
        Self {
            length: 9.0,
            width: 6.0,
            goal_area_depth: 1.0,
            goal_area_width: 3.0,
            goal_width: 1.8,
            penalty_mark_distance: 2.1,
            center_circle_radius: 0.75,
            region1_tolerance: 0.3,
            region2_limit_x: -1.5,
            presence_line_x: -2.0,
        }
    }
}

/// Goalkeeper clear-out region of the ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    Region1,
    Region2,
    Region3,
}

impl FieldModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invalid(format!("field: {msg}")));
        let values = [
            self.length,
            self.width,
            self.goal_area_depth,
            self.goal_area_width,
            self.goal_width,
            self.penalty_mark_distance,
            self.center_circle_radius,
            self.region1_tolerance,
            self.region2_limit_x,
            self.presence_line_x,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return fail("all dimensions must be finite");
        }
        if !(self.length > self.width && self.width > 0.0) {
            return fail("require length > width > 0");
        }
        if !(self.goal_area_depth > 0.0 && self.goal_area_depth < self.length / 2.0) {
            return fail("require 0 < goal_area_depth < length/2");
        }
        if !(self.goal_area_width > 0.0 && self.goal_area_width <= self.width) {
            return fail("require 0 < goal_area_width <= width");
        }
        if !(self.goal_width > 0.0 && self.goal_width <= self.goal_area_width) {
            return fail("require 0 < goal_width <= goal_area_width");
        }
        if self.region1_tolerance < 0.0 {
            return fail("region1_tolerance must be non-negative");
        }
        if self.region2_limit_x <= -self.length / 2.0 + self.goal_area_depth {
            return fail("region2_limit_x must lie beyond the goal area");
        }
        if self.presence_line_x <= -self.length / 2.0 {
            return fail("presence_line_x must lie inside the field");
        }
        Ok(())
    }

    pub fn half_length(&self) -> f64 {
        self.length / 2.0
    }

    pub fn half_width(&self) -> f64 {
        self.width / 2.0
    }

    pub fn own_goal_center(&self) -> Vec2 {
        Vec2::new(-self.half_length(), 0.0)
    }

    pub fn opponent_goal_center(&self) -> Vec2 {
        Vec2::new(self.half_length(), 0.0)
    }

    /// Own penalty mark first, opponent mark second.
    pub fn penalty_marks(&self) -> [Vec2; 2] {
        let x = self.half_length() - self.penalty_mark_distance;
        [Vec2::new(-x, 0.0), Vec2::new(x, 0.0)]
    }

    /// Front x coordinate and half width of the own goal area grown by `grow`.
    fn goal_area_bounds(&self, grow: f64) -> (f64, f64) {
        (
            -self.half_length() + self.goal_area_depth + grow,
            self.goal_area_width / 2.0 + grow,
        )
    }

    /// Whether `p` lies in the own goal area (boundary inclusive).
    pub fn in_own_goal_area(&self, p: Vec2) -> bool {
        let (front, half) = self.goal_area_bounds(0.0);
        p.x >= -self.half_length() && p.x <= front && p.y.abs() <= half
    }

    /// Whether `p` lies in the own goal area grown by `region1_tolerance + margin`.
    pub fn in_expanded_goal_area(&self, p: Vec2, margin: f64) -> bool {
        let (front, half) = self.goal_area_bounds(self.region1_tolerance + margin);
        p.x <= front && p.y.abs() <= half
    }

    /// Front x coordinate and half width of Region 1.
    pub fn region1_bounds(&self) -> (f64, f64) {
        self.goal_area_bounds(self.region1_tolerance)
    }

    pub fn clamp_to_field(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            p.x.clamp(-self.half_length(), self.half_length()),
            p.y.clamp(-self.half_width(), self.half_width()),
        )
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x.abs() <= self.half_length() && p.y.abs() <= self.half_width()
    }
}

/// Classifies the ball into the goalkeeper clear-out regions. Points outside
/// the field are clamped onto the boundary first; ties go to the lower region.
pub fn classify_ball_region(ball: Vec2, field: &FieldModel) -> Region {
    let ball = field.clamp_to_field(ball);
    if field.in_expanded_goal_area(ball, 0.0) {
        Region::Region1
    } else if ball.x <= field.region2_limit_x {
        Region::Region2
    } else {
        Region::Region3
    }
}
