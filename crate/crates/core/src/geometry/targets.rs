//! Target poses for the defender and for field players waiting on a clear-out.

use serde::{Deserialize, Serialize};

use super::{closest_point_on_segment, distance_to_ray, FieldModel, Pose2D, Region, Vec2};
use crate::error::{ConfigError, GeometryError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefenderParams {
    /// Fraction of the goal-to-anchor distance used as offset from the goal.
    pub gain_k: f64,
    pub magnitude_min: f64,
    /// Distance kept to the anchor (ball or striker).
    pub teammate_separation: f64,
}

impl Default for DefenderParams {
    fn default() -> Self {
        Self {
            gain_k: 0.5,
            magnitude_min: 1.4,
            teammate_separation: 1.5,
        }
    }
}

impl DefenderParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gain_k > 0.0 && self.gain_k <= 1.0) {
            return Err(ConfigError::Invalid("defender: gain_k must be in (0, 1]".into()));
        }
        if !(self.magnitude_min > 0.0 && self.teammate_separation > 0.0) {
            return Err(ConfigError::Invalid(
                "defender: magnitude_min and teammate_separation must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Defender pose on the line from the own goal center toward the ball, or
/// toward the striker when the ball is unknown. `None` without either anchor.
pub fn defender_target_pose(
    ball: Option<Vec2>,
    striker: Option<Pose2D>,
    field: &FieldModel,
    params: &DefenderParams,
) -> Option<Pose2D> {
    let anchor = ball.or(striker.map(|s| s.position()))?;
    let goal = field.own_goal_center();
    let offset = anchor - goal;
    let Some(direction) = offset.normalized() else {
        return Some(Pose2D::new(goal.x + params.magnitude_min, 0.0, 0.0));
    };
    let distance = offset.norm();
    let upper = params
        .magnitude_min
        .max(distance - params.teammate_separation);
    let magnitude = (params.gain_k * distance).clamp(params.magnitude_min, upper);
    let position = goal + direction * magnitude;
    Some(Pose2D::at(position, (anchor - position).angle()))
}

/// Whether no field player stands between the own goal and the presence line.
pub fn presence_line_clear(teammates: &[Vec2], field: &FieldModel) -> bool {
    teammates.iter().all(|p| p.x >= field.presence_line_x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaitClearOutParams {
    /// Half width of the free corridor from the ball toward the opponent goal.
    pub shot_corridor_halfwidth: f64,
    pub min_robot_separation: f64,
    /// Extra clearance kept outside the expanded goal area.
    pub area_margin: f64,
}

impl Default for WaitClearOutParams {
    fn default() -> Self {
        Self {
            shot_corridor_halfwidth: 0.5,
            min_robot_separation: 1.0,
            area_margin: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetStatus {
    Ok,
    /// No point satisfies every constraint; the pose is the current one.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaitTarget {
    pub pose: Pose2D,
    pub status: TargetStatus,
}

const FEASIBILITY_EPS: f64 = 1e-9;
const CIRCLE_SAMPLES: usize = 72;

enum Piece {
    Segment(Vec2, Vec2),
    Circle(Vec2, f64),
}

struct WaitProblem<'a> {
    field: &'a FieldModel,
    params: &'a WaitClearOutParams,
    ball: Vec2,
    shot_direction: Vec2,
    /// Centers that must stay `min_robot_separation` away.
    keep_away: Vec<Vec2>,
}

impl WaitProblem<'_> {
    fn feasible(&self, p: Vec2) -> bool {
        let hl = self.field.half_length() + FEASIBILITY_EPS;
        let hw = self.field.half_width() + FEASIBILITY_EPS;
        if p.x.abs() > hl || p.y.abs() > hw {
            return false;
        }
        let (front, half) = self.field.region1_bounds();
        let m = self.params.area_margin;
        if p.x < front + m - FEASIBILITY_EPS && p.y.abs() < half + m - FEASIBILITY_EPS {
            return false;
        }
        if distance_to_ray(p, self.ball, self.shot_direction)
            < self.params.shot_corridor_halfwidth - FEASIBILITY_EPS
        {
            return false;
        }
        self.keep_away
            .iter()
            .all(|q| p.distance(*q) >= self.params.min_robot_separation - FEASIBILITY_EPS)
    }

    fn pieces(&self) -> Vec<Piece> {
        let f = self.field;
        let (hl, hw) = (f.half_length(), f.half_width());
        let (front, half) = f.region1_bounds();
        let m = self.params.area_margin;
        let (ax, ay) = (front + m, half + m);
        let h = self.params.shot_corridor_halfwidth;
        let normal = self.shot_direction.perp();
        let reach = f.length + f.width;
        let mut pieces = vec![
            // Expanded goal area outline.
            Piece::Segment(Vec2::new(ax, -ay), Vec2::new(ax, ay)),
            Piece::Segment(Vec2::new(-hl, ay), Vec2::new(ax, ay)),
            Piece::Segment(Vec2::new(-hl, -ay), Vec2::new(ax, -ay)),
            // Field boundary.
            Piece::Segment(Vec2::new(-hl, -hw), Vec2::new(hl, -hw)),
            Piece::Segment(Vec2::new(-hl, hw), Vec2::new(hl, hw)),
            Piece::Segment(Vec2::new(-hl, -hw), Vec2::new(-hl, hw)),
            Piece::Segment(Vec2::new(hl, -hw), Vec2::new(hl, hw)),
            // Shot corridor.
            Piece::Segment(
                self.ball + normal * h,
                self.ball + normal * h + self.shot_direction * reach,
            ),
            Piece::Segment(
                self.ball - normal * h,
                self.ball - normal * h + self.shot_direction * reach,
            ),
            Piece::Circle(self.ball, h),
        ];
        let s = self.params.min_robot_separation;
        pieces.extend(self.keep_away.iter().map(|&q| Piece::Circle(q, s)));
        pieces
    }

    fn candidates(&self) -> Vec<Vec2> {
        let pieces = self.pieces();
        let mut out = Vec::new();
        for piece in &pieces {
            match *piece {
                Piece::Segment(a, b) => {
                    out.push(a);
                    out.push(b);
                    out.push(closest_point_on_segment(self.ball, a, b));
                }
                Piece::Circle(c, r) => {
                    if let Some(dir) = (self.ball - c).normalized() {
                        out.push(c + dir * r);
                    }
                    for k in 0..CIRCLE_SAMPLES {
                        let angle = k as f64 * std::f64::consts::TAU / CIRCLE_SAMPLES as f64;
                        out.push(c + Vec2::from_polar(r, angle));
                    }
                }
            }
        }
        for (i, first) in pieces.iter().enumerate() {
            for second in &pieces[i + 1..] {
                intersect(first, second, &mut out);
            }
        }
        out
    }
}

fn intersect(a: &Piece, b: &Piece, out: &mut Vec<Vec2>) {
    match (a, b) {
        (Piece::Segment(p0, p1), Piece::Segment(q0, q1)) => {
            let r = *p1 - *p0;
            let s = *q1 - *q0;
            let denom = r.cross(s);
            if denom.abs() < 1e-12 {
                return;
            }
            let t = (*q0 - *p0).cross(s) / denom;
            let u = (*q0 - *p0).cross(r) / denom;
            if (-1e-12..=1.0 + 1e-12).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&u) {
                out.push(*p0 + r * t);
            }
        }
        (Piece::Segment(p0, p1), Piece::Circle(c, radius))
        | (Piece::Circle(c, radius), Piece::Segment(p0, p1)) => {
            let d = *p1 - *p0;
            let f = *p0 - *c;
            let qa = d.dot(d);
            let qb = 2.0 * f.dot(d);
            let qc = f.dot(f) - radius * radius;
            let disc = qb * qb - 4.0 * qa * qc;
            if qa <= 0.0 || disc < 0.0 {
                return;
            }
            let root = disc.sqrt();
            for t in [(-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)] {
                if (0.0..=1.0).contains(&t) {
                    out.push(*p0 + d * t);
                }
            }
        }
        (Piece::Circle(c0, r0), Piece::Circle(c1, r1)) => {
            let d = c0.distance(*c1);
            if d <= 1e-12 || d > r0 + r1 || d < (r0 - r1).abs() {
                return;
            }
            let a = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d);
            let h = (r0 * r0 - a * a).max(0.0).sqrt();
            let axis = (*c1 - *c0) * (1.0 / d);
            let mid = *c0 + axis * a;
            out.push(mid + axis.perp() * h);
            out.push(mid - axis.perp() * h);
        }
    }
}

/// Staging pose for a field player while the goalkeeper clears the ball.
///
/// The target is the point closest to the ball that lies outside the expanded
/// own goal area, off the shot corridor from the ball toward the opponent goal
/// center, and `min_robot_separation` away from the clearer and from every
/// already assigned teammate target. Equidistant candidates are resolved
/// toward the robot's current position.
pub fn wait_clearout_target(
    self_pose: Pose2D,
    ball: Vec2,
    clearer: Pose2D,
    teammates: &[Pose2D],
    field: &FieldModel,
    params: &WaitClearOutParams,
) -> Result<WaitTarget, GeometryError> {
    if super::classify_ball_region(ball, field) == Region::Region3 {
        return Err(GeometryError::BallOutsideClearOutRegions);
    }
    let ball = field.clamp_to_field(ball);
    let shot_direction = (field.opponent_goal_center() - ball)
        .normalized()
        .unwrap_or(Vec2::new(1.0, 0.0));
    let mut keep_away = vec![clearer.position()];
    keep_away.extend(teammates.iter().map(Pose2D::position));
    let problem = WaitProblem {
        field,
        params,
        ball,
        shot_direction,
        keep_away,
    };

    let me = self_pose.position();
    let best = problem
        .candidates()
        .into_iter()
        .filter(|p| p.is_finite() && problem.feasible(*p))
        .map(|p| (p.distance(ball), p.distance(me), p))
        .min_by(|a, b| {
            let by_ball = if (a.0 - b.0).abs() <= 1e-9 {
                std::cmp::Ordering::Equal
            } else {
                a.0.total_cmp(&b.0)
            };
            by_ball
                .then(a.1.total_cmp(&b.1))
                .then(a.2.x.total_cmp(&b.2.x))
                .then(a.2.y.total_cmp(&b.2.y))
        });

    Ok(match best {
        Some((_, _, p)) => WaitTarget {
            pose: Pose2D::looking_at(p, ball),
            status: TargetStatus::Ok,
        },
        None => WaitTarget {
            pose: self_pose,
            status: TargetStatus::Infeasible,
        },
    })
}

/// Assigns staging targets to several waiting robots in the given order;
/// each robot avoids the targets assigned before it.
pub fn wait_clearout_targets(
    waiters: &[Pose2D],
    ball: Vec2,
    clearer: Pose2D,
    field: &FieldModel,
    params: &WaitClearOutParams,
) -> Result<Vec<WaitTarget>, GeometryError> {
    let mut assigned: Vec<Pose2D> = Vec::with_capacity(waiters.len());
    let mut out = Vec::with_capacity(waiters.len());
    for waiter in waiters {
        let target = wait_clearout_target(*waiter, ball, clearer, &assigned, field, params)?;
        if target.status == TargetStatus::Ok {
            assigned.push(target.pose);
        }
        out.push(target);
    }
    Ok(out)
}
