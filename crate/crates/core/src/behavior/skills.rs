use serde::{Deserialize, Serialize};

use crate::geometry::{
    distance_to_segment, normalize_angle, surround_path, Disc, FieldModel, PlannedPath, Pose2D,
    Vec2,
};
use crate::sim::{SimConfig, Velocity};

use super::BehaviorParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionLimits {
    pub v_max: f64,
    pub v_side_max: f64,
    pub omega_max: f64,
}

impl From<&SimConfig> for MotionLimits {
    fn from(c: &SimConfig) -> Self {
        Self {
            v_max: c.v_max,
            v_side_max: c.v_side_max,
            omega_max: c.omega_max,
        }
    }
}

/// Beyond this distance the robot turns toward its direction of travel.
const FACE_TRAVEL_DISTANCE: f64 = 0.6;
const POSITION_GAIN: f64 = 1.5;
const HEADING_GAIN: f64 = 2.0;
const ARRIVED_DISTANCE: f64 = 0.03;
const ARRIVED_HEADING: f64 = 0.05;

/// Omnidirectional walk toward `waypoint`, ending in the heading of `target`.
pub fn drive_to(pose: Pose2D, waypoint: Vec2, target: Pose2D, limits: &MotionLimits) -> Velocity {
    let local = pose.inverse_transform_point(waypoint);
    let to_target = pose.position().distance(target.position());
    let heading_goal = if to_target > FACE_TRAVEL_DISTANCE && local.norm() > 1e-9 {
        pose.theta + local.angle()
    } else {
        target.theta
    };
    let heading_error = normalize_angle(heading_goal - pose.theta);
    if to_target < ARRIVED_DISTANCE && normalize_angle(target.theta - pose.theta).abs() < ARRIVED_HEADING {
        return Velocity::ZERO;
    }
    let omega = (HEADING_GAIN * heading_error).clamp(-limits.omega_max, limits.omega_max);
    let dist = local.norm();
    if dist < 1e-9 {
        return Velocity { vx: 0.0, vy: 0.0, omega };
    }
    let speed = POSITION_GAIN * dist;
    let v = local * (speed / dist);
    let scale = [
        1.0,
        limits.v_max / v.x.abs().max(1e-12),
        limits.v_side_max / v.y.abs().max(1e-12),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    Velocity {
        vx: v.x * scale,
        vy: v.y * scale,
        omega,
    }
}

/// Spin in place at the rotation limit.
pub fn turn_in_place(limits: &MotionLimits) -> Velocity {
    Velocity {
        vx: 0.0,
        vy: 0.0,
        omega: limits.omega_max,
    }
}

/// Pose behind the ball, looking along the ball-to-target direction.
pub fn approach_ball_target(
    ball: Vec2,
    kick_target: Vec2,
    field: &FieldModel,
    params: &BehaviorParams,
) -> Pose2D {
    let dir = (kick_target - ball)
        .normalized()
        .or_else(|| (field.opponent_goal_center() - ball).normalized())
        .unwrap_or(Vec2::new(1.0, 0.0));
    Pose2D::at(ball - dir * params.standoff, dir.angle())
}

/// Path to the behind-ball pose that treats the ball and all other robots as
/// obstacles.
pub fn approach_path(
    pose: Pose2D,
    ball: Vec2,
    kick_target: Vec2,
    obstacles: &[Vec2],
    field: &FieldModel,
    params: &BehaviorParams,
) -> PlannedPath {
    let target = approach_ball_target(ball, kick_target, field, params);
    let mut discs = vec![Disc::new(ball, params.ball_avoid_radius)];
    discs.extend(obstacles.iter().map(|&o| Disc::new(o, params.obstacle_radius)));
    surround_path(pose.position(), target.position(), &discs)
}

/// Point on the opponent goal line the ball should be shot at: the open
/// point closest to the goal center, where a point is open when no obstacle
/// lies within `obstacle_radius` of the shot segment.
pub fn kick_aim_point(ball: Vec2, obstacles: &[Vec2], field: &FieldModel, params: &BehaviorParams) -> Vec2 {
    let goal_x = field.half_length();
    let usable = (field.goal_width / 2.0 - params.post_margin).max(0.0);
    let steps = (usable / 0.05).floor() as i32;
    let mut candidates: Vec<f64> = (-steps..=steps).map(|k| k as f64 * 0.05).collect();
    candidates.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    candidates
        .into_iter()
        .map(|y| Vec2::new(goal_x, y))
        .find(|&p| {
            obstacles
                .iter()
                .all(|&o| distance_to_segment(o, ball, p) > params.obstacle_radius)
        })
        .unwrap_or(field.opponent_goal_center())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KickDecision {
    Kick,
    Dribble,
}

/// Kick when facing the aim point closely enough and the corridor ahead of
/// the ball is free, dribble otherwise.
pub fn decide_kick_or_dribble(
    pose: Pose2D,
    ball: Vec2,
    aim: Vec2,
    obstacles: &[Vec2],
    params: &BehaviorParams,
) -> KickDecision {
    let shot = aim - ball;
    let dir = shot.normalized().unwrap_or(Vec2::from_polar(1.0, pose.theta));
    let aligned = normalize_angle(pose.theta - dir.angle()).abs() <= params.kick_align_tol;
    let corridor_end = ball + dir * params.corridor_check_length;
    let blocked = obstacles
        .iter()
        .any(|&o| distance_to_segment(o, ball, corridor_end) < params.corridor_halfwidth);
    if aligned && !blocked {
        KickDecision::Kick
    } else {
        KickDecision::Dribble
    }
}

/// Keeper's lateral hold pose: on its line, level with the ball within the
/// goal mouth, looking at the ball.
pub fn goalie_hold_target(ball: Option<Vec2>, field: &FieldModel, params: &BehaviorParams) -> Pose2D {
    let x = -field.half_length() + params.goal_line_offset;
    let half = field.goal_width / 2.0;
    match ball {
        Some(b) => {
            let p = Vec2::new(x, b.y.clamp(-half, half));
            let theta = (b - p).normalized().map_or(0.0, Vec2::angle);
            Pose2D::at(p, theta)
        }
        None => Pose2D::new(x, 0.0, 0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchTarget {
    LastSeen,
    NearMark,
    FarMark,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum SearchStep {
    GoTo(SearchTarget, Vec2),
    Turn,
}

/// Progress through the ball search sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchMemory {
    steps: Vec<SearchStep>,
    index: usize,
    /// Index the sequence wraps back to.
    loop_start: usize,
    turned: f64,
    last_heading: Option<f64>,
}

impl SearchMemory {
    /// Plans the search: last-seen point if known, a full turn, then the
    /// nearer and the farther penalty mark with a turn at each.
    pub fn start(pose: Pose2D, last_seen: Option<Vec2>, field: &FieldModel) -> Self {
        let [a, b] = field.penalty_marks();
        let here = pose.position();
        let (near, far) = if here.distance(b) < here.distance(a) { (b, a) } else { (a, b) };
        let mut steps = Vec::new();
        if let Some(p) = last_seen {
            steps.push(SearchStep::GoTo(SearchTarget::LastSeen, p));
        }
        let loop_start = steps.len();
        steps.extend([
            SearchStep::Turn,
            SearchStep::GoTo(SearchTarget::NearMark, near),
            SearchStep::Turn,
            SearchStep::GoTo(SearchTarget::FarMark, far),
            SearchStep::Turn,
        ]);
        Self {
            steps,
            index: 0,
            loop_start,
            turned: 0.0,
            last_heading: None,
        }
    }

    pub fn current_target(&self) -> Option<(SearchTarget, Vec2)> {
        match self.steps[self.index] {
            SearchStep::GoTo(t, p) => Some((t, p)),
            SearchStep::Turn => None,
        }
    }

    fn advance(&mut self) {
        self.index += 1;
        if self.index >= self.steps.len() {
            self.index = self.loop_start;
        }
        self.turned = 0.0;
        self.last_heading = None;
    }
}

/// Reach radius for search waypoints.
const SEARCH_REACHED: f64 = 0.15;

/// One search tick. Returns the motion and the waypoint reached this tick.
pub fn search_ball_step(
    pose: Pose2D,
    memory: &mut SearchMemory,
    limits: &MotionLimits,
) -> (Velocity, Option<SearchTarget>) {
    match memory.steps[memory.index] {
        SearchStep::GoTo(target, p) => {
            if pose.position().distance(p) <= SEARCH_REACHED {
                memory.advance();
                (turn_in_place(limits), Some(target))
            } else {
                let goal = Pose2D::at(p, (p - pose.position()).angle());
                (drive_to(pose, p, goal, limits), None)
            }
        }
        SearchStep::Turn => {
            if let Some(last) = memory.last_heading {
                memory.turned += normalize_angle(pose.theta - last).abs();
            }
            memory.last_heading = Some(pose.theta);
            if memory.turned >= std::f64::consts::TAU {
                memory.advance();
            }
            (turn_in_place(limits), None)
        }
    }
}
