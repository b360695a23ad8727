use crate::comms::TeamMessage;
use crate::geometry::{normalize_angle, Pose2D, Vec2};
use crate::sim::RobotId;

use super::Task;

/// What the task manager knows about one field player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerView {
    pub id: RobotId,
    pub pose: Pose2D,
    pub ball: Option<Vec2>,
    /// Measured distance when the ball is visible.
    pub ball_distance: Option<f64>,
    pub active: bool,
    pub fallen: bool,
}

impl PlayerView {
    pub fn from_message(msg: &TeamMessage) -> Self {
        Self {
            id: msg.sender,
            pose: msg.robot_pose,
            ball: msg.ball_location,
            ball_distance: msg.ball_distance,
            active: msg.active,
            fallen: msg.fallen,
        }
    }

    pub fn available(&self) -> bool {
        self.active && !self.fallen
    }
}

/// Cost of getting possession: ball distance plus weighted misalignment
/// between the approach direction and the ball-to-goal direction. Infinite
/// for robots that cannot play or do not know where the ball is.
pub fn possession_cost(player: &PlayerView, opponent_goal: Vec2, alignment_weight: f64) -> f64 {
    if !player.available() {
        return f64::INFINITY;
    }
    let Some(ball) = player.ball else {
        return f64::INFINITY;
    };
    let robot = player.pose.position();
    let distance = player.ball_distance.unwrap_or_else(|| robot.distance(ball));
    let approach = ball - robot;
    let shot = opponent_goal - ball;
    let misalignment = match (approach.normalized(), shot.normalized()) {
        (Some(a), Some(s)) => normalize_angle(a.angle() - s.angle()).abs(),
        _ => 0.0,
    };
    distance + alignment_weight * misalignment
}

/// Strictly better position, ties broken by the lower robot id.
pub fn is_better_positioned(
    me: &PlayerView,
    other: &PlayerView,
    opponent_goal: Vec2,
    alignment_weight: f64,
) -> bool {
    let mine = possession_cost(me, opponent_goal, alignment_weight);
    if !mine.is_finite() {
        return false;
    }
    let theirs = possession_cost(other, opponent_goal, alignment_weight);
    mine < theirs || (mine == theirs && me.id < other.id)
}

/// Task a field player would like to hold, given fresh teammate views
/// (field players only, excluding itself).
pub fn desired_task(
    me: &PlayerView,
    teammates: &[PlayerView],
    clearout_active: bool,
    opponent_goal: Vec2,
    alignment_weight: f64,
) -> Task {
    if clearout_active {
        return Task::WaitClearOut;
    }
    let others: Vec<&PlayerView> = teammates
        .iter()
        .filter(|t| t.id != me.id && t.available())
        .collect();
    if others.is_empty() {
        return Task::Attack;
    }
    let best = others
        .iter()
        .all(|o| is_better_positioned(me, o, opponent_goal, alignment_weight));
    if best {
        Task::Attack
    } else {
        Task::Defend
    }
}
