use serde::{Deserialize, Serialize};

use crate::geometry::{classify_ball_region, presence_line_clear, FieldModel, Pose2D, Region, Vec2};
use crate::sim::Side;

use super::TeamplayParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClearOutDecision {
    ClearOut,
    HoldLaterally,
    PassiveGaze,
}

/// Goalkeeper decision from the ball region and the field players' positions.
/// Without any ball estimate the keeper stays on its line.
pub fn clearout_decision(
    ball: Option<Vec2>,
    field_players: &[Vec2],
    field: &FieldModel,
) -> ClearOutDecision {
    let Some(ball) = ball else {
        return ClearOutDecision::HoldLaterally;
    };
    match classify_ball_region(ball, field) {
        Region::Region1 => ClearOutDecision::ClearOut,
        Region::Region2 if presence_line_clear(field_players, field) => ClearOutDecision::ClearOut,
        Region::Region2 => ClearOutDecision::HoldLaterally,
        Region::Region3 => ClearOutDecision::PassiveGaze,
    }
}

/// Dive direction for a ball about to cross the own goal line out of the
/// keeper's reach. Everything is in the team frame (own goal at -x).
pub fn dive_signal(
    ball: Vec2,
    ball_velocity: Vec2,
    goalie: Pose2D,
    field: &FieldModel,
    params: &TeamplayParams,
    reach: f64,
) -> Option<Side> {
    let goal_x = -field.half_length();
    let toward_goal = -ball_velocity.x;
    if toward_goal < params.dive_speed_threshold || ball.x <= goal_x {
        return None;
    }
    let time_to_line = (ball.x - goal_x) / toward_goal;
    if time_to_line > params.dive_horizon {
        return None;
    }
    let y_cross = ball.y + ball_velocity.y * time_to_line;
    if y_cross.abs() > field.goal_width / 2.0 + 0.2 {
        return None;
    }
    if (y_cross - goalie.y).abs() <= reach {
        return None;
    }
    let local = goalie.inverse_transform_point(Vec2::new(goal_x, y_cross));
    Some(if local.y >= 0.0 { Side::Left } else { Side::Right })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_decisions() {
        let f = FieldModel::default();
        assert_eq!(
            clearout_decision(Some(Vec2::new(-4.2, 0.5)), &[Vec2::new(-3.0, 0.0)], &f),
            ClearOutDecision::ClearOut
        );
        assert_eq!(
            clearout_decision(Some(Vec2::new(-2.5, 1.0)), &[Vec2::new(-3.0, 0.0)], &f),
            ClearOutDecision::HoldLaterally
        );
        assert_eq!(
            clearout_decision(Some(Vec2::new(-2.5, 1.0)), &[Vec2::new(-1.0, 0.0)], &f),
            ClearOutDecision::ClearOut
        );
        assert_eq!(
            clearout_decision(Some(Vec2::new(0.0, 0.0)), &[], &f),
            ClearOutDecision::PassiveGaze
        );
        assert_eq!(clearout_decision(None, &[], &f), ClearOutDecision::HoldLaterally);
    }

    #[test]
    fn dive_toward_crossing_side() {
        let f = FieldModel::default();
        let p = TeamplayParams::default();
        let goalie = Pose2D::new(-4.25, 0.0, 0.0);
        // Crossing at y = 0.6 after 1 s.
        let side = dive_signal(Vec2::new(-2.5, 0.0), Vec2::new(-2.0, 0.6), goalie, &f, &p, 0.2);
        assert_eq!(side, Some(Side::Left));
        let side = dive_signal(Vec2::new(-2.5, 0.0), Vec2::new(-2.0, -0.6), goalie, &f, &p, 0.2);
        assert_eq!(side, Some(Side::Right));
    }

    #[test]
    fn no_dive_for_slow_reachable_or_wide_balls() {
        let f = FieldModel::default();
        let p = TeamplayParams::default();
        let goalie = Pose2D::new(-4.25, 0.0, 0.0);
        assert_eq!(dive_signal(Vec2::new(-3.5, 0.0), Vec2::new(-0.5, 0.3), goalie, &f, &p, 0.2), None);
        assert_eq!(dive_signal(Vec2::new(-2.5, 0.0), Vec2::new(-2.0, 0.1), goalie, &f, &p, 0.2), None);
        assert_eq!(dive_signal(Vec2::new(-2.5, 0.0), Vec2::new(-2.0, 2.0), goalie, &f, &p, 0.2), None);
        assert_eq!(dive_signal(Vec2::new(1.0, 0.0), Vec2::new(-2.0, 0.5), goalie, &f, &p, 0.2), None);
        assert_eq!(dive_signal(Vec2::new(-2.5, 0.0), Vec2::new(2.0, 0.5), goalie, &f, &p, 0.2), None);
    }
}
