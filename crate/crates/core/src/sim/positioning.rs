use super::{RobotId, Role, Team};
use crate::geometry::{FieldModel, Pose2D, Vec2};

/// Distance of the goalkeeper from its goal line.
const GOAL_LINE_OFFSET: f64 = 0.25;
/// Gap kept outside the center circle by the non-kickoff team.
const CIRCLE_GAP: f64 = 0.25;

/// Kickoff poses for one team in the field frame, assigned by robot id.
///
/// The goalkeeper stands in front of its goal line. Field players take, in id
/// order, a central slot (at the center circle for the kickoff team, outside
/// it otherwise) followed by two defensive slots.
pub fn auto_position_targets(
    team: Team,
    roster: &[(RobotId, Role)],
    field: &FieldModel,
    kickoff: bool,
) -> Vec<(RobotId, Pose2D)> {
    let hl = field.half_length();
    let r = field.center_circle_radius;
    let central_x = if kickoff { -r } else { -(r + CIRCLE_GAP) };
    let slots = [
        Vec2::new(central_x, 0.0),
        Vec2::new(-hl / 2.0 - 0.25, -field.goal_area_width / 2.0 + 0.5),
        Vec2::new(-hl / 2.0 - 0.25, field.goal_area_width / 2.0 - 0.5),
    ];
    let mut sorted = roster.to_vec();
    sorted.sort_by_key(|(id, _)| *id);
    let mut next_slot = 0;
    let mut out = Vec::with_capacity(sorted.len());
    for (id, role) in sorted {
        let local = match role {
            Role::Goalkeeper => Pose2D::new(-hl + GOAL_LINE_OFFSET, 0.0, 0.0),
            Role::FieldPlayer => {
                let slot = slots[next_slot.min(slots.len() - 1)];
                next_slot += 1;
                Pose2D::at(slot, 0.0)
            }
        };
        out.push((id, team.to_field(local)));
    }
    out
}

/// Kickoff legality in the team frame (own goal at -x): in the own half, and
/// outside the center circle unless the team has the kickoff.
pub fn is_legal_kickoff_pose(pose: Pose2D, kickoff: bool, field: &FieldModel) -> bool {
    let p = pose.position();
    if !field.contains(p) || p.x > 0.0 {
        return false;
    }
    kickoff || p.norm() >= field.center_circle_radius
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster3() -> Vec<(RobotId, Role)> {
        vec![(3, Role::FieldPlayer), (1, Role::Goalkeeper), (2, Role::FieldPlayer)]
    }

    #[test]
    fn own_kickoff_formation() {
        let f = FieldModel::default();
        let targets = auto_position_targets(Team::Home, &roster3(), &f, true);
        assert_eq!(targets.iter().map(|t| t.0).collect::<Vec<_>>(), vec![1, 2, 3]);
        let goalie = targets[0].1;
        assert!((goalie.x - (-4.25)).abs() < 1e-12);
        let striker = targets[1].1;
        assert!((striker.position().norm() - f.center_circle_radius).abs() < 1e-12);
        assert!(targets[2].1.x < -2.0);
        for (_, pose) in &targets {
            assert!(is_legal_kickoff_pose(*pose, true, &f));
        }
    }

    #[test]
    fn opponent_kickoff_outside_circle() {
        let f = FieldModel::default();
        for (_, pose) in auto_position_targets(Team::Home, &roster3(), &f, false) {
            assert!(pose.x <= -f.center_circle_radius);
            assert!(is_legal_kickoff_pose(pose, false, &f));
        }
    }

    #[test]
    fn single_robot_team() {
        let f = FieldModel::default();
        let t = auto_position_targets(Team::Home, &[(4, Role::FieldPlayer)], &f, false);
        assert_eq!(t.len(), 1);
        assert!(is_legal_kickoff_pose(t[0].1, false, &f));
    }

    #[test]
    fn away_team_is_mirrored() {
        let f = FieldModel::default();
        let t = auto_position_targets(Team::Away, &roster3(), &f, false);
        for (_, pose) in t {
            assert!(pose.x >= f.center_circle_radius);
        }
    }
}
