use std::f64::consts::PI;

use proptest::prelude::*;

use soccer_coord::comms::{Bus, BusConfig, TeamMessage};
use soccer_coord::geometry::{
    classify_ball_region, defender_target_pose, normalize_angle, DefenderParams, FieldModel, Pose2D, Vec2,
};
use soccer_coord::sim::{GamePhase, RobotId, Role};
use soccer_coord::teamplay::{
    ManagerContext, PlayerView, Task, TaskManager, TeamplayParams, TickInput, Vote, VoteBuffer,
};

fn field_point() -> impl Strategy<Value = Vec2> {
    (-4.5f64..=4.5, -3.0f64..=3.0).prop_map(|(x, y)| Vec2::new(x, y))
}

fn status(m: &TaskManager, pose: Pose2D, t: f64) -> TeamMessage {
    TeamMessage {
        sender: m.id(),
        send_time: t,
        task: m.task(),
        base_task: m.base_task(),
        ball_distance: None,
        ball_visible: false,
        ball_possession: false,
        ball_location: Some(Vec2::new(0.0, 0.0)),
        robot_pose: pose,
        active: m.is_active(),
        fallen: false,
        clearing_out: m.clearing_out(),
        negotiation: None,
    }
}

proptest! {
    #[test]
    fn normalized_angles_in_range(a in -100.0f64..100.0) {
        let n = normalize_angle(a);
        prop_assert!(n > -PI && n <= PI);
        prop_assert!((n.sin() - a.sin()).abs() < 1e-9 && (n.cos() - a.cos()).abs() < 1e-9);
        prop_assert_eq!(normalize_angle(n), n);
    }

    #[test]
    fn transform_round_trip(x in -5.0f64..5.0, y in -5.0f64..5.0, th in -PI..PI, p in field_point()) {
        let pose = Pose2D::new(x, y, th);
        let back = pose.transform_point(pose.inverse_transform_point(p));
        prop_assert!(back.distance(p) < 1e-9);
    }

    #[test]
    fn defender_target_bounds_and_facing(ball in field_point()) {
        let field = FieldModel::default();
        let params = DefenderParams::default();
        let goal = Vec2::new(-field.length / 2.0, 0.0);
        let target = defender_target_pose(Some(ball), None, &field, &params).unwrap();
        let d = target.position().distance(goal);
        prop_assert!(d >= params.magnitude_min - 1e-9);
        prop_assert!(d <= params.magnitude_min.max(ball.distance(goal) - params.teammate_separation) + 1e-9);
        // On the segment from the goal toward the ball.
        let along = (ball - goal).cross(target.position() - goal);
        prop_assert!(along.abs() < 1e-9);
        let mirrored = defender_target_pose(Some(Vec2::new(ball.x, -ball.y)), None, &field, &params).unwrap();
        prop_assert_eq!(mirrored, Pose2D::new(target.x, -target.y, -target.theta));
    }

    #[test]
    fn regions_are_mirror_symmetric(ball in field_point()) {
        let field = FieldModel::default();
        prop_assert_eq!(
            classify_ball_region(ball, &field),
            classify_ball_region(Vec2::new(ball.x, -ball.y), &field)
        );
    }

    #[test]
    fn vote_needs_a_full_streak(decisions in prop::collection::vec(0u8..3, 1..60), n in 1usize..6) {
        let mut buf = VoteBuffer::new(n);
        for (i, d) in decisions.iter().enumerate() {
            let confirmed = buf.push(*d);
            let start = i + 1 - n.min(i + 1);
            let streak = i + 1 >= n && decisions[start..=i].iter().all(|x| x == d);
            prop_assert_eq!(confirmed == Vote::Confirmed(*d), streak);
        }
    }

    #[test]
    fn inbox_never_holds_stale_messages(
        loss in 0.0f64..0.9,
        sends in prop::collection::vec((1u8..4, 0.0f64..0.8), 1..120),
        seed in any::<u64>(),
    ) {
        let config = BusConfig { loss_probability: loss, ..BusConfig::default() };
        let horizon = config.staleness_horizon;
        let mut bus = Bus::new(config, &[1, 2, 3], seed);
        let mut now = 0.0;
        for (sender, gap) in sends {
            now += gap;
            let mut msg = status(&TaskManager::new(sender, &roster(), ctx(), 0.0), Pose2D::default(), now);
            msg.sender = sender;
            bus.send_event(msg, now).unwrap();
            bus.advance(now);
            for r in 1..4u8 {
                for m in bus.inbox(r, now + 1.0) {
                    prop_assert!(now + 1.0 - m.send_time <= horizon + 1e-9);
                    prop_assert_ne!(m.sender, r);
                }
            }
        }
    }

    /// Repeated exchanges under arbitrary per-message loss never produce two
    /// base Attack tasks at once.
    #[test]
    fn striker_unique_under_random_loss(
        drops in prop::collection::vec(any::<bool>(), 400),
        xs in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 10),
    ) {
        let mut a = TaskManager::new(2, &roster(), ctx(), 0.0);
        let mut b = TaskManager::new(3, &roster(), ctx(), 0.0);
        let (mut to_a, mut to_b): (Vec<TeamMessage>, Vec<TeamMessage>) = (Vec::new(), Vec::new());
        let (mut inbox_a, mut inbox_b): (Vec<TeamMessage>, Vec<TeamMessage>) = (Vec::new(), Vec::new());
        let mut drop = drops.into_iter().cycle();
        for k in 0..200 {
            let now = k as f64 * 0.125;
            let (xa, xb) = xs[k / 20];
            let (pa, pb) = (Pose2D::new(xa, 0.5, 0.0), Pose2D::new(xb, -0.5, 0.0));
            let neg_a = std::mem::take(&mut to_a);
            let neg_b = std::mem::take(&mut to_b);
            let out_a = a.tick(&input(now, view(2, pa), &inbox_a, &neg_a));
            let out_b = b.tick(&input(now, view(3, pb), &inbox_b, &neg_b));
            for p in out_a.outgoing {
                if !drop.next().unwrap() {
                    let mut m = status(&a, pa, now);
                    m.negotiation = Some(p);
                    to_b.push(m);
                }
            }
            for p in out_b.outgoing {
                if !drop.next().unwrap() {
                    let mut m = status(&b, pb, now);
                    m.negotiation = Some(p);
                    to_a.push(m);
                }
            }
            if !drop.next().unwrap() {
                inbox_b = vec![status(&a, pa, now)];
            }
            if !drop.next().unwrap() {
                inbox_a = vec![status(&b, pb, now)];
            }
            prop_assert!(!(a.base_task() == Task::Attack && b.base_task() == Task::Attack), "cycle {}", k);
            prop_assert!(!(a.task() == Task::Attack && b.task() == Task::Attack), "cycle {}", k);
        }
    }
}

fn roster() -> Vec<(RobotId, Role)> {
    vec![(1, Role::Goalkeeper), (2, Role::FieldPlayer), (3, Role::FieldPlayer)]
}

fn ctx() -> ManagerContext {
    ManagerContext {
        params: TeamplayParams::default(),
        field: FieldModel::default(),
        staleness_horizon: 5.0,
        keeper_reach: 0.2,
    }
}

fn view(id: RobotId, pose: Pose2D) -> PlayerView {
    PlayerView {
        id,
        pose,
        ball: Some(Vec2::new(0.0, 0.0)),
        ball_distance: None,
        active: true,
        fallen: false,
    }
}

fn input<'a>(now: f64, me: PlayerView, inbox: &'a [TeamMessage], neg: &'a [TeamMessage]) -> TickInput<'a> {
    TickInput {
        now,
        phase: GamePhase::Playing,
        me,
        ball_velocity: None,
        inbox,
        negotiation: neg,
        kicked: false,
    }
}
