//! Two-layer robot control: a game layer choosing a posture from the game
//! phase and the assigned task, and a skill layer producing motion, kick and
//! dive commands. All positions are in the team frame.

mod skills;

use serde::{Deserialize, Serialize};

use crate::comms::TeamMessage;
use crate::error::ConfigError;
use crate::geometry::{
    classify_ball_region, defender_target_pose, surround_path, wait_clearout_targets,
    DefenderParams, Disc, FieldModel, Pose2D, Region, TargetStatus, Vec2, WaitClearOutParams,
};
use crate::sim::{
    auto_position_targets, GamePhase, KickCommand, KickStrength, RobotId, Role, Side, SimConfig,
    Team, Velocity,
};
use crate::teamplay::Task;

pub use skills::{
    approach_ball_target, approach_path, decide_kick_or_dribble, drive_to, goalie_hold_target,
    kick_aim_point, search_ball_step, turn_in_place, KickDecision, MotionLimits, SearchMemory,
    SearchTarget,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorParams {
    /// Distance kept behind the ball before kicking.
    pub standoff: f64,
    pub ball_avoid_radius: f64,
    pub kick_align_tol: f64,
    pub corridor_check_length: f64,
    pub corridor_halfwidth: f64,
    /// Clearance kept from other robots, robot radius included.
    pub obstacle_radius: f64,
    /// Aim this far inside the goal posts.
    pub post_margin: f64,
    /// Keeper distance in front of its goal line.
    pub goal_line_offset: f64,
    pub defender: DefenderParams,
    pub wait_clearout: WaitClearOutParams,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            standoff: 0.4,
            ball_avoid_radius: 0.3,
            kick_align_tol: 0.2,
            corridor_check_length: 2.0,
            corridor_halfwidth: 0.3,
            obstacle_radius: 0.4,
            post_margin: 0.15,
            goal_line_offset: 0.25,
            defender: DefenderParams::default(),
            wait_clearout: WaitClearOutParams::default(),
        }
    }
}

impl BehaviorParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            self.standoff,
            self.ball_avoid_radius,
            self.kick_align_tol,
            self.corridor_check_length,
            self.corridor_halfwidth,
            self.obstacle_radius,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(ConfigError::Invalid(
                "behavior: distances and tolerances must be positive".into(),
            ));
        }
        if self.ball_avoid_radius >= self.standoff {
            return Err(ConfigError::Invalid(
                "behavior: ball_avoid_radius must be smaller than standoff".into(),
            ));
        }
        self.defender.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameState {
    DefaultBallHandling,
    Positioning,
    DefendPosture,
    KeepGoalPosture,
    WaitClearOutPosture,
    Stopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BehaviorState {
    SearchBall,
    GoToBall,
    Dribble,
    Kick,
    GoToPose,
    TrackBallLaterally,
    Dive,
    Idle,
}

/// What a robot believes at one controller tick.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefSnapshot {
    pub now: f64,
    pub phase: GamePhase,
    pub task: Task,
    pub pose: Pose2D,
    pub ball_visible: bool,
    /// Own or teammate-reported ball position.
    pub ball_est: Option<Vec2>,
    pub ball_velocity: Option<Vec2>,
    pub ball_last_seen: Option<(Vec2, f64)>,
    /// Other robots, both teams.
    pub obstacles: Vec<Vec2>,
    pub inbox: Vec<TeamMessage>,
    pub kickoff: bool,
    /// Keeper only: a clear-out is on.
    pub clearout_signal: bool,
    pub dive_signal: Option<Side>,
}

/// Game layer transition. Total over (phase, task); ChangeTask keeps the
/// previous playing posture.
pub fn game_fsm_step(phase: GamePhase, task: Task, previous: GameState) -> GameState {
    match phase {
        GamePhase::Ready => GameState::Positioning,
        GamePhase::Initial | GamePhase::Set | GamePhase::Finished => GameState::Stopped,
        GamePhase::Playing => match task {
            Task::Attack => GameState::DefaultBallHandling,
            Task::Defend => GameState::DefendPosture,
            Task::KeepGoal => GameState::KeepGoalPosture,
            Task::WaitClearOut => GameState::WaitClearOutPosture,
            Task::ChangeTask => match previous {
                GameState::DefaultBallHandling
                | GameState::DefendPosture
                | GameState::WaitClearOutPosture => previous,
                _ => GameState::DefendPosture,
            },
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "log", rename_all = "snake_case")]
pub enum BehaviorLog {
    GameState { from: GameState, to: GameState },
    Behavior { from: BehaviorState, to: BehaviorState },
    SearchReached { target: SearchTarget },
    WaitInfeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerOutput {
    pub velocity: Velocity,
    /// Team-frame direction.
    pub kick: Option<KickCommand>,
    pub dive: Option<Side>,
    pub game_state: GameState,
    pub behavior: BehaviorState,
    pub log: Vec<BehaviorLog>,
}

/// Per-robot controller holding the memory of both layers.
pub struct RobotController {
    id: RobotId,
    role: Role,
    roster: Vec<(RobotId, Role)>,
    field: FieldModel,
    params: BehaviorParams,
    limits: MotionLimits,
    foot_offset: f64,
    kick_reach: f64,
    game_state: GameState,
    behavior: BehaviorState,
    search: Option<SearchMemory>,
}

impl RobotController {
    pub fn new(
        id: RobotId,
        roster: &[(RobotId, Role)],
        field: &FieldModel,
        params: BehaviorParams,
        sim: &SimConfig,
    ) -> Self {
        let role = roster
            .iter()
            .find(|(r, _)| *r == id)
            .map_or(Role::FieldPlayer, |(_, role)| *role);
        Self {
            id,
            role,
            roster: roster.to_vec(),
            field: field.clone(),
            params,
            limits: MotionLimits::from(sim),
            foot_offset: sim.foot_offset,
            kick_reach: sim.kick_reach,
            game_state: GameState::Stopped,
            behavior: BehaviorState::Idle,
            search: None,
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn game_state(&self) -> GameState {
        self.game_state
    }

    pub fn behavior(&self) -> BehaviorState {
        self.behavior
    }

    pub fn step(&mut self, belief: &BeliefSnapshot) -> ControllerOutput {
        let mut log = Vec::new();
        let next = game_fsm_step(belief.phase, belief.task, self.game_state);
        if next != self.game_state {
            log.push(BehaviorLog::GameState {
                from: self.game_state,
                to: next,
            });
            self.game_state = next;
        }
        if belief.ball_visible || next != GameState::DefaultBallHandling {
            self.search = None;
        }
        let (velocity, kick, dive, behavior) = match next {
            GameState::Stopped => (Velocity::ZERO, None, None, BehaviorState::Idle),
            GameState::Positioning => {
                let v = self.positioning(belief);
                (v, None, None, BehaviorState::GoToPose)
            }
            GameState::DefaultBallHandling => self.ball_handling(belief, &mut log),
            GameState::DefendPosture => {
                let (v, b) = self.defend(belief);
                (v, None, None, b)
            }
            GameState::KeepGoalPosture => self.keep_goal(belief),
            GameState::WaitClearOutPosture => {
                let (v, b) = self.wait_clearout(belief, &mut log);
                (v, None, None, b)
            }
        };
        if behavior != self.behavior {
            log.push(BehaviorLog::Behavior {
                from: self.behavior,
                to: behavior,
            });
            self.behavior = behavior;
        }
        ControllerOutput {
            velocity,
            kick,
            dive,
            game_state: next,
            behavior,
            log,
        }
    }

    fn go_to(&self, belief: &BeliefSnapshot, target: Pose2D, avoid: &[Disc]) -> Velocity {
        let here = belief.pose.position();
        if here.distance(target.position()) < 1e-9 {
            return drive_to(belief.pose, target.position(), target, &self.limits);
        }
        let path = surround_path(here, target.position(), avoid);
        let goal = if path.truncated {
            Pose2D::at(path.end(), target.theta)
        } else {
            target
        };
        drive_to(belief.pose, path.next_waypoint(), goal, &self.limits)
    }

    fn teammate_discs(&self, belief: &BeliefSnapshot) -> Vec<Disc> {
        belief
            .inbox
            .iter()
            .filter(|m| m.sender != self.id && m.active)
            .map(|m| Disc::new(m.robot_pose.position(), self.params.obstacle_radius))
            .collect()
    }

    fn positioning(&self, belief: &BeliefSnapshot) -> Velocity {
        let targets = auto_position_targets(Team::Home, &self.roster, &self.field, belief.kickoff);
        let Some((_, target)) = targets.into_iter().find(|(id, _)| *id == self.id) else {
            return Velocity::ZERO;
        };
        let discs = self.teammate_discs(belief);
        self.go_to(belief, target, &discs)
    }

    fn in_kick_reach(&self, pose: Pose2D, ball: Vec2, direction: f64) -> bool {
        let foot = pose.transform_point(Vec2::new(self.foot_offset, 0.0));
        let facing = crate::geometry::normalize_angle(pose.theta - direction).abs();
        foot.distance(ball) <= self.kick_reach * 0.8 && facing <= 2.0 * self.params.kick_align_tol
    }

    fn ball_handling(
        &mut self,
        belief: &BeliefSnapshot,
        log: &mut Vec<BehaviorLog>,
    ) -> (Velocity, Option<KickCommand>, Option<Side>, BehaviorState) {
        let Some(ball) = belief.ball_est else {
            let memory = self.search.get_or_insert_with(|| {
                SearchMemory::start(
                    belief.pose,
                    belief.ball_last_seen.map(|(p, _)| p),
                    &self.field,
                )
            });
            let (v, reached) = search_ball_step(belief.pose, memory, &self.limits);
            if let Some(target) = reached {
                log.push(BehaviorLog::SearchReached { target });
            }
            return (v, None, None, BehaviorState::SearchBall);
        };
        let aim = kick_aim_point(ball, &belief.obstacles, &self.field, &self.params);
        let direction = (aim - ball).angle();
        if self.in_kick_reach(belief.pose, ball, direction) {
            let decision = decide_kick_or_dribble(belief.pose, ball, aim, &belief.obstacles, &self.params);
            return match decision {
                KickDecision::Kick => (
                    Velocity::ZERO,
                    Some(KickCommand {
                        direction,
                        strength: KickStrength::Kick,
                    }),
                    None,
                    BehaviorState::Kick,
                ),
                KickDecision::Dribble => (
                    Velocity {
                        vx: self.limits.v_max,
                        vy: 0.0,
                        omega: 0.0,
                    },
                    Some(KickCommand {
                        direction: belief.pose.theta,
                        strength: KickStrength::Dribble,
                    }),
                    None,
                    BehaviorState::Dribble,
                ),
            };
        }
        let target = approach_ball_target(ball, aim, &self.field, &self.params);
        let path = approach_path(belief.pose, ball, aim, &belief.obstacles, &self.field, &self.params);
        let v = drive_to(belief.pose, path.next_waypoint(), target, &self.limits);
        (v, None, None, BehaviorState::GoToBall)
    }

    fn striker_pose(&self, belief: &BeliefSnapshot) -> Option<Pose2D> {
        belief
            .inbox
            .iter()
            .find(|m| m.base_task == Task::Attack && m.active)
            .map(|m| m.robot_pose)
    }

    fn defend(&self, belief: &BeliefSnapshot) -> (Velocity, BehaviorState) {
        let striker = self.striker_pose(belief);
        let Some(target) =
            defender_target_pose(belief.ball_est, striker, &self.field, &self.params.defender)
        else {
            return (turn_in_place(&self.limits), BehaviorState::Idle);
        };
        let discs = self.teammate_discs(belief);
        (self.go_to(belief, target, &discs), BehaviorState::GoToPose)
    }

    fn keep_goal(
        &self,
        belief: &BeliefSnapshot,
    ) -> (Velocity, Option<KickCommand>, Option<Side>, BehaviorState) {
        if let Some(side) = belief.dive_signal {
            return (Velocity::ZERO, None, Some(side), BehaviorState::Dive);
        }
        if let (true, Some(ball)) = (belief.clearout_signal, belief.ball_est) {
            let aim = self.field.opponent_goal_center();
            let direction = (aim - ball).angle();
            if self.in_kick_reach(belief.pose, ball, direction) {
                let kick = KickCommand {
                    direction,
                    strength: KickStrength::Kick,
                };
                return (Velocity::ZERO, Some(kick), None, BehaviorState::Kick);
            }
            let target = approach_ball_target(ball, aim, &self.field, &self.params);
            let path = approach_path(belief.pose, ball, aim, &belief.obstacles, &self.field, &self.params);
            let v = drive_to(belief.pose, path.next_waypoint(), target, &self.limits);
            return (v, None, None, BehaviorState::GoToBall);
        }
        let target = goalie_hold_target(belief.ball_est, &self.field, &self.params);
        let v = drive_to(belief.pose, target.position(), target, &self.limits);
        (v, None, None, BehaviorState::TrackBallLaterally)
    }

    fn wait_clearout(&self, belief: &BeliefSnapshot, log: &mut Vec<BehaviorLog>) -> (Velocity, BehaviorState) {
        let Some(ball) = belief
            .ball_est
            .filter(|b| classify_ball_region(*b, &self.field) != Region::Region3)
        else {
            return self.defend(belief);
        };
        let clearer = belief
            .inbox
            .iter()
            .find(|m| m.task == Task::KeepGoal)
            .map(|m| m.robot_pose)
            .unwrap_or_else(|| goalie_hold_target(Some(ball), &self.field, &self.params));
        let mut waiters: Vec<(RobotId, Pose2D)> = belief
            .inbox
            .iter()
            .filter(|m| m.task == Task::WaitClearOut && m.sender != self.id)
            .map(|m| (m.sender, m.robot_pose))
            .collect();
        waiters.push((self.id, belief.pose));
        waiters.sort_by_key(|(id, _)| *id);
        let poses: Vec<Pose2D> = waiters.iter().map(|(_, p)| *p).collect();
        let mine = waiters.iter().position(|(id, _)| *id == self.id).unwrap_or(0);
        let Ok(targets) =
            wait_clearout_targets(&poses, ball, clearer, &self.field, &self.params.wait_clearout)
        else {
            return self.defend(belief);
        };
        let target = targets[mine];
        if target.status == TargetStatus::Infeasible {
            log.push(BehaviorLog::WaitInfeasible);
            return (Velocity::ZERO, BehaviorState::Idle);
        }
        let mut discs = self.teammate_discs(belief);
        discs.push(Disc::new(ball, self.params.ball_avoid_radius));
        (self.go_to(belief, target.pose, &discs), BehaviorState::GoToPose)
    }
}
