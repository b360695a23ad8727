//! Deterministic discrete-time world.
//!
//! One owner advances [`WorldState`] through [`Kernel::step`]; everything
//! random draws from the world's own seeded generator, so identical
//! `(world, commands, dt)` inputs give bit-identical results.

mod kick;
mod positioning;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimError};
use crate::geometry::{FieldModel, Pose2D, Vec2};

pub use kick::{apply_kick, KickCommand, KickStrength};
pub use positioning::{auto_position_targets, is_legal_kickoff_pose};

pub type RobotId = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    /// Defends the goal at negative x.
    Home,
    /// Defends the goal at positive x.
    Away,
}

impl Team {
    pub fn index(self) -> usize {
        match self {
            Team::Home => 0,
            Team::Away => 1,
        }
    }

    pub fn opponent(self) -> Team {
        match self {
            Team::Home => Team::Away,
            Team::Away => Team::Home,
        }
    }

    /// Maps a pose from this team's frame (own goal at -x) to the field frame.
    pub fn to_field(self, pose: Pose2D) -> Pose2D {
        match self {
            Team::Home => pose,
            Team::Away => Pose2D::new(-pose.x, -pose.y, pose.theta + std::f64::consts::PI),
        }
    }

    pub fn point_to_field(self, p: Vec2) -> Vec2 {
        match self {
            Team::Home => p,
            Team::Away => -p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Goalkeeper,
    FieldPlayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GamePhase {
    Initial,
    Ready,
    Set,
    Playing,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Body-frame velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity {
        vx: 0.0,
        vy: 0.0,
        omega: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    /// Sim steps between behavior/team-play ticks.
    pub controller_period_steps: u32,
    pub v_max: f64,
    pub v_side_max: f64,
    pub omega_max: f64,
    /// Exponential ball speed decay rate in 1/s.
    pub ball_friction: f64,
    pub ball_stop_speed: f64,
    pub kick_reach: f64,
    /// Distance of the kicking foot point ahead of the robot center.
    pub foot_offset: f64,
    pub kick_speed: f64,
    pub dribble_speed: f64,
    pub aim_noise_sigma: f64,
    pub robot_radius: f64,
    pub illegal_defense_limit: f64,
    pub illegal_defense_penalty: f64,
    pub getup_delay: f64,
    /// Spontaneous falls per second of walking.
    pub fall_rate: f64,
    pub dive_duration: f64,
    pub dive_reach: f64,
    pub ready_duration: f64,
    pub set_duration: f64,
    /// Go back to Ready after a goal instead of continuing play.
    pub restart_after_goal: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            controller_period_steps: 6,
            v_max: 0.25,
            v_side_max: 0.15,
            omega_max: 1.0,
            ball_friction: 0.8,
            ball_stop_speed: 0.01,
            kick_reach: 0.3,
            foot_offset: 0.2,
            kick_speed: 2.5,
            dribble_speed: 0.8,
            aim_noise_sigma: 0.0,
            robot_radius: 0.2,
            illegal_defense_limit: 10.0,
            illegal_defense_penalty: 30.0,
            getup_delay: 4.0,
            fall_rate: 0.0,
            dive_duration: 1.0,
            dive_reach: 0.7,
            ready_duration: 10.0,
            set_duration: 2.0,
            restart_after_goal: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("dt", self.dt),
            ("v_max", self.v_max),
            ("v_side_max", self.v_side_max),
            ("omega_max", self.omega_max),
            ("kick_reach", self.kick_reach),
            ("robot_radius", self.robot_radius),
            ("illegal_defense_limit", self.illegal_defense_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid(format!("sim: {name} must be positive")));
            }
        }
        if self.controller_period_steps == 0 {
            return Err(ConfigError::Invalid(
                "sim: controller_period_steps must be at least 1".into(),
            ));
        }
        if self.ball_friction < 0.0 || self.fall_rate < 0.0 || self.aim_noise_sigma < 0.0 {
            return Err(ConfigError::Invalid(
                "sim: friction, fall rate and aim noise must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Largest translation speed a robot can reach.
    pub fn translation_limit(&self) -> f64 {
        self.v_max.hypot(self.v_side_max)
    }

    pub fn clamp_velocity(&self, v: Velocity) -> Velocity {
        let finite = |x: f64| if x.is_finite() { x } else { 0.0 };
        Velocity {
            vx: finite(v.vx).clamp(-self.v_max, self.v_max),
            vy: finite(v.vy).clamp(-self.v_side_max, self.v_side_max),
            omega: finite(v.omega).clamp(-self.omega_max, self.omega_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotBody {
    pub id: RobotId,
    pub team: Team,
    pub role: Role,
    pub true_pose: Pose2D,
    pub velocity_cmd: Velocity,
    pub fallen: bool,
    pub fall_timer: f64,
    pub penalized: bool,
    pub penalty_timer: f64,
    /// Remaining dive time and side while diving.
    pub dive: Option<(Side, f64)>,
}

impl RobotBody {
    pub fn new(id: RobotId, team: Team, role: Role, pose: Pose2D) -> Self {
        Self {
            id,
            team,
            role,
            true_pose: pose,
            velocity_cmd: Velocity::ZERO,
            fallen: false,
            fall_timer: 0.0,
            penalized: false,
            penalty_timer: 0.0,
            dive: None,
        }
    }

    /// Upright, not penalized and not diving.
    pub fn can_move(&self) -> bool {
        !self.fallen && !self.penalized && self.dive.is_none()
    }

    pub fn foot_point(&self, foot_offset: f64) -> Vec2 {
        self.true_pose
            .transform_point(Vec2::new(foot_offset, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BallState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl BallState {
    pub fn at_rest(position: Vec2) -> Self {
        Self {
            position,
            velocity: Vec2::ZERO,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time: f64,
    pub step_count: u64,
    /// Sorted by id.
    pub robots: Vec<RobotBody>,
    pub ball: BallState,
    /// Kicks have no effect while pinned.
    pub ball_pinned: bool,
    pub gc_phase: GamePhase,
    /// Time left in a timed phase (Ready, Set).
    pub phase_timer: f64,
    pub kickoff_team: Team,
    pub illegal_defense_timers: [f64; 2],
    pub double_occupancy: [bool; 2],
    pub score: [u32; 2],
    pub rng: ChaCha8Rng,
}

impl WorldState {
    pub fn new(mut robots: Vec<RobotBody>, ball: Vec2, phase: GamePhase, seed: u64) -> Self {
        robots.sort_by_key(|r| r.id);
        Self {
            time: 0.0,
            step_count: 0,
            robots,
            ball: BallState::at_rest(ball),
            ball_pinned: false,
            gc_phase: phase,
            phase_timer: 0.0,
            kickoff_team: Team::Home,
            illegal_defense_timers: [0.0; 2],
            double_occupancy: [false; 2],
            score: [0; 2],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn robot(&self, id: RobotId) -> Option<&RobotBody> {
        self.robots.iter().find(|r| r.id == id)
    }

    fn robot_index(&self, id: RobotId) -> Result<usize, SimError> {
        self.robots
            .iter()
            .position(|r| r.id == id)
            .ok_or(SimError::InvalidRobot(id))
    }

    /// Robots of `team` that currently occupy their own goal area.
    pub fn goal_area_occupants(&self, team: Team, field: &FieldModel) -> Vec<RobotId> {
        self.robots
            .iter()
            .filter(|r| r.team == team && !r.penalized)
            .filter(|r| {
                let own_frame = team.point_to_field(r.true_pose.position());
                field.in_own_goal_area(own_frame)
            })
            .map(|r| r.id)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Goal { team: Team },
    BallOut { position: Vec2 },
    Kick { robot: RobotId, strength: KickStrength },
    KickMissed { robot: RobotId },
    Dive { robot: RobotId, side: Side },
    Fall { robot: RobotId },
    GetUp { robot: RobotId },
    DoubleOccupancyBegin { team: Team },
    DoubleOccupancyEnd { team: Team, duration: f64 },
    IllegalDefense { team: Team, robot: RobotId, occupied_for: f64 },
    Penalized { robot: RobotId, duration: f64, reason: PenaltyReason },
    Returned { robot: RobotId },
    PhaseChange { phase: GamePhase },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyReason {
    IllegalDefense,
    Scripted,
}

/// Command for one robot; the velocity is held until the next command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotCommand {
    pub robot: RobotId,
    pub velocity: Velocity,
    pub kick: Option<KickCommand>,
    pub dive: Option<Side>,
}

impl RobotCommand {
    pub fn walk(robot: RobotId, velocity: Velocity) -> Self {
        Self {
            robot,
            velocity,
            kick: None,
            dive: None,
        }
    }
}

/// Margin outside the field lines robots may walk in.
const FIELD_BORDER: f64 = 0.7;

pub struct Kernel {
    pub field: FieldModel,
    pub config: SimConfig,
}

impl Kernel {
    pub fn new(field: FieldModel, config: SimConfig) -> Self {
        Self { field, config }
    }

    /// Advances the world by `dt`. Robots without a command keep their
    /// previous velocity command.
    pub fn step(
        &self,
        world: &WorldState,
        commands: &[RobotCommand],
        dt: f64,
    ) -> Result<(WorldState, Vec<Event>), SimError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::InvalidStep(dt));
        }
        let mut seen = Vec::with_capacity(commands.len());
        for cmd in commands {
            if world.robot(cmd.robot).is_none() || seen.contains(&cmd.robot) {
                return Err(SimError::InvalidCommand(cmd.robot));
            }
            seen.push(cmd.robot);
        }

        let mut next = world.clone();
        let mut events = Vec::new();
        self.apply_commands(&mut next, commands, &mut events);
        self.move_robots(&mut next, dt, &mut events);
        self.move_ball(&mut next, dt, &mut events);
        self.update_timers(&mut next, dt, &mut events);
        self.update_illegal_defense(&mut next, dt, &mut events);
        self.update_phase(&mut next, dt, &mut events);
        next.step_count += 1;
        next.time = next.step_count as f64 * dt;
        Ok((next, events))
    }

    fn apply_commands(&self, world: &mut WorldState, commands: &[RobotCommand], events: &mut Vec<Event>) {
        for cmd in commands {
            let idx = world.robot_index(cmd.robot).expect("validated");
            if !world.robots[idx].can_move() {
                world.robots[idx].velocity_cmd = Velocity::ZERO;
                continue;
            }
            if world.gc_phase != GamePhase::Playing && world.gc_phase != GamePhase::Ready {
                world.robots[idx].velocity_cmd = Velocity::ZERO;
                continue;
            }
            world.robots[idx].velocity_cmd = self.config.clamp_velocity(cmd.velocity);
            if world.gc_phase != GamePhase::Playing {
                continue;
            }
            if let Some(side) = cmd.dive {
                let robot = &mut world.robots[idx];
                robot.dive = Some((side, self.config.dive_duration));
                robot.velocity_cmd = Velocity::ZERO;
                events.push(Event::Dive { robot: cmd.robot, side });
                continue;
            }
            if let Some(kick) = cmd.kick {
                let kicker = world.robots[idx].clone();
                if world.ball_pinned {
                    events.push(Event::KickMissed { robot: cmd.robot });
                    continue;
                }
                match apply_kick(&world.ball, &kicker.true_pose, kick, &self.config, &mut world.rng) {
                    Ok(ball) => {
                        world.ball = ball;
                        events.push(Event::Kick {
                            robot: cmd.robot,
                            strength: kick.strength,
                        });
                    }
                    Err(_) => events.push(Event::KickMissed { robot: cmd.robot }),
                }
            }
        }
    }

    fn move_robots(&self, world: &mut WorldState, dt: f64, events: &mut Vec<Event>) {
        let hl = self.field.half_length() + FIELD_BORDER;
        let hw = self.field.half_width() + FIELD_BORDER;
        for robot in world.robots.iter_mut() {
            if !robot.can_move() {
                robot.velocity_cmd = Velocity::ZERO;
                continue;
            }
            let v = robot.velocity_cmd;
            let moving = v.vx != 0.0 || v.vy != 0.0 || v.omega != 0.0;
            let p = robot.true_pose.compose(v.vx * dt, v.vy * dt, v.omega * dt);
            robot.true_pose = Pose2D::new(p.x.clamp(-hl, hl), p.y.clamp(-hw, hw), p.theta);
            if moving && self.config.fall_rate > 0.0 {
                let p_fall = self.config.fall_rate * dt;
                if world.rng.random::<f64>() < p_fall {
                    robot.fallen = true;
                    robot.fall_timer = self.config.getup_delay;
                    robot.velocity_cmd = Velocity::ZERO;
                    events.push(Event::Fall { robot: robot.id });
                }
            }
        }
    }

    fn move_ball(&self, world: &mut WorldState, dt: f64, events: &mut Vec<Event>) {
        if world.ball_pinned {
            world.ball.velocity = Vec2::ZERO;
            return;
        }
        let ball = world.ball;
        if ball.velocity == Vec2::ZERO {
            return;
        }
        let start = ball.position;
        let end = start + ball.velocity * dt;
        // Upright robots stop a ball rolling into them.
        for robot in &world.robots {
            if robot.penalized || robot.fallen {
                continue;
            }
            let center = robot.true_pose.position();
            if ball.velocity.dot(center - start) <= 0.0 {
                continue;
            }
            let blocker_end = match robot.dive {
                Some((side, _)) => {
                    let lateral = match side {
                        Side::Left => 1.0,
                        Side::Right => -1.0,
                    };
                    robot
                        .true_pose
                        .transform_point(Vec2::new(0.0, lateral * self.config.dive_reach))
                }
                None => center,
            };
            if segment_distance(start, end, center, blocker_end) < self.config.robot_radius {
                world.ball.velocity = Vec2::ZERO;
                return;
            }
        }

        let mut position = end;
        let mut velocity = ball.velocity * (-self.config.ball_friction * dt).exp();
        if velocity.norm() < self.config.ball_stop_speed {
            velocity = Vec2::ZERO;
        }
        let hl = self.field.half_length();
        let hw = self.field.half_width();
        if position.x.abs() > hl || position.y.abs() > hw {
            let exit = exit_point(start, position, hl, hw);
            if position.x.abs() > hl && exit.y.abs() <= self.field.goal_width / 2.0 && exit.x.abs() >= hl - 1e-9 {
                let team = if position.x > 0.0 { Team::Home } else { Team::Away };
                world.score[team.index()] += 1;
                events.push(Event::Goal { team });
                position = Vec2::ZERO;
                velocity = Vec2::ZERO;
                if self.config.restart_after_goal && world.gc_phase == GamePhase::Playing {
                    world.gc_phase = GamePhase::Ready;
                    world.phase_timer = self.config.ready_duration;
                    world.kickoff_team = team.opponent();
                    events.push(Event::PhaseChange {
                        phase: GamePhase::Ready,
                    });
                }
            } else {
                position = exit;
                velocity = Vec2::ZERO;
                events.push(Event::BallOut { position });
            }
        }
        world.ball = BallState { position, velocity };
    }

    fn update_timers(&self, world: &mut WorldState, dt: f64, events: &mut Vec<Event>) {
        let hl = self.field.half_length();
        let hw = self.field.half_width();
        for robot in world.robots.iter_mut() {
            if robot.fallen {
                robot.fall_timer -= dt;
                if robot.fall_timer <= 1e-9 {
                    robot.fallen = false;
                    robot.fall_timer = 0.0;
                    events.push(Event::GetUp { robot: robot.id });
                }
            }
            if let Some((side, left)) = robot.dive {
                let left = left - dt;
                if left <= 1e-9 {
                    robot.dive = None;
                } else {
                    robot.dive = Some((side, left));
                }
            }
            if robot.penalized {
                robot.penalty_timer -= dt;
                if robot.penalty_timer <= 1e-9 {
                    robot.penalized = false;
                    robot.penalty_timer = 0.0;
                    robot.fallen = false;
                    robot.dive = None;
                    let y_sign = if robot.id % 2 == 0 { 1.0 } else { -1.0 };
                    let local = Pose2D::new(-hl / 2.0, y_sign * hw, -y_sign * std::f64::consts::FRAC_PI_2);
                    robot.true_pose = robot.team.to_field(local);
                    events.push(Event::Returned { robot: robot.id });
                }
            }
        }
    }

    fn update_illegal_defense(&self, world: &mut WorldState, dt: f64, events: &mut Vec<Event>) {
        for team in [Team::Home, Team::Away] {
            let t = team.index();
            let occupants = if world.gc_phase == GamePhase::Playing {
                world.goal_area_occupants(team, &self.field)
            } else {
                Vec::new()
            };
            if occupants.len() >= 2 {
                if !world.double_occupancy[t] {
                    world.double_occupancy[t] = true;
                    events.push(Event::DoubleOccupancyBegin { team });
                }
                world.illegal_defense_timers[t] += dt;
                if world.illegal_defense_timers[t] > self.config.illegal_defense_limit + 1e-9 {
                    let occupied_for = world.illegal_defense_timers[t];
                    let offender = occupants
                        .iter()
                        .rev()
                        .copied()
                        .find(|id| world.robot(*id).is_some_and(|r| r.role == Role::FieldPlayer))
                        .unwrap_or(*occupants.last().expect("non-empty"));
                    events.push(Event::IllegalDefense {
                        team,
                        robot: offender,
                        occupied_for,
                    });
                    let duration = self.config.illegal_defense_penalty;
                    penalize_robot(world, offender, duration);
                    events.push(Event::Penalized {
                        robot: offender,
                        duration,
                        reason: PenaltyReason::IllegalDefense,
                    });
                    world.illegal_defense_timers[t] = 0.0;
                    world.double_occupancy[t] = false;
                    events.push(Event::DoubleOccupancyEnd {
                        team,
                        duration: occupied_for,
                    });
                }
            } else {
                if world.double_occupancy[t] {
                    events.push(Event::DoubleOccupancyEnd {
                        team,
                        duration: world.illegal_defense_timers[t],
                    });
                }
                world.double_occupancy[t] = false;
                world.illegal_defense_timers[t] = 0.0;
            }
        }
    }

    fn update_phase(&self, world: &mut WorldState, dt: f64, events: &mut Vec<Event>) {
        let next = match world.gc_phase {
            GamePhase::Ready | GamePhase::Set => {
                world.phase_timer -= dt;
                if world.phase_timer > 1e-9 {
                    return;
                }
                if world.gc_phase == GamePhase::Ready {
                    world.phase_timer = self.config.set_duration;
                    GamePhase::Set
                } else {
                    world.phase_timer = 0.0;
                    GamePhase::Playing
                }
            }
            _ => return,
        };
        world.gc_phase = next;
        events.push(Event::PhaseChange { phase: next });
    }

    /// Switches the game controller phase, starting its timer.
    pub fn set_phase(&self, world: &mut WorldState, phase: GamePhase) {
        world.gc_phase = phase;
        world.phase_timer = match phase {
            GamePhase::Ready => self.config.ready_duration,
            GamePhase::Set => self.config.set_duration,
            _ => 0.0,
        };
    }

    /// Knocks a robot over for `duration` seconds.
    pub fn inject_fall(
        &self,
        world: &mut WorldState,
        robot: RobotId,
        duration: f64,
    ) -> Result<Event, SimError> {
        let idx = world.robot_index(robot)?;
        let body = &mut world.robots[idx];
        if body.fallen || body.penalized || !(duration > 0.0) {
            return Err(SimError::InvalidRobot(robot));
        }
        body.fallen = true;
        body.fall_timer = duration;
        body.velocity_cmd = Velocity::ZERO;
        body.dive = None;
        Ok(Event::Fall { robot })
    }

    /// Removes a robot from play for `duration` seconds.
    pub fn penalize(
        &self,
        world: &mut WorldState,
        robot: RobotId,
        duration: f64,
    ) -> Result<Event, SimError> {
        let idx = world.robot_index(robot)?;
        if world.robots[idx].penalized || !(duration > 0.0) {
            return Err(SimError::InvalidRobot(robot));
        }
        penalize_robot(world, robot, duration);
        Ok(Event::Penalized {
            robot,
            duration,
            reason: PenaltyReason::Scripted,
        })
    }
}

fn penalize_robot(world: &mut WorldState, robot: RobotId, duration: f64) {
    if let Some(body) = world.robots.iter_mut().find(|r| r.id == robot) {
        body.penalized = true;
        body.penalty_timer = duration;
        body.velocity_cmd = Velocity::ZERO;
        body.fallen = false;
        body.fall_timer = 0.0;
        body.dive = None;
    }
}

fn segment_distance(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> f64 {
    use crate::geometry::distance_to_segment;
    let crosses = {
        let r = a1 - a0;
        let s = b1 - b0;
        let denom = r.cross(s);
        if denom.abs() < 1e-15 {
            false
        } else {
            let t = (b0 - a0).cross(s) / denom;
            let u = (b0 - a0).cross(r) / denom;
            (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)
        }
    };
    if crosses {
        return 0.0;
    }
    distance_to_segment(a0, b0, b1)
        .min(distance_to_segment(a1, b0, b1))
        .min(distance_to_segment(b0, a0, a1))
        .min(distance_to_segment(b1, a0, a1))
}

/// Where the ball path `start`-`end` first leaves the field rectangle.
fn exit_point(start: Vec2, end: Vec2, hl: f64, hw: f64) -> Vec2 {
    let d = end - start;
    let mut t: f64 = 1.0;
    if end.x.abs() > hl && d.x != 0.0 {
        let bound = hl * end.x.signum();
        t = t.min((bound - start.x) / d.x);
    }
    if end.y.abs() > hw && d.y != 0.0 {
        let bound = hw * end.y.signum();
        t = t.min((bound - start.y) / d.y);
    }
    let p = start + d * t.clamp(0.0, 1.0);
    Vec2::new(p.x.clamp(-hl, hl), p.y.clamp(-hw, hw))
}
