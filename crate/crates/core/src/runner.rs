//! Deterministic scenario execution.
//!
//! Each simulation step applies due faults, runs the home robots' task
//! managers and controllers on controller ticks, sends periodic status
//! broadcasts, and advances the kernel. Opponents follow a fixed script.
//! Every record goes through the online [`Checker`] before reaching the sink.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{
    approach_ball_target, approach_path, drive_to, BeliefSnapshot, MotionLimits, RobotController,
};
use crate::checker::{Checker, Violation};
use crate::comms::{Bus, LinkLoss, SendReport, TeamMessage};
use crate::error::{CommsError, SimError};
use crate::geometry::{normalize_angle, Pose2D, Vec2};
use crate::localization::{
    init_hypotheses, observe, odometry_between, Hypothesis, LocalizationMode, Localizer,
};
use crate::scenario::{Fault, Scenario, Script};
use crate::sim::{
    auto_position_targets, BallState, Event, GamePhase, KickCommand, KickStrength, Kernel,
    RobotBody, RobotCommand, RobotId, Role, Team, Velocity, WorldState,
};
use crate::teamplay::{
    initial_tasks, ManagerContext, NegotiationKind, PlayerView, Task, TaskManager, TeamplayLog,
    TickInput,
};
use crate::trace::{
    GoalieTick, InboxEntry, MessageKind, RecordBody, RobotTick, RosterEntry, SendCause,
    TraceHeader, TraceRecord, TraceSink, SCHEMA,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("simulation error: {0}")]
    Sim(#[from] SimError),
    #[error("bus error: {0}")]
    Comms(#[from] CommsError),
    #[error("cannot write trace: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NegotiationStats {
    pub requests: u64,
    pub accepts: u64,
    pub rejects: u64,
    pub confirms: u64,
    pub timeouts: u64,
    pub ignored: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MessageStats {
    pub sent: u64,
    pub deliveries: u64,
    pub drops: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LocalizationStats {
    pub samples: u64,
    pub mean_error: f64,
    pub median_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub seed: u64,
    pub duration: f64,
    pub steps: u64,
    /// Home, away.
    pub goals: [u32; 2],
    pub task_changes: u64,
    pub negotiation: NegotiationStats,
    pub messages: MessageStats,
    pub illegal_defense: u64,
    pub falls: u64,
    pub penalties: u64,
    pub violations: BTreeMap<String, u64>,
    pub localization: Option<LocalizationStats>,
}

impl Metrics {
    pub fn violation_count(&self) -> u64 {
        self.violations.values().sum()
    }
}

/// Perception state of one home robot.
struct Percept {
    localizer: Option<Localizer>,
    last_true: Pose2D,
    belief: Pose2D,
    /// Own ball estimate of the current tick, when visible.
    ball_seen: Option<Vec2>,
    ball_est: Option<Vec2>,
    ball_last_seen: Option<(Vec2, f64)>,
}

/// Teammate ball reports older than this are ignored for fusion.
const SHARED_BALL_MAX_AGE: f64 = 2.0;
/// Own last sighting kept as estimate for this long.
const LAST_SEEN_MAX_AGE: f64 = 2.0;
/// A start pose this close to a legal placement uses the four-placement bank.
const PLACEMENT_MATCH: f64 = 0.5;

pub struct Simulation {
    scenario: Scenario,
    kernel: Kernel,
    world: WorldState,
    bus: Bus,
    header: TraceHeader,
    home: Vec<RobotId>,
    away: Vec<(RobotId, Script)>,
    away_roster: Vec<(RobotId, Role)>,
    managers: BTreeMap<RobotId, TaskManager>,
    controllers: BTreeMap<RobotId, RobotController>,
    percepts: BTreeMap<RobotId, Percept>,
    sense_rng: ChaCha8Rng,
    faults: Vec<Fault>,
    next_fault: usize,
    /// Negotiation messages waiting for the sender's next beat.
    held: Vec<(TeamMessage, Task)>,
    goalie_kicked: bool,
    total_steps: u64,
    checker: Checker,
    seq: u64,
    metrics: Metrics,
    violations: Vec<Violation>,
    loc_errors: Vec<f64>,
}

fn seed_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).map_or(0.0, |n| n.sample(rng))
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Self {
        let sc = scenario.clone();
        let kernel = Kernel::new(sc.field.clone(), sc.sim.clone());
        let bodies: Vec<RobotBody> = sc
            .robots
            .iter()
            .map(|r| RobotBody::new(r.id, r.team, r.role, r.pose()))
            .collect();
        let mut world = WorldState::new(bodies, sc.ball(), sc.start_phase(), sc.seed);
        world.kickoff_team = sc.kickoff;
        world.ball_pinned = sc.ball_pinned;
        kernel.set_phase(&mut world, sc.start_phase());

        let home_roster = sc.roster(Team::Home);
        let home: Vec<RobotId> = home_roster.iter().map(|(id, _)| *id).collect();
        let away_roster = sc.roster(Team::Away);
        let away = sc
            .robots
            .iter()
            .filter(|r| r.team == Team::Away)
            .map(|r| (r.id, r.script.unwrap_or_default()))
            .collect::<BTreeMap<_, _>>()
            .into_iter()
            .collect();
        let bus = Bus::new(sc.bus.clone(), &home, sc.seed ^ 0x9e37_79b9_7f4a_7c15);

        let ctx = ManagerContext {
            params: sc.teamplay.clone(),
            field: sc.field.clone(),
            staleness_horizon: sc.bus.staleness_horizon,
            keeper_reach: sc.sim.robot_radius,
        };
        let mut managers = BTreeMap::new();
        let mut controllers = BTreeMap::new();
        let mut percepts = BTreeMap::new();
        let placements = init_hypotheses(&sc.field);
        for spec in sc.robots.iter().filter(|r| r.team == Team::Home) {
            managers.insert(spec.id, TaskManager::new(spec.id, &home_roster, ctx.clone(), 0.0));
            controllers.insert(
                spec.id,
                RobotController::new(spec.id, &home_roster, &sc.field, sc.behavior.clone(), &sc.sim),
            );
            let pose = spec.pose();
            let localizer = (sc.localization.mode == LocalizationMode::Simulated).then(|| {
                let at_placement = placements.iter().any(|h| {
                    h.pose.position().distance(pose.position()) < PLACEMENT_MATCH
                        && normalize_angle(h.pose.theta - pose.theta).abs() < PLACEMENT_MATCH
                });
                if at_placement {
                    Localizer::new(&sc.field, sc.localization.clone())
                } else {
                    let known = Hypothesis {
                        pose,
                        weight: 1.0,
                        age: 0,
                    };
                    Localizer::with_hypotheses(&sc.field, sc.localization.clone(), vec![known])
                }
            });
            percepts.insert(
                spec.id,
                Percept {
                    localizer,
                    last_true: pose,
                    belief: pose,
                    ball_seen: None,
                    ball_est: None,
                    ball_last_seen: None,
                },
            );
        }

        let tasks = initial_tasks(&home_roster);
        let mut roster_entries: Vec<RosterEntry> = sc
            .robots
            .iter()
            .map(|r| RosterEntry {
                id: r.id,
                team: r.team,
                role: r.role,
                task: tasks.get(&r.id).copied().filter(|_| r.team == Team::Home),
            })
            .collect();
        roster_entries.sort_by_key(|r| r.id);
        let header = TraceHeader {
            schema: SCHEMA.to_string(),
            seed: sc.seed,
            dt: sc.sim.dt,
            duration: sc.duration,
            teamplay: sc.teamplay.enabled,
            staleness_horizon: sc.bus.staleness_horizon,
            illegal_defense_limit: sc.sim.illegal_defense_limit,
            field: sc.field.clone(),
            robots: roster_entries,
        };
        let mut faults = sc.faults.clone();
        faults.sort_by(|a, b| a.at().total_cmp(&b.at()));
        let total_steps = (sc.duration / sc.sim.dt).round() as u64;
        let metrics = Metrics {
            seed: sc.seed,
            duration: sc.duration,
            ..Metrics::default()
        };
        Self {
            checker: Checker::new(&header),
            sense_rng: seed_stream(sc.seed, 2),
            kernel,
            world,
            bus,
            header,
            home,
            away,
            away_roster,
            managers,
            controllers,
            percepts,
            faults,
            next_fault: 0,
            held: Vec::new(),
            goalie_kicked: false,
            total_steps,
            seq: 0,
            metrics,
            violations: Vec::new(),
            loc_errors: Vec::new(),
            scenario: sc,
        }
    }

    pub fn header(&self) -> &TraceHeader {
        &self.header
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    pub fn manager(&self, id: RobotId) -> Option<&TaskManager> {
        self.managers.get(&id)
    }

    pub fn belief(&self, id: RobotId) -> Option<Pose2D> {
        self.percepts.get(&id).map(|p| p.belief)
    }

    pub fn localizer(&self, id: RobotId) -> Option<&Localizer> {
        self.percepts.get(&id).and_then(|p| p.localizer.as_ref())
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn is_finished(&self) -> bool {
        self.world.step_count >= self.total_steps
    }

    /// Runs to the scenario duration and returns the summary.
    pub fn run(mut self, sink: &mut dyn TraceSink) -> Result<Metrics, RunError> {
        while self.step(sink)? {}
        Ok(self.finish())
    }

    /// Final summary; localization statistics cover every home robot tick.
    pub fn finish(mut self) -> Metrics {
        self.metrics.steps = self.world.step_count;
        self.metrics.goals = self.world.score;
        if !self.loc_errors.is_empty() {
            let mut e = std::mem::take(&mut self.loc_errors);
            e.sort_by(f64::total_cmp);
            let n = e.len();
            let median = if n % 2 == 1 {
                e[n / 2]
            } else {
                0.5 * (e[n / 2 - 1] + e[n / 2])
            };
            self.metrics.localization = Some(LocalizationStats {
                samples: n as u64,
                mean_error: e.iter().sum::<f64>() / n as f64,
                median_error: median,
                max_error: e[n - 1],
            });
        }
        self.metrics
    }

    fn emit(&mut self, t: f64, body: RecordBody, sink: &mut dyn TraceSink) -> Result<(), RunError> {
        let rec = TraceRecord {
            seq: self.seq,
            t,
            body,
        };
        self.seq += 1;
        self.account(&rec.body);
        let found = self.checker.observe(&rec);
        sink.record(&rec)?;
        for v in found {
            *self
                .metrics
                .violations
                .entry(format!("{:?}", v.invariant))
                .or_insert(0) += 1;
            let rec = TraceRecord {
                seq: self.seq,
                t,
                body: v.body(),
            };
            self.seq += 1;
            sink.record(&rec)?;
            self.violations.push(v);
        }
        Ok(())
    }

    fn account(&mut self, body: &RecordBody) {
        let m = &mut self.metrics;
        match body {
            RecordBody::TaskChange { .. } => m.task_changes += 1,
            RecordBody::Teamplay { log, .. } => match log {
                TeamplayLog::NegotiationSent { kind, .. } => match kind {
                    NegotiationKind::Request => m.negotiation.requests += 1,
                    NegotiationKind::Accept => m.negotiation.accepts += 1,
                    NegotiationKind::Reject => m.negotiation.rejects += 1,
                    NegotiationKind::Confirm => m.negotiation.confirms += 1,
                },
                TeamplayLog::NegotiationTimeout { .. } => m.negotiation.timeouts += 1,
                TeamplayLog::NegotiationIgnored { .. } => m.negotiation.ignored += 1,
                _ => {}
            },
            RecordBody::Message {
                delivered, dropped, ..
            } => {
                m.messages.sent += 1;
                m.messages.deliveries += delivered.len() as u64;
                m.messages.drops += dropped.len() as u64;
            }
            RecordBody::Event(ev) => match ev {
                Event::IllegalDefense { .. } => m.illegal_defense += 1,
                Event::Fall { .. } => m.falls += 1,
                Event::Penalized { .. } => m.penalties += 1,
                _ => {}
            },
            _ => {}
        }
    }

    /// Advances one simulation step. Returns false once the duration is reached.
    pub fn step(&mut self, sink: &mut dyn TraceSink) -> Result<bool, RunError> {
        if self.is_finished() {
            return Ok(false);
        }
        let now = self.world.time;
        self.apply_faults(now, sink)?;

        let period = u64::from(self.scenario.sim.controller_period_steps);
        let commands = if self.world.step_count % period == 0 {
            self.control_tick(now, sink)?
        } else {
            Vec::new()
        };

        for id in self.home.clone() {
            if !self.bus.beat_due(id, now) {
                continue;
            }
            let held: Vec<(TeamMessage, Task)>;
            (held, self.held) = std::mem::take(&mut self.held)
                .into_iter()
                .partition(|(m, _)| m.sender == id);
            for (msg, task) in held {
                let kind = msg.negotiation.map(|p| (p.kind, p.to, p.nonce));
                let report = self.bus.send_event(msg, now)?;
                if let Some((kind, to, nonce)) = kind {
                    self.emit_message(now, id, kind.into(), SendCause::Negotiation, task, Some((to, nonce)), report, sink)?;
                }
            }
            let status = self.status(id, now);
            let task = status.base_task;
            let report = self.bus.broadcast(status, now)?;
            self.emit_message(now, id, MessageKind::Status, SendCause::Beat, task, None, report, sink)?;
        }

        let dt = self.scenario.sim.dt;
        let (next, events) = self.kernel.step(&self.world, &commands, dt)?;
        self.world = next;
        let t = self.world.time;
        self.handle_events(t, events, sink)?;
        self.bus.advance(t);
        Ok(true)
    }

    #[allow(clippy::too_many_arguments)]
    fn emit_message(
        &mut self,
        t: f64,
        from: RobotId,
        msg: MessageKind,
        cause: SendCause,
        sender_task: Task,
        negotiation: Option<(RobotId, u32)>,
        report: SendReport,
        sink: &mut dyn TraceSink,
    ) -> Result<(), RunError> {
        self.emit(
            t,
            RecordBody::Message {
                from,
                msg,
                cause,
                sender_task,
                to: negotiation.map(|n| n.0),
                nonce: negotiation.map(|n| n.1),
                delivered: report.scheduled,
                dropped: report.dropped,
            },
            sink,
        )
    }

    /// Applies every due fault before handling the events they cause, so a
    /// link loss scheduled at the same instant already covers those sends.
    fn apply_faults(&mut self, now: f64, sink: &mut dyn TraceSink) -> Result<(), RunError> {
        let mut events = Vec::new();
        while let Some(fault) = self.faults.get(self.next_fault).cloned() {
            if fault.at() > now + 1e-9 {
                break;
            }
            self.next_fault += 1;
            self.emit(now, RecordBody::Fault { fault: fault.clone() }, sink)?;
            let event = match fault {
                Fault::Fall { robot, duration, .. } => {
                    self.kernel.inject_fall(&mut self.world, robot, duration).ok()
                }
                Fault::Penalize { robot, duration, .. } => {
                    self.kernel.penalize(&mut self.world, robot, duration).ok()
                }
                Fault::PlaceBall {
                    position,
                    velocity,
                    pinned,
                    ..
                } => {
                    self.world.ball = BallState {
                        position: Vec2::new(position[0], position[1]),
                        velocity: Vec2::new(velocity[0], velocity[1]),
                    };
                    self.world.ball_pinned = pinned;
                    None
                }
                Fault::LinkLoss {
                    from,
                    to,
                    probability,
                    ..
                } => {
                    self.bus.config_mut().link_loss.push(LinkLoss {
                        from,
                        to,
                        probability,
                    });
                    None
                }
            };
            events.extend(event);
        }
        self.handle_events(now, events, sink)
    }

    fn handle_events(&mut self, t: f64, events: Vec<Event>, sink: &mut dyn TraceSink) -> Result<(), RunError> {
        for ev in events {
            self.emit(t, RecordBody::Event(ev.clone()), sink)?;
            match ev {
                Event::Penalized { robot, .. } if self.managers.contains_key(&robot) => {
                    let log = self.managers.get_mut(&robot).expect("home").on_egress(t);
                    self.emit_teamplay(t, robot, log, sink)?;
                    self.announce(t, robot, SendCause::Egress, sink)?;
                }
                Event::Returned { robot } if self.managers.contains_key(&robot) => {
                    let log = self.managers.get_mut(&robot).expect("home").on_return(t);
                    self.emit_teamplay(t, robot, log, sink)?;
                    let pose = self.world.robot(robot).expect("robot").true_pose;
                    if let Some(p) = self.percepts.get_mut(&robot) {
                        // Back on the touch line: a legal placement again.
                        if p.localizer.is_some() {
                            p.localizer = Some(Localizer::new(&self.scenario.field, self.scenario.localization.clone()));
                        }
                        p.last_true = pose;
                        p.ball_last_seen = None;
                    }
                    self.announce(t, robot, SendCause::Return, sink)?;
                }
                Event::Kick {
                    robot,
                    strength: KickStrength::Kick,
                } if self.managers.get(&robot).is_some_and(|m| m.role() == Role::Goalkeeper) => {
                    self.goalie_kicked = true;
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Immediate out-of-beat status send.
    fn announce(&mut self, t: f64, robot: RobotId, cause: SendCause, sink: &mut dyn TraceSink) -> Result<(), RunError> {
        let status = self.status(robot, t);
        let task = status.base_task;
        let report = self.bus.send_event(status, t)?;
        self.emit_message(t, robot, MessageKind::Status, cause, task, None, report, sink)
    }

    fn emit_teamplay(&mut self, t: f64, robot: RobotId, log: Vec<TeamplayLog>, sink: &mut dyn TraceSink) -> Result<(), RunError> {
        for entry in log {
            let body = match entry {
                TeamplayLog::TaskChange {
                    from,
                    to,
                    base_from,
                    base_to,
                    cause,
                } => RecordBody::TaskChange {
                    robot,
                    from,
                    to,
                    base_from,
                    base_to,
                    cause,
                },
                log => RecordBody::Teamplay { robot, log },
            };
            self.emit(t, body, sink)?;
        }
        Ok(())
    }

    fn status(&self, id: RobotId, now: f64) -> TeamMessage {
        let body = self.world.robot(id).expect("home robot");
        let manager = &self.managers[&id];
        let percept = &self.percepts[&id];
        let seen = percept.ball_seen.filter(|_| !body.penalized);
        let foot = percept
            .belief
            .transform_point(Vec2::new(self.scenario.sim.foot_offset, 0.0));
        TeamMessage {
            sender: id,
            send_time: now,
            task: manager.task(),
            base_task: manager.base_task(),
            ball_distance: seen.map(|b| percept.belief.position().distance(b)),
            ball_visible: seen.is_some(),
            ball_possession: seen.is_some_and(|b| foot.distance(b) <= self.scenario.sim.kick_reach),
            ball_location: seen,
            robot_pose: percept.belief,
            active: !body.penalized,
            fallen: body.fallen,
            clearing_out: manager.clearing_out(),
            negotiation: None,
        }
    }

    fn perceive(&mut self, id: RobotId, now: f64) {
        let Some(body) = self.world.robot(id) else { return };
        let truth = body.true_pose;
        let blind = body.penalized || body.fallen;
        let sc = &self.scenario;
        let params = &sc.localization;
        let tick_dt = sc.sim.dt * f64::from(sc.sim.controller_period_steps);
        let rng = &mut self.sense_rng;
        let p = self.percepts.get_mut(&id).expect("home robot");
        p.belief = match p.localizer.as_mut() {
            None => truth,
            Some(loc) => {
                let odo = odometry_between(p.last_true, truth, tick_dt, params, rng);
                let obs = if blind {
                    Vec::new()
                } else {
                    observe(truth, loc.map(), params, 1.0, rng)
                };
                loc.step(&odo, &obs)
            }
        };
        p.last_true = truth;
        if p.localizer.is_some() && !body.penalized {
            self.loc_errors.push(p.belief.position().distance(truth.position()));
        }

        let local = truth.inverse_transform_point(self.world.ball.position);
        let (range, bearing) = (local.norm(), local.angle());
        let visible = !blind && range <= params.ball_range && bearing.abs() <= params.field_of_view;
        p.ball_seen = visible.then(|| {
            let (range, bearing) = match p.localizer {
                None => (range, bearing),
                Some(_) => (
                    (range + gaussian(rng, params.ball_sigma_range * range)).max(0.0),
                    bearing + gaussian(rng, params.ball_sigma_bearing),
                ),
            };
            p.belief.transform_point(Vec2::from_polar(range, bearing))
        });
        if let Some(b) = p.ball_seen {
            p.ball_last_seen = Some((b, now));
        }
    }

    fn fuse_ball(&mut self, id: RobotId, inbox: &[TeamMessage], now: f64) {
        let p = self.percepts.get_mut(&id).expect("home robot");
        let shared = inbox
            .iter()
            .filter(|m| m.ball_visible && now - m.send_time <= SHARED_BALL_MAX_AGE)
            .max_by(|a, b| a.send_time.total_cmp(&b.send_time).then(b.sender.cmp(&a.sender)))
            .and_then(|m| m.ball_location);
        let remembered = p
            .ball_last_seen
            .filter(|(_, t)| now - t <= LAST_SEEN_MAX_AGE)
            .map(|(b, _)| b);
        p.ball_est = p.ball_seen.or(shared).or(remembered);
    }

    fn obstacles(&self, id: RobotId) -> Vec<Vec2> {
        let Some(me) = self.world.robot(id) else { return Vec::new() };
        let range = self.scenario.localization.sensor_range;
        self.world
            .robots
            .iter()
            .filter(|r| r.id != id && !r.penalized)
            .map(|r| r.true_pose.position())
            .filter(|p| p.distance(me.true_pose.position()) <= range)
            .collect()
    }

    fn control_tick(&mut self, now: f64, sink: &mut dyn TraceSink) -> Result<Vec<RobotCommand>, RunError> {
        let phase = self.world.gc_phase;
        let home = self.home.clone();
        for &id in &home {
            self.perceive(id, now);
        }
        // Snapshot every inbox before any robot acts.
        let mut negotiations = BTreeMap::new();
        for &id in &home {
            negotiations.insert(id, self.bus.drain_negotiation(id, now));
        }
        let inboxes: BTreeMap<RobotId, Vec<TeamMessage>> =
            home.iter().map(|&id| (id, self.bus.inbox(id, now))).collect();

        let mut outputs = Vec::with_capacity(home.len());
        let mut robots_tick = Vec::with_capacity(self.world.robots.len());
        let mut goalie = None;
        for &id in &home {
            let inbox = &inboxes[&id];
            self.fuse_ball(id, inbox, now);
            let body = self.world.robot(id).expect("home robot").clone();
            let p = &self.percepts[&id];
            let me = PlayerView {
                id,
                pose: p.belief,
                ball: p.ball_est,
                ball_distance: p.ball_seen.map(|b| p.belief.position().distance(b)),
                active: !body.penalized,
                fallen: body.fallen,
            };
            let ball_velocity = p.ball_seen.map(|_| self.world.ball.velocity);
            let manager = self.managers.get_mut(&id).expect("home robot");
            let is_goalie = manager.role() == Role::Goalkeeper;
            let tick = manager.tick(&TickInput {
                now,
                phase,
                me,
                ball_velocity,
                inbox,
                negotiation: &negotiations[&id],
                kicked: is_goalie && self.goalie_kicked,
            });
            let (task, base_task, clearing_out) = (manager.task(), manager.base_task(), manager.clearing_out());
            if let Some(view) = tick.clearout {
                goalie = Some(GoalieTick {
                    robot: id,
                    view,
                    clearing_out,
                });
            }
            self.emit_teamplay(now, id, tick.log, sink)?;

            let p = &self.percepts[&id];
            let belief = BeliefSnapshot {
                now,
                phase,
                task,
                pose: p.belief,
                ball_visible: p.ball_seen.is_some(),
                ball_est: p.ball_est,
                ball_velocity,
                ball_last_seen: p.ball_last_seen,
                obstacles: self.obstacles(id),
                inbox: inbox.clone(),
                kickoff: self.world.kickoff_team == Team::Home,
                clearout_signal: clearing_out,
                dive_signal: tick.dive,
            };
            let controller = self.controllers.get_mut(&id).expect("home robot");
            let out = controller.step(&belief);
            for log in out.log.iter().cloned() {
                self.emit(now, RecordBody::Behavior { robot: id, log }, sink)?;
            }
            let p = &self.percepts[&id];
            robots_tick.push(RobotTick {
                id,
                pose: body.true_pose,
                active: !body.penalized,
                fallen: body.fallen,
                task: Some(task),
                base_task: Some(base_task),
                belief: Some(p.belief),
                weights: p.localizer.as_ref().map(|l| l.bank.weights()).unwrap_or_default(),
                ball_est: p.ball_est,
                inbox: inbox
                    .iter()
                    .map(|m| InboxEntry {
                        sender: m.sender,
                        send_time: m.send_time,
                    })
                    .collect(),
                game_state: Some(out.game_state),
                behavior: Some(out.behavior),
            });
            outputs.push((id, tick.outgoing, base_task, out));
        }
        self.goalie_kicked = false;

        for body in self.world.robots.iter().filter(|r| r.team == Team::Away) {
            robots_tick.push(RobotTick {
                id: body.id,
                pose: body.true_pose,
                active: !body.penalized,
                fallen: body.fallen,
                task: None,
                base_task: None,
                belief: None,
                weights: Vec::new(),
                ball_est: None,
                inbox: Vec::new(),
                game_state: None,
                behavior: None,
            });
        }
        robots_tick.sort_by_key(|r| r.id);
        self.emit(
            now,
            RecordBody::Tick {
                phase,
                ball: self.world.ball.position,
                score: self.world.score,
                robots: robots_tick,
                goalie,
            },
            sink,
        )?;

        // Results are applied in robot-id order.
        let mut commands = Vec::new();
        for (id, outgoing, base_task, out) in outputs {
            for payload in outgoing {
                let mut msg = self.status(id, now);
                msg.negotiation = Some(payload);
                if self.bus.config().beat_aligned_negotiation {
                    self.held.push((msg, base_task));
                } else {
                    let report = self.bus.send_event(msg, now)?;
                    self.emit_message(
                        now,
                        id,
                        payload.kind.into(),
                        SendCause::Negotiation,
                        base_task,
                        Some((payload.to, payload.nonce)),
                        report,
                        sink,
                    )?;
                }
            }
            commands.push(RobotCommand {
                robot: id,
                velocity: out.velocity,
                kick: out.kick,
                dive: out.dive,
            });
        }
        for (id, script) in self.away.clone() {
            if let Some(cmd) = self.scripted(id, script) {
                commands.push(cmd);
            }
        }
        Ok(commands)
    }

    /// Opponent command. Computed in the away team's own frame.
    fn scripted(&self, id: RobotId, script: Script) -> Option<RobotCommand> {
        if script == Script::Static {
            return None;
        }
        let body = self.world.robot(id)?;
        if !body.can_move() {
            return None;
        }
        let sc = &self.scenario;
        let limits = MotionLimits::from(&sc.sim);
        // The away frame mapping is its own inverse.
        let pose = Team::Away.to_field(body.true_pose);
        let stop = RobotCommand::walk(id, Velocity::ZERO);
        match self.world.gc_phase {
            GamePhase::Ready => {
                let kickoff = self.world.kickoff_team == Team::Away;
                let targets = auto_position_targets(Team::Away, &self.away_roster, &sc.field, kickoff);
                let target = Team::Away.to_field(targets.iter().find(|(r, _)| *r == id)?.1);
                Some(RobotCommand::walk(id, drive_to(pose, target.position(), target, &limits)))
            }
            GamePhase::Playing => {
                let ball = Team::Away.point_to_field(self.world.ball.position);
                let aim = sc.field.opponent_goal_center();
                let direction = (aim - ball).angle();
                let foot = pose.transform_point(Vec2::new(sc.sim.foot_offset, 0.0));
                let facing = normalize_angle(pose.theta - direction).abs();
                if foot.distance(ball) <= 0.8 * sc.sim.kick_reach && facing <= 2.0 * sc.behavior.kick_align_tol {
                    return Some(RobotCommand {
                        kick: Some(KickCommand {
                            direction: normalize_angle(direction + std::f64::consts::PI),
                            strength: KickStrength::Kick,
                        }),
                        ..stop
                    });
                }
                let target = approach_ball_target(ball, aim, &sc.field, &sc.behavior);
                let path = approach_path(pose, ball, aim, &[], &sc.field, &sc.behavior);
                Some(RobotCommand::walk(id, drive_to(pose, path.next_waypoint(), target, &limits)))
            }
            _ => Some(stop),
        }
    }
}

/// Runs a scenario to completion.
pub fn run_scenario(scenario: &Scenario, sink: &mut dyn TraceSink) -> Result<Metrics, RunError> {
    Simulation::new(scenario).run(sink)
}
