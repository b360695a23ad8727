use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::comms::TeamMessage;
use crate::geometry::{presence_line_clear, FieldModel, Vec2};
use crate::sim::{GamePhase, RobotId, Role, Side};

use super::clearout::{clearout_decision, dive_signal, ClearOutDecision};
use super::cost::{desired_task, is_better_positioned, PlayerView};
use super::vote::{Vote, VoteBuffer};
use super::{NegotiationKind, NegotiationPayload, Task, TeamplayParams};

/// Handshake progress of one robot. At most one exchange is in flight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum NegotiationState {
    Idle,
    /// Defender waiting for the striker's answer.
    RequestSent { peer: RobotId, nonce: u32, sent_at: f64 },
    /// Striker in ChangeTask waiting for the defender's confirmation.
    AwaitConfirm {
        peer: RobotId,
        nonce: u32,
        request_time: f64,
        accepted_at: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Negotiation,
    /// Striker resolved a handshake from the defender's later status.
    Evidence,
    Vacancy,
    Egress,
    Return,
    ClearOut,
}

/// Decision-level records for the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "log", rename_all = "snake_case")]
pub enum TeamplayLog {
    TaskChange {
        from: Task,
        to: Task,
        base_from: Task,
        base_to: Task,
        cause: Cause,
    },
    VoteConfirmed { decision: String },
    NegotiationSent { kind: NegotiationKind, to: RobotId, nonce: u32 },
    NegotiationIgnored { kind: NegotiationKind, from: RobotId, nonce: u32 },
    NegotiationTimeout { peer: RobotId, nonce: u32 },
    ClearOut { active: bool },
    Returned,
}

/// Everything the manager sees in one controller cycle. Positions are in the
/// team frame (own goal at -x).
#[derive(Debug, Clone)]
pub struct TickInput<'a> {
    pub now: f64,
    pub phase: GamePhase,
    pub me: PlayerView,
    /// Believed ball velocity, when the ball is tracked.
    pub ball_velocity: Option<Vec2>,
    /// Latest fresh status per teammate.
    pub inbox: &'a [TeamMessage],
    /// Handshake messages delivered since the last cycle.
    pub negotiation: &'a [TeamMessage],
    /// The goalkeeper kicked the ball since the last cycle.
    pub kicked: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickOutput {
    pub outgoing: Vec<NegotiationPayload>,
    pub dive: Option<Side>,
    pub log: Vec<TeamplayLog>,
    /// Goalkeeper only: the raw clear-out decision of this cycle.
    pub clearout: Option<ClearOutView>,
}

/// Inputs and result of one goalkeeper clear-out decision, kept for the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClearOutView {
    pub ball: Option<Vec2>,
    pub presence_clear: bool,
    pub decision: ClearOutDecision,
}

/// Fixed context of a task manager.
#[derive(Debug, Clone)]
pub struct ManagerContext {
    pub params: TeamplayParams,
    pub field: FieldModel,
    pub staleness_horizon: f64,
    /// Lateral reach of the goalkeeper without diving.
    pub keeper_reach: f64,
}

pub struct TaskManager {
    id: RobotId,
    role: Role,
    field_mates: Vec<RobotId>,
    ctx: ManagerContext,
    base: Task,
    effective: Task,
    state: NegotiationState,
    vote: VoteBuffer<Task>,
    clear_vote: VoteBuffer<ClearOutDecision>,
    clearing_out: bool,
    active: bool,
    started_at: f64,
    /// Last time this robot gave up Attack. Older teammate statuses cannot
    /// prove a vacancy, since they may predate the hand-over.
    relinquished_at: f64,
    clock: f64,
    next_nonce: u32,
}

/// Lowest-id field player attacks, other field players defend.
pub fn initial_tasks(roster: &[(RobotId, Role)]) -> BTreeMap<RobotId, Task> {
    let striker = roster
        .iter()
        .filter(|(_, r)| *r == Role::FieldPlayer)
        .map(|(id, _)| *id)
        .min();
    roster
        .iter()
        .map(|&(id, role)| {
            let task = match role {
                Role::Goalkeeper => Task::KeepGoal,
                Role::FieldPlayer if Some(id) == striker => Task::Attack,
                Role::FieldPlayer => Task::Defend,
            };
            (id, task)
        })
        .collect()
}

impl TaskManager {
    pub fn new(id: RobotId, roster: &[(RobotId, Role)], ctx: ManagerContext, now: f64) -> Self {
        let role = roster
            .iter()
            .find(|(r, _)| *r == id)
            .map_or(Role::FieldPlayer, |(_, role)| *role);
        let base = initial_tasks(roster).get(&id).copied().unwrap_or(Task::Defend);
        let mut field_mates: Vec<RobotId> = roster
            .iter()
            .filter(|(r, role)| *r != id && *role == Role::FieldPlayer)
            .map(|(r, _)| *r)
            .collect();
        field_mates.sort_unstable();
        let n = ctx.params.confirm_cycles;
        Self {
            id,
            role,
            field_mates,
            ctx,
            base,
            effective: base,
            state: NegotiationState::Idle,
            vote: VoteBuffer::new(n),
            clear_vote: VoteBuffer::new(n),
            clearing_out: false,
            active: true,
            started_at: now,
            relinquished_at: f64::NEG_INFINITY,
            clock: now,
            next_nonce: 0,
        }
    }

    pub fn id(&self) -> RobotId {
        self.id
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Effective task, WaitClearOut while a clear-out is announced.
    pub fn task(&self) -> Task {
        self.effective
    }

    pub fn base_task(&self) -> Task {
        self.base
    }

    pub fn state(&self) -> NegotiationState {
        self.state
    }

    pub fn clearing_out(&self) -> bool {
        self.clearing_out
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    /// Leaving play: give up any task immediately. The caller announces the
    /// egress with an event-driven status message.
    pub fn on_egress(&mut self, now: f64) -> Vec<TeamplayLog> {
        let mut log = Vec::new();
        if !self.active {
            return log;
        }
        self.clock = now;
        self.active = false;
        self.state = NegotiationState::Idle;
        self.vote.clear();
        self.clear_vote.clear();
        self.clearing_out = false;
        if self.role == Role::FieldPlayer && self.ctx.params.enabled {
            self.set_tasks(Task::Defend, Task::Defend, Cause::Egress, &mut log);
        }
        log
    }

    pub fn on_return(&mut self, now: f64) -> Vec<TeamplayLog> {
        let mut log = Vec::new();
        if self.active {
            return log;
        }
        self.active = true;
        self.started_at = now;
        self.clock = now;
        log.push(TeamplayLog::Returned);
        log
    }

    fn set_tasks(&mut self, effective: Task, base: Task, cause: Cause, log: &mut Vec<TeamplayLog>) {
        if matches!(self.base, Task::Attack | Task::ChangeTask) && base == Task::Defend {
            self.relinquished_at = self.clock;
        }
        if effective != self.effective || base != self.base {
            log.push(TeamplayLog::TaskChange {
                from: self.effective,
                to: effective,
                base_from: self.base,
                base_to: base,
                cause,
            });
        }
        self.effective = effective;
        self.base = base;
    }

    fn set_base(&mut self, base: Task, cause: Cause, log: &mut Vec<TeamplayLog>) {
        let effective = if self.effective == Task::WaitClearOut {
            Task::WaitClearOut
        } else {
            base
        };
        self.set_tasks(effective, base, cause, log);
    }

    fn send(&mut self, out: &mut TickOutput, kind: NegotiationKind, to: RobotId, nonce: u32) {
        out.outgoing.push(NegotiationPayload { kind, to, nonce });
        out.log.push(TeamplayLog::NegotiationSent { kind, to, nonce });
    }

    pub fn tick(&mut self, input: &TickInput) -> TickOutput {
        let mut out = TickOutput::default();
        self.clock = input.now;
        if self.active && !input.me.active {
            out.log.extend(self.on_egress(input.now));
        } else if !self.active && input.me.active {
            out.log.extend(self.on_return(input.now));
        }
        match self.role {
            Role::Goalkeeper => self.goalkeeper_tick(input, &mut out),
            Role::FieldPlayer => self.field_tick(input, &mut out),
        }
        out
    }

    fn goalkeeper_tick(&mut self, input: &TickInput, out: &mut TickOutput) {
        if !self.ctx.params.enabled || !self.active {
            return;
        }
        let field = &self.ctx.field;
        let ball = input.me.ball.or_else(|| {
            input
                .inbox
                .iter()
                .filter(|m| m.ball_location.is_some())
                .max_by(|a, b| a.send_time.total_cmp(&b.send_time))
                .and_then(|m| m.ball_location)
        });
        let field_players: Vec<Vec2> = input
            .inbox
            .iter()
            .filter(|m| self.field_mates.contains(&m.sender) && m.active)
            .map(|m| m.robot_pose.position())
            .collect();
        let decision = clearout_decision(ball, &field_players, field);
        out.clearout = Some(ClearOutView {
            ball,
            presence_clear: presence_line_clear(&field_players, field),
            decision,
        });
        let was = self.clearing_out;
        if input.me.fallen || input.phase != GamePhase::Playing {
            self.clearing_out = false;
            self.clear_vote.clear();
        } else if input.kicked {
            // A kick restarts the vote; the announcement holds until the
            // ball's new region is confirmed, so a blocked clearance does
            // not let the field players back in.
            self.clear_vote.clear();
        } else if let Vote::Confirmed(d) = self.clear_vote.push(decision) {
            self.clearing_out = d == ClearOutDecision::ClearOut;
        }
        if was != self.clearing_out {
            out.log.push(TeamplayLog::ClearOut {
                active: self.clearing_out,
            });
        }
        if input.phase == GamePhase::Playing && !input.me.fallen {
            if let (Some(ball), Some(vel)) = (input.me.ball, input.ball_velocity) {
                out.dive = dive_signal(
                    ball,
                    vel,
                    input.me.pose,
                    field,
                    &self.ctx.params,
                    self.ctx.keeper_reach,
                );
            }
        }
    }

    fn field_tick(&mut self, input: &TickInput, out: &mut TickOutput) {
        if !self.ctx.params.enabled {
            return;
        }
        if !self.active {
            for msg in input.negotiation {
                self.reject_while_busy(msg, out);
            }
            return;
        }
        let now = input.now;
        let override_active = input
            .inbox
            .iter()
            .any(|m| m.task == Task::KeepGoal && m.clearing_out && m.active);
        if override_active && matches!(self.state, NegotiationState::RequestSent { .. }) {
            self.state = NegotiationState::Idle;
        }
        let effective = if override_active {
            Task::WaitClearOut
        } else {
            self.base
        };
        if effective != self.effective {
            let base = self.base;
            self.set_tasks(effective, base, Cause::ClearOut, &mut out.log);
        }

        for msg in input.negotiation {
            self.handle_negotiation(msg, input, override_active, out);
        }
        self.resolve_timeouts(input, out);

        let mates = self.fresh_mates(input.inbox);
        let playing = input.phase == GamePhase::Playing;
        if self.base == Task::Defend && self.state == NegotiationState::Idle {
            if self.vacancy(input.inbox, now) {
                self.vote.clear();
                self.set_base(Task::Attack, Cause::Vacancy, &mut out.log);
                return;
            }
            if !playing || override_active {
                self.vote.clear();
                return;
            }
            let views: Vec<PlayerView> = mates.iter().map(|m| PlayerView::from_message(m)).collect();
            let desired = desired_task(
                &input.me,
                &views,
                false,
                self.ctx.field.opponent_goal_center(),
                self.ctx.params.alignment_weight,
            );
            if let Vote::Confirmed(Task::Attack) = self.vote.push(desired) {
                let striker = mates
                    .iter()
                    .find(|m| m.base_task == Task::Attack && m.active)
                    .map(|m| m.sender);
                if let Some(peer) = striker {
                    out.log.push(TeamplayLog::VoteConfirmed {
                        decision: "attack".into(),
                    });
                    self.vote.clear();
                    self.next_nonce = self.next_nonce.wrapping_add(1);
                    let nonce = (u32::from(self.id) << 24) | (self.next_nonce & 0x00ff_ffff);
                    self.state = NegotiationState::RequestSent {
                        peer,
                        nonce,
                        sent_at: now,
                    };
                    self.send(out, NegotiationKind::Request, peer, nonce);
                }
            }
        } else {
            self.vote.clear();
        }
    }

    fn fresh_mates<'m>(&self, inbox: &'m [TeamMessage]) -> Vec<&'m TeamMessage> {
        inbox
            .iter()
            .filter(|m| self.field_mates.contains(&m.sender))
            .collect()
    }

    fn reject_while_busy(&mut self, msg: &TeamMessage, out: &mut TickOutput) {
        let Some(p) = msg.negotiation else { return };
        if p.to != self.id {
            return;
        }
        if p.kind == NegotiationKind::Request {
            self.send(out, NegotiationKind::Reject, msg.sender, p.nonce);
        } else {
            out.log.push(TeamplayLog::NegotiationIgnored {
                kind: p.kind,
                from: msg.sender,
                nonce: p.nonce,
            });
        }
    }

    fn handle_negotiation(
        &mut self,
        msg: &TeamMessage,
        input: &TickInput,
        override_active: bool,
        out: &mut TickOutput,
    ) {
        let Some(p) = msg.negotiation else { return };
        if p.to != self.id {
            return;
        }
        let now = input.now;
        let timeout = self.ctx.params.negotiation_timeout;
        let ignored = TeamplayLog::NegotiationIgnored {
            kind: p.kind,
            from: msg.sender,
            nonce: p.nonce,
        };
        match p.kind {
            NegotiationKind::Request => {
                let requester = PlayerView::from_message(msg);
                let accept = self.base == Task::Attack
                    && self.state == NegotiationState::Idle
                    && !override_active
                    && input.phase == GamePhase::Playing
                    && is_better_positioned(
                        &requester,
                        &input.me,
                        self.ctx.field.opponent_goal_center(),
                        self.ctx.params.alignment_weight,
                    );
                if accept {
                    self.set_base(Task::ChangeTask, Cause::Negotiation, &mut out.log);
                    self.state = NegotiationState::AwaitConfirm {
                        peer: msg.sender,
                        nonce: p.nonce,
                        request_time: msg.send_time,
                        accepted_at: now,
                    };
                    self.send(out, NegotiationKind::Accept, msg.sender, p.nonce);
                } else {
                    self.send(out, NegotiationKind::Reject, msg.sender, p.nonce);
                }
            }
            NegotiationKind::Accept => match self.state {
                NegotiationState::RequestSent { peer, nonce, sent_at }
                    if peer == msg.sender && nonce == p.nonce && now - sent_at < timeout =>
                {
                    self.state = NegotiationState::Idle;
                    self.set_base(Task::Attack, Cause::Negotiation, &mut out.log);
                    self.send(out, NegotiationKind::Confirm, peer, nonce);
                }
                _ => out.log.push(ignored),
            },
            NegotiationKind::Reject => match self.state {
                NegotiationState::RequestSent { peer, nonce, .. }
                    if peer == msg.sender && nonce == p.nonce =>
                {
                    self.state = NegotiationState::Idle;
                }
                _ => out.log.push(ignored),
            },
            NegotiationKind::Confirm => match self.state {
                NegotiationState::AwaitConfirm { peer, nonce, .. }
                    if peer == msg.sender && nonce == p.nonce =>
                {
                    self.state = NegotiationState::Idle;
                    self.set_base(Task::Defend, Cause::Negotiation, &mut out.log);
                }
                _ => out.log.push(ignored),
            },
        }
    }

    fn resolve_timeouts(&mut self, input: &TickInput, out: &mut TickOutput) {
        let now = input.now;
        let timeout = self.ctx.params.negotiation_timeout;
        match self.state {
            NegotiationState::Idle => {}
            NegotiationState::RequestSent { peer, nonce, sent_at } => {
                if now - sent_at >= timeout {
                    self.state = NegotiationState::Idle;
                    out.log.push(TeamplayLog::NegotiationTimeout { peer, nonce });
                }
            }
            NegotiationState::AwaitConfirm {
                peer,
                nonce,
                request_time,
                accepted_at,
            } => {
                let Some(status) = input.inbox.iter().find(|m| m.sender == peer) else {
                    return;
                };
                // The peer's own status settles the exchange: once it shows
                // Attack the hand-over happened; once it is sent after the
                // peer's acceptance window closed without Attack, it never will.
                if status.base_task == Task::Attack && status.send_time >= accepted_at {
                    self.state = NegotiationState::Idle;
                    self.set_base(Task::Defend, Cause::Evidence, &mut out.log);
                    return;
                }
                let peer_gone = !status.active && status.send_time >= request_time;
                let window_closed = status.send_time >= request_time + timeout;
                if (peer_gone || window_closed) && status.base_task == Task::Defend {
                    let other_holder = input.inbox.iter().any(|m| {
                        m.sender != peer
                            && self.field_mates.contains(&m.sender)
                            && m.send_time >= request_time
                            && matches!(m.base_task, Task::Attack | Task::ChangeTask)
                    });
                    self.state = NegotiationState::Idle;
                    out.log.push(TeamplayLog::NegotiationTimeout { peer, nonce });
                    let back = if other_holder { Task::Defend } else { Task::Attack };
                    self.set_base(back, Cause::Evidence, &mut out.log);
                }
            }
        }
    }

    /// Attack is vacant and this robot is first in line to take it.
    fn vacancy(&self, inbox: &[TeamMessage], now: f64) -> bool {
        let mates = self.fresh_mates(inbox);
        if mates
            .iter()
            .any(|m| m.active && matches!(m.base_task, Task::Attack | Task::ChangeTask))
        {
            return false;
        }
        self.field_mates.iter().all(|&mate| {
            let horizon = self.ctx.staleness_horizon;
            match mates.iter().find(|m| m.sender == mate) {
                None => now - self.started_at > horizon && now - self.relinquished_at > horizon,
                Some(m) => {
                    m.send_time >= self.relinquished_at
                        && (!m.active || (m.base_task == Task::Defend && mate > self.id))
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;

    const GOALIE: RobotId = 1;
    const A: RobotId = 2;
    const B: RobotId = 3;

    fn roster() -> Vec<(RobotId, Role)> {
        vec![(GOALIE, Role::Goalkeeper), (A, Role::FieldPlayer), (B, Role::FieldPlayer)]
    }

    fn ctx() -> ManagerContext {
        ManagerContext {
            params: TeamplayParams::default(),
            field: FieldModel::default(),
            staleness_horizon: 5.0,
            keeper_reach: 0.2,
        }
    }

    fn view(id: RobotId, x: f64) -> PlayerView {
        PlayerView {
            id,
            pose: Pose2D::new(x, 0.0, 0.0),
            ball: Some(Vec2::new(0.0, 0.0)),
            ball_distance: None,
            active: true,
            fallen: false,
        }
    }

    fn status(m: &TaskManager, v: &PlayerView, t: f64) -> TeamMessage {
        TeamMessage {
            sender: m.id,
            send_time: t,
            task: m.task(),
            base_task: m.base_task(),
            ball_distance: None,
            ball_visible: false,
            ball_possession: false,
            ball_location: v.ball,
            robot_pose: v.pose,
            active: m.is_active() && v.active,
            fallen: v.fallen,
            clearing_out: m.clearing_out(),
            negotiation: None,
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

    #[test]
    fn initial_assignment() {
        let t = initial_tasks(&roster());
        assert_eq!(t[&GOALIE], Task::KeepGoal);
        assert_eq!(t[&A], Task::Attack);
        assert_eq!(t[&B], Task::Defend);
    }

    /// Which messages of the first handshake are lost. Later exchanges and
    /// all Reject messages are delivered.
    #[derive(Debug, Clone, Copy)]
    struct Drops {
        request: bool,
        accept: bool,
        confirm: bool,
        statuses: bool,
    }

    /// Runs one exchange between striker A (far from the ball) and defender B
    /// (close to it) at 8 Hz with the given drops. Returns the base tasks seen
    /// after every cycle and the final pair.
    fn run_exchange(drops: Drops, cycles: usize) -> (Vec<(Task, Task)>, (Task, Task)) {
        let mut a = TaskManager::new(A, &roster(), ctx(), 0.0);
        let mut b = TaskManager::new(B, &roster(), ctx(), 0.0);
        let va = view(A, -3.0);
        let vb = view(B, -1.0);
        let mut to_a: Vec<TeamMessage> = Vec::new();
        let mut to_b: Vec<TeamMessage> = Vec::new();
        let mut inbox_a: Vec<TeamMessage> = Vec::new();
        let mut inbox_b: Vec<TeamMessage> = Vec::new();
        let mut seen = Vec::new();
        let mut sent = [0usize; 3];
        for k in 0..cycles {
            let now = k as f64 * 0.125;
            let neg_a = std::mem::take(&mut to_a);
            let neg_b = std::mem::take(&mut to_b);
            let out_a = a.tick(&input(now, va, &inbox_a, &neg_a));
            let out_b = b.tick(&input(now, vb, &inbox_b, &neg_b));
            for (out, from, fv, queue) in [(&out_a, &a, &va, &mut to_b), (&out_b, &b, &vb, &mut to_a)] {
                for p in &out.outgoing {
                    let (slot, drop) = match p.kind {
                        NegotiationKind::Request => (0, drops.request),
                        NegotiationKind::Accept => (1, drops.accept),
                        NegotiationKind::Confirm => (2, drops.confirm),
                        NegotiationKind::Reject => continue,
                    };
                    sent[slot] += 1;
                    let dropped = drop && sent[slot] == 1;
                    if !dropped {
                        let mut msg = status(from, fv, now);
                        msg.negotiation = Some(*p);
                        queue.push(msg);
                    }
                }
            }
            if !drops.statuses || k == 0 {
                inbox_a = vec![status(&b, &vb, now)];
                inbox_b = vec![status(&a, &va, now)];
            }
            seen.push((a.base_task(), b.base_task()));
        }
        (seen, (a.base_task(), b.base_task()))
    }

    #[test]
    fn lossless_exchange_swaps_tasks() {
        let drops = Drops { request: false, accept: false, confirm: false, statuses: false };
        let (seen, last) = run_exchange(drops, 40);
        assert_eq!(last, (Task::Defend, Task::Attack));
        for (ta, tb) in seen {
            assert!(!(ta == Task::Attack && tb == Task::Attack));
        }
    }

    #[test]
    fn exhaustive_single_exchange_model_check() {
        for mask in 0..16u8 {
            let drops = Drops {
                request: mask & 1 != 0,
                accept: mask & 2 != 0,
                confirm: mask & 4 != 0,
                statuses: mask & 8 != 0,
            };
            let (seen, last) = run_exchange(drops, 40);
            for (k, (ta, tb)) in seen.iter().enumerate() {
                assert!(
                    !(*ta == Task::Attack && *tb == Task::Attack),
                    "double attack at cycle {k} with {drops:?}"
                );
            }
            if !drops.statuses {
                let attackers = [last.0, last.1].iter().filter(|t| **t == Task::Attack).count();
                assert_eq!(attackers, 1, "no striker after settling with {drops:?}: {last:?}");
            }
        }
    }

    #[test]
    fn lost_accept_reverts_striker() {
        let drops = Drops { request: false, accept: true, confirm: false, statuses: false };
        let (seen, _) = run_exchange(drops, 40);
        assert!(seen.iter().any(|(ta, _)| *ta == Task::ChangeTask));
        // The striker reverts within two timeouts, then the retried
        // exchange completes.
        let first_revert = seen
            .windows(2)
            .position(|w| w[0].0 == Task::ChangeTask && w[1].0 == Task::Attack)
            .expect("striker reverts");
        assert!(first_revert <= 24);
        assert!(seen[..=first_revert].iter().all(|(_, tb)| *tb == Task::Defend));
        assert_eq!(*seen.last().unwrap(), (Task::Defend, Task::Attack));
    }

    #[test]
    fn reject_keeps_tasks() {
        // The striker is better placed, so a forced request is rejected.
        let mut a = TaskManager::new(A, &roster(), ctx(), 0.0);
        let va = view(A, -1.0);
        let vb = view(B, -3.0);
        let b = TaskManager::new(B, &roster(), ctx(), 0.0);
        let mut req = status(&b, &vb, 0.0);
        req.negotiation = Some(NegotiationPayload { kind: NegotiationKind::Request, to: A, nonce: 9 });
        let out = a.tick(&input(0.0, va, &[], &[req]));
        assert_eq!(out.outgoing[0].kind, NegotiationKind::Reject);
        assert_eq!(a.base_task(), Task::Attack);
    }

    #[test]
    fn confirm_with_wrong_nonce_ignored() {
        let mut a = TaskManager::new(A, &roster(), ctx(), 0.0);
        let b = TaskManager::new(B, &roster(), ctx(), 0.0);
        let va = view(A, -3.0);
        let vb = view(B, -1.0);
        let mut req = status(&b, &vb, 0.0);
        req.negotiation = Some(NegotiationPayload { kind: NegotiationKind::Request, to: A, nonce: 5 });
        a.tick(&input(0.0, va, &[], &[req]));
        assert_eq!(a.base_task(), Task::ChangeTask);
        let mut conf = status(&b, &vb, 0.1);
        conf.negotiation = Some(NegotiationPayload { kind: NegotiationKind::Confirm, to: A, nonce: 6 });
        a.tick(&input(0.1, va, &[], &[conf.clone()]));
        assert_eq!(a.base_task(), Task::ChangeTask);
        conf.negotiation = Some(NegotiationPayload { kind: NegotiationKind::Confirm, to: A, nonce: 5 });
        a.tick(&input(0.2, va, &[], &[conf]));
        assert_eq!(a.base_task(), Task::Defend);
    }

    #[test]
    fn request_in_change_task_rejected() {
        let mut a = TaskManager::new(A, &roster(), ctx(), 0.0);
        let b = TaskManager::new(B, &roster(), ctx(), 0.0);
        let va = view(A, -3.0);
        let vb = view(B, -1.0);
        let mut req = status(&b, &vb, 0.0);
        req.negotiation = Some(NegotiationPayload { kind: NegotiationKind::Request, to: A, nonce: 1 });
        a.tick(&input(0.0, va, &[], &[req.clone()]));
        req.negotiation = Some(NegotiationPayload { kind: NegotiationKind::Request, to: A, nonce: 2 });
        let out = a.tick(&input(0.1, va, &[], &[req]));
        assert_eq!(out.outgoing[0].kind, NegotiationKind::Reject);
    }

    #[test]
    fn steady_signal_requests_on_fourth_cycle() {
        let a = TaskManager::new(A, &roster(), ctx(), 0.0);
        let mut b = TaskManager::new(B, &roster(), ctx(), 0.0);
        let va = view(A, -3.0);
        let vb = view(B, -1.0);
        let inbox = [status(&a, &va, 0.0)];
        for k in 0..4 {
            let out = b.tick(&input(k as f64 * 0.125, vb, &inbox, &[]));
            assert_eq!(out.outgoing.is_empty(), k < 3, "cycle {k}");
        }
    }

    #[test]
    fn oscillating_signal_never_requests() {
        let a = TaskManager::new(A, &roster(), ctx(), 0.0);
        let mut b = TaskManager::new(B, &roster(), ctx(), 0.0);
        let va = view(A, -2.0);
        let inbox = [status(&a, &va, 0.0)];
        for k in 0..480 {
            let x = if k % 2 == 0 { -1.0 } else { -3.0 };
            let out = b.tick(&input(k as f64 * 0.125, view(B, x), &inbox, &[]));
            assert!(out.outgoing.is_empty());
        }
    }

    #[test]
    fn egress_vacancy_adoption() {
        let mut a = TaskManager::new(A, &roster(), ctx(), 0.0);
        let mut b = TaskManager::new(B, &roster(), ctx(), 0.0);
        let va = view(A, -1.0);
        let vb = view(B, -3.0);
        a.on_egress(0.0);
        assert_eq!(a.base_task(), Task::Defend);
        let inbox = [status(&a, &va, 0.0)];
        b.tick(&input(0.0, vb, &inbox, &[]));
        assert_eq!(b.base_task(), Task::Attack);
    }

    #[test]
    fn defender_egress_keeps_striker() {
        let mut a = TaskManager::new(A, &roster(), ctx(), 0.0);
        let mut b = TaskManager::new(B, &roster(), ctx(), 0.0);
        b.on_egress(0.0);
        let inbox = [status(&b, &view(B, -3.0), 0.0)];
        a.tick(&input(0.0, view(A, -1.0), &inbox, &[]));
        assert_eq!(a.base_task(), Task::Attack);
    }

    #[test]
    fn silent_striker_adopted_after_horizon() {
        let mut b = TaskManager::new(B, &roster(), ctx(), 0.0);
        b.tick(&input(4.9, view(B, -3.0), &[], &[]));
        assert_eq!(b.base_task(), Task::Defend);
        b.tick(&input(5.1, view(B, -3.0), &[], &[]));
        assert_eq!(b.base_task(), Task::Attack);
    }

    #[test]
    fn clearout_overrides_and_releases() {
        let mut b = TaskManager::new(B, &roster(), ctx(), 0.0);
        let mut g = status(&TaskManager::new(GOALIE, &roster(), ctx(), 0.0), &view(GOALIE, -4.25), 0.0);
        g.clearing_out = true;
        let a = status(&TaskManager::new(A, &roster(), ctx(), 0.0), &view(A, -1.0), 0.0);
        b.tick(&input(0.0, view(B, -3.0), &[g.clone(), a.clone()], &[]));
        assert_eq!(b.task(), Task::WaitClearOut);
        assert_eq!(b.base_task(), Task::Defend);
        g.clearing_out = false;
        b.tick(&input(0.2, view(B, -3.0), &[g, a], &[]));
        assert_eq!(b.task(), Task::Defend);
    }

    #[test]
    fn goalkeeper_votes_clearout() {
        let mut g = TaskManager::new(GOALIE, &roster(), ctx(), 0.0);
        let mut me = view(GOALIE, -4.25);
        me.ball = Some(Vec2::new(-4.0, 0.5));
        for k in 0..3 {
            g.tick(&input(k as f64 * 0.125, me, &[], &[]));
            assert!(!g.clearing_out());
        }
        g.tick(&input(0.375, me, &[], &[]));
        assert!(g.clearing_out());
        assert_eq!(g.task(), Task::KeepGoal);
        let mut kicked = input(0.5, me, &[], &[]);
        kicked.kicked = true;
        g.tick(&kicked);
        assert!(g.clearing_out());
        // The ball rolled out to midfield: released after a full vote.
        me.ball = Some(Vec2::new(1.0, 0.0));
        for k in 1..4 {
            g.tick(&input(0.5 + k as f64 * 0.125, me, &[], &[]));
            assert!(g.clearing_out());
        }
        g.tick(&input(1.0, me, &[], &[]));
        assert!(!g.clearing_out());
    }

    #[test]
    fn goalkeeper_fall_releases_clearout() {
        let mut g = TaskManager::new(GOALIE, &roster(), ctx(), 0.0);
        let mut me = view(GOALIE, -4.25);
        me.ball = Some(Vec2::new(-4.0, 0.5));
        for k in 0..4 {
            g.tick(&input(k as f64 * 0.125, me, &[], &[]));
        }
        assert!(g.clearing_out());
        me.fallen = true;
        g.tick(&input(0.5, me, &[], &[]));
        assert!(!g.clearing_out());
    }

    #[test]
    fn disabled_teamplay_freezes_tasks() {
        let mut c = ctx();
        c.params.enabled = false;
        let mut b = TaskManager::new(B, &roster(), c, 0.0);
        for k in 0..100 {
            b.tick(&input(k as f64 * 0.125, view(B, -0.5), &[], &[]));
        }
        assert_eq!(b.base_task(), Task::Defend);
    }
}
