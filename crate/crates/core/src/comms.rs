//! Team-communication bus with seeded loss, latency and staleness filtering.
//!
//! Periodic status broadcasts are limited to one per sender per bus period.
//! Event-driven messages (negotiation, egress) bypass the rate limit but obey
//! the same loss and latency model. Receivers see the latest fresh status of
//! each teammate through [`Bus::inbox`] and get negotiation messages exactly
//! once through [`Bus::drain_negotiation`].

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CommsError, ConfigError};
use crate::geometry::{Pose2D, Vec2};
use crate::sim::RobotId;
use crate::teamplay::{NegotiationPayload, Task};

/// Status record broadcast by every robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamMessage {
    pub sender: RobotId,
    pub send_time: f64,
    /// Effective task, `WaitClearOut` while waiting on a clear-out.
    pub task: Task,
    /// Task held underneath a clear-out override.
    pub base_task: Task,
    pub ball_distance: Option<f64>,
    pub ball_visible: bool,
    pub ball_possession: bool,
    pub ball_location: Option<Vec2>,
    pub robot_pose: Pose2D,
    pub active: bool,
    pub fallen: bool,
    /// Set by the goalkeeper while it announces a clear-out.
    pub clearing_out: bool,
    pub negotiation: Option<NegotiationPayload>,
}

impl TeamMessage {
    /// Checks the message-level invariant: no distance without visibility.
    pub fn is_consistent(&self) -> bool {
        self.ball_visible || self.ball_distance.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkLoss {
    pub from: RobotId,
    pub to: RobotId,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BusConfig {
    pub period: f64,
    pub loss_probability: f64,
    pub latency: f64,
    /// Uniform jitter added to the latency, in `[-jitter, jitter]`.
    pub latency_jitter: f64,
    pub staleness_horizon: f64,
    /// Hold negotiation messages for the next periodic beat.
    pub beat_aligned_negotiation: bool,
    /// Per-link overrides of `loss_probability`.
    pub link_loss: Vec<LinkLoss>,
}

impl Default for BusConfig {
    fn default() -> Self {
        Self {
            period: 0.125,
            loss_probability: 0.0,
            latency: 0.0,
            latency_jitter: 0.0,
            staleness_horizon: 5.0,
            beat_aligned_negotiation: false,
            link_loss: Vec::new(),
        }
    }
}

impl BusConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: &str| Err(ConfigError::Invalid(format!("bus: {m}")));
        if !(self.period > 0.0 && self.period.is_finite()) {
            return err("period must be positive");
        }
        if !(self.staleness_horizon > self.period) {
            return err("staleness_horizon must exceed period");
        }
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !prob_ok(self.loss_probability) || !self.link_loss.iter().all(|l| prob_ok(l.probability)) {
            return err("loss probabilities must be in [0, 1]");
        }
        if !(self.latency >= 0.0 && self.latency_jitter >= 0.0) {
            return err("latency and jitter must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SendReport {
    pub scheduled: Vec<(RobotId, f64)>,
    pub dropped: Vec<RobotId>,
}

#[derive(Debug, Clone)]
struct Pending {
    deliver_at: f64,
    seq: u64,
    msg: TeamMessage,
}

#[derive(Debug, Default, Clone)]
struct Mailbox {
    in_flight: Vec<Pending>,
    /// Latest delivered status per sender.
    latest: BTreeMap<RobotId, (u64, TeamMessage)>,
    /// Delivered negotiation messages not yet drained.
    negotiation: Vec<Pending>,
}

pub struct Bus {
    config: BusConfig,
    members: Vec<RobotId>,
    rng: ChaCha8Rng,
    mailboxes: BTreeMap<RobotId, Mailbox>,
    last_beat: BTreeMap<RobotId, i64>,
    seq: u64,
}

/// Tolerance for comparing simulation timestamps.
const TIME_EPS: f64 = 1e-9;

impl Bus {
    pub fn new(config: BusConfig, members: &[RobotId], seed: u64) -> Self {
        let mut members = members.to_vec();
        members.sort_unstable();
        members.dedup();
        let mailboxes = members.iter().map(|&m| (m, Mailbox::default())).collect();
        Self {
            config,
            members,
            rng: ChaCha8Rng::seed_from_u64(seed),
            mailboxes,
            last_beat: BTreeMap::new(),
            seq: 0,
        }
    }

    pub fn config(&self) -> &BusConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut BusConfig {
        &mut self.config
    }

    fn beat_slot(&self, now: f64) -> i64 {
        ((now + TIME_EPS) / self.config.period).floor() as i64
    }

    /// Whether `sender` has not yet broadcast in the current bus period.
    pub fn beat_due(&self, sender: RobotId, now: f64) -> bool {
        self.last_beat
            .get(&sender)
            .is_none_or(|&slot| slot < self.beat_slot(now))
    }

    /// Periodic status broadcast, at most once per sender per bus period.
    pub fn broadcast(&mut self, msg: TeamMessage, now: f64) -> Result<SendReport, CommsError> {
        if !self.beat_due(msg.sender, now) {
            return Err(CommsError::RateExceeded(msg.sender));
        }
        let slot = self.beat_slot(now);
        self.last_beat.insert(msg.sender, slot);
        self.send(msg, now)
    }

    /// Event-driven send outside the periodic schedule.
    pub fn send_event(&mut self, msg: TeamMessage, now: f64) -> Result<SendReport, CommsError> {
        self.send(msg, now)
    }

    fn send(&mut self, mut msg: TeamMessage, now: f64) -> Result<SendReport, CommsError> {
        if !self.mailboxes.contains_key(&msg.sender) {
            return Err(CommsError::UnknownSender(msg.sender));
        }
        msg.send_time = now;
        let mut report = SendReport {
            scheduled: Vec::new(),
            dropped: Vec::new(),
        };
        for &to in &self.members {
            if to == msg.sender {
                continue;
            }
            let loss = self.link_loss(msg.sender, to);
            // One draw per link keeps the random stream independent of the outcome.
            let draw: f64 = self.rng.random();
            let jitter = if self.config.latency_jitter > 0.0 {
                self.rng.random_range(-self.config.latency_jitter..=self.config.latency_jitter)
            } else {
                0.0
            };
            if draw < loss {
                report.dropped.push(to);
                continue;
            }
            let deliver_at = now + (self.config.latency + jitter).max(0.0);
            self.seq += 1;
            let pending = Pending {
                deliver_at,
                seq: self.seq,
                msg: msg.clone(),
            };
            self.mailboxes
                .get_mut(&to)
                .expect("member mailbox")
                .in_flight
                .push(pending);
            report.scheduled.push((to, deliver_at));
        }
        Ok(report)
    }

    fn link_loss(&self, from: RobotId, to: RobotId) -> f64 {
        self.config
            .link_loss
            .iter()
            .rev()
            .find(|l| l.from == from && l.to == to)
            .map_or(self.config.loss_probability, |l| l.probability)
    }

    /// Moves due messages into the mailboxes and forgets stale ones. Returns
    /// `(receiver, sender, send_time)` for every delivery.
    pub fn advance(&mut self, now: f64) -> Vec<(RobotId, RobotId, f64)> {
        let horizon = self.config.staleness_horizon;
        let mut delivered = Vec::new();
        for (&to, mailbox) in self.mailboxes.iter_mut() {
            let mut due: Vec<Pending> = Vec::new();
            mailbox.in_flight.retain(|p| {
                if p.deliver_at <= now + TIME_EPS {
                    due.push(p.clone());
                    false
                } else {
                    true
                }
            });
            due.sort_by(|a, b| a.deliver_at.total_cmp(&b.deliver_at).then(a.seq.cmp(&b.seq)));
            for p in due {
                delivered.push((to, p.msg.sender, p.msg.send_time));
                let newer = mailbox
                    .latest
                    .get(&p.msg.sender)
                    .is_none_or(|(seq, m)| {
                        p.msg.send_time > m.send_time
                            || (p.msg.send_time == m.send_time && p.seq > *seq)
                    });
                if newer {
                    mailbox.latest.insert(p.msg.sender, (p.seq, p.msg.clone()));
                }
                if p.msg.negotiation.is_some() {
                    mailbox.negotiation.push(p);
                }
            }
            mailbox.latest.retain(|_, (_, m)| now - m.send_time <= horizon);
        }
        delivered
    }

    /// Latest fresh status per teammate, sorted by sender id.
    pub fn inbox(&self, receiver: RobotId, now: f64) -> Vec<TeamMessage> {
        let Some(mailbox) = self.mailboxes.get(&receiver) else {
            return Vec::new();
        };
        let horizon = self.config.staleness_horizon;
        let mut latest: BTreeMap<RobotId, (f64, u64, &TeamMessage)> = BTreeMap::new();
        let delivered = mailbox.latest.values().map(|(seq, m)| (*seq, m));
        let arrived = mailbox
            .in_flight
            .iter()
            .filter(|p| p.deliver_at <= now + TIME_EPS)
            .map(|p| (p.seq, &p.msg));
        for (seq, msg) in delivered.chain(arrived) {
            if now - msg.send_time > horizon || msg.send_time > now + TIME_EPS {
                continue;
            }
            let replace = latest.get(&msg.sender).is_none_or(|(t, s, _)| {
                msg.send_time > *t || (msg.send_time == *t && seq > *s)
            });
            if replace {
                latest.insert(msg.sender, (msg.send_time, seq, msg));
            }
        }
        latest.into_values().map(|(_, _, m)| m.clone()).collect()
    }

    /// Negotiation messages delivered to `receiver` by `now`, oldest first.
    pub fn drain_negotiation(&mut self, receiver: RobotId, now: f64) -> Vec<TeamMessage> {
        self.advance(now);
        let Some(mailbox) = self.mailboxes.get_mut(&receiver) else {
            return Vec::new();
        };
        std::mem::take(&mut mailbox.negotiation)
            .into_iter()
            .map(|p| p.msg)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teamplay::NegotiationKind;

    fn status(sender: RobotId) -> TeamMessage {
        TeamMessage {
            sender,
            send_time: 0.0,
            task: Task::Defend,
            base_task: Task::Defend,
            ball_distance: None,
            ball_visible: false,
            ball_possession: false,
            ball_location: None,
            robot_pose: Pose2D::default(),
            active: true,
            fallen: false,
            clearing_out: false,
            negotiation: None,
        }
    }

    #[test]
    fn lossless_delivery_same_tick() {
        let mut bus = Bus::new(BusConfig::default(), &[1, 2, 3], 1);
        let r = bus.broadcast(status(1), 0.0).unwrap();
        assert_eq!(r.scheduled.len(), 2);
        assert_eq!(bus.inbox(2, 0.0).len(), 1);
        assert_eq!(bus.inbox(3, 0.0).len(), 1);
        assert!(bus.inbox(1, 0.0).is_empty());
    }

    #[test]
    fn total_loss_delivers_nothing() {
        let cfg = BusConfig {
            loss_probability: 1.0,
            ..BusConfig::default()
        };
        let mut bus = Bus::new(cfg, &[1, 2], 1);
        for k in 0..100 {
            let t = k as f64 * 0.125;
            bus.broadcast(status(1), t).unwrap();
            bus.advance(t);
            assert!(bus.inbox(2, t).is_empty());
        }
    }

    #[test]
    fn rate_limit() {
        let mut bus = Bus::new(BusConfig::default(), &[1, 2], 1);
        bus.broadcast(status(1), 0.0).unwrap();
        assert_eq!(bus.broadcast(status(1), 0.1), Err(CommsError::RateExceeded(1)));
        assert!(bus.broadcast(status(1), 0.14).is_ok());
        assert!(bus.send_event(status(1), 0.15).is_ok());
    }

    #[test]
    fn staleness_horizon() {
        let mut bus = Bus::new(BusConfig::default(), &[1, 2], 1);
        bus.broadcast(status(1), 0.0).unwrap();
        assert_eq!(bus.inbox(2, 4.9).len(), 1);
        assert!(bus.inbox(2, 5.1).is_empty());
        bus.advance(5.1);
        assert!(bus.inbox(2, 5.1).is_empty());
    }

    #[test]
    fn latest_message_wins() {
        let mut bus = Bus::new(BusConfig::default(), &[1, 2], 1);
        let mut first = status(1);
        first.task = Task::Attack;
        bus.broadcast(first, 0.0).unwrap();
        bus.broadcast(status(1), 0.2).unwrap();
        let inbox = bus.inbox(2, 0.3);
        assert_eq!(inbox.len(), 1);
        assert_eq!(inbox[0].task, Task::Defend);
        assert_eq!(inbox[0].send_time, 0.2);
    }

    #[test]
    fn latency_delays_delivery() {
        let cfg = BusConfig {
            latency: 0.1,
            ..BusConfig::default()
        };
        let mut bus = Bus::new(cfg, &[1, 2], 1);
        bus.broadcast(status(1), 1.0).unwrap();
        assert!(bus.inbox(2, 1.05).is_empty());
        assert_eq!(bus.inbox(2, 1.1).len(), 1);
    }

    #[test]
    fn negotiation_is_drained_once() {
        let mut bus = Bus::new(BusConfig::default(), &[1, 2], 1);
        let mut msg = status(1);
        msg.negotiation = Some(NegotiationPayload {
            kind: NegotiationKind::Request,
            to: 2,
            nonce: 1,
        });
        bus.send_event(msg, 0.0).unwrap();
        bus.broadcast(status(1), 0.0).unwrap();
        let drained = bus.drain_negotiation(2, 0.0);
        assert_eq!(drained.len(), 1);
        assert!(bus.drain_negotiation(2, 0.1).is_empty());
        // The later plain status shadows the request in the inbox.
        assert!(bus.inbox(2, 0.0)[0].negotiation.is_none());
    }

    #[test]
    fn link_loss_override() {
        let cfg = BusConfig {
            link_loss: vec![LinkLoss { from: 1, to: 2, probability: 1.0 }],
            ..BusConfig::default()
        };
        let mut bus = Bus::new(cfg, &[1, 2, 3], 1);
        let r = bus.broadcast(status(1), 0.0).unwrap();
        assert_eq!(r.dropped, vec![2]);
        assert_eq!(r.scheduled.len(), 1);
    }
}
