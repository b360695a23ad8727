//! Invariant checker over trace records. The runner feeds it every record as
//! it is emitted; `check` feeds it a trace read back from disk. Both paths run
//! the same code, so they report the same violations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{classify_ball_region, Region};
use crate::sim::{Event, RobotId, Role, Team};
use crate::teamplay::{ClearOutDecision, ClearOutView, Task};
use crate::trace::{Invariant, MessageKind, RecordBody, Trace, TraceHeader, TraceRecord};

/// Slack for comparing logged times.
const EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub invariant: Invariant,
    pub robot: Option<RobotId>,
    pub detail: String,
}

impl Violation {
    pub fn body(&self) -> RecordBody {
        RecordBody::Violation {
            invariant: self.invariant,
            robot: self.robot,
            detail: self.detail.clone(),
        }
    }
}

pub struct Checker {
    header: TraceHeader,
    /// `(effective, base)` task of every home robot.
    tasks: BTreeMap<RobotId, (Task, Task)>,
    goalkeepers: Vec<RobotId>,
    occupancy_since: [Option<f64>; 2],
}

/// Expected goalkeeper decision for the logged inputs.
pub fn expected_clearout(view: &ClearOutView, field: &crate::geometry::FieldModel) -> ClearOutDecision {
    match view.ball.map(|b| classify_ball_region(b, field)) {
        None => ClearOutDecision::HoldLaterally,
        Some(Region::Region1) => ClearOutDecision::ClearOut,
        Some(Region::Region2) if view.presence_clear => ClearOutDecision::ClearOut,
        Some(Region::Region2) => ClearOutDecision::HoldLaterally,
        Some(Region::Region3) => ClearOutDecision::PassiveGaze,
    }
}

impl Checker {
    pub fn new(header: &TraceHeader) -> Self {
        let tasks = header
            .robots
            .iter()
            .filter(|r| r.team == Team::Home)
            .filter_map(|r| r.task.map(|t| (r.id, (t, t))))
            .collect();
        let goalkeepers = header
            .robots
            .iter()
            .filter(|r| r.team == Team::Home && r.role == Role::Goalkeeper)
            .map(|r| r.id)
            .collect();
        Self {
            header: header.clone(),
            tasks,
            goalkeepers,
            occupancy_since: [None, None],
        }
    }

    fn strikers(&self, t: f64, out: &mut Vec<Violation>) {
        let attackers: Vec<RobotId> = self
            .tasks
            .iter()
            .filter(|(_, (eff, base))| *eff == Task::Attack || *base == Task::Attack)
            .map(|(id, _)| *id)
            .collect();
        if attackers.len() > 1 {
            out.push(Violation {
                t,
                invariant: Invariant::StrikerUniqueness,
                robot: None,
                detail: format!("robots {attackers:?} hold Attack"),
            });
        }
    }

    /// Checks one record; violation records themselves are ignored.
    pub fn observe(&mut self, rec: &TraceRecord) -> Vec<Violation> {
        let mut out = Vec::new();
        let t = rec.t;
        match &rec.body {
            RecordBody::Tick { robots, goalie, .. } => {
                let mut changed = false;
                for r in robots {
                    if let (Some(task), Some(base)) = (r.task, r.base_task) {
                        if self.tasks.insert(r.id, (task, base)) != Some((task, base)) {
                            changed = true;
                        }
                    }
                    for m in &r.inbox {
                        let age = t - m.send_time;
                        if age > self.header.staleness_horizon + EPS || age < -EPS {
                            out.push(Violation {
                                t,
                                invariant: Invariant::Staleness,
                                robot: Some(r.id),
                                detail: format!("message from {} aged {age:.3} s", m.sender),
                            });
                        }
                    }
                }
                if changed {
                    self.strikers(t, &mut out);
                }
                for id in &self.goalkeepers {
                    if let Some((eff, base)) = self.tasks.get(id) {
                        if *eff != Task::KeepGoal || *base != Task::KeepGoal {
                            out.push(Violation {
                                t,
                                invariant: Invariant::GoalkeeperConstancy,
                                robot: Some(*id),
                                detail: format!("goalkeeper holds {eff:?}"),
                            });
                        }
                    }
                }
                if let Some(g) = goalie {
                    let expected = expected_clearout(&g.view, &self.header.field);
                    if g.view.decision != expected {
                        out.push(Violation {
                            t,
                            invariant: Invariant::RegionConsistency,
                            robot: Some(g.robot),
                            detail: format!("decided {:?}, region implies {expected:?}", g.view.decision),
                        });
                    }
                }
                self.overdue_occupancy(t, &mut out);
            }
            RecordBody::TaskChange {
                robot,
                to,
                base_to,
                ..
            } => {
                self.tasks.insert(*robot, (*to, *base_to));
                if self.goalkeepers.contains(robot) {
                    out.push(Violation {
                        t,
                        invariant: Invariant::GoalkeeperConstancy,
                        robot: Some(*robot),
                        detail: format!("goalkeeper changed task to {to:?}"),
                    });
                }
                self.strikers(t, &mut out);
            }
            RecordBody::Message {
                from,
                msg: MessageKind::Request,
                sender_task,
                ..
            } if *sender_task != Task::Defend => {
                out.push(Violation {
                    t,
                    invariant: Invariant::InitiationDirection,
                    robot: Some(*from),
                    detail: format!("request sent while holding {sender_task:?}"),
                });
            }
            RecordBody::Event(ev) => self.illegal_defense(t, ev, &mut out),
            _ => {}
        }
        out
    }

    fn overdue_occupancy(&self, t: f64, out: &mut Vec<Violation>) {
        let limit = self.header.illegal_defense_limit + self.header.dt;
        for (i, since) in self.occupancy_since.iter().enumerate() {
            if let Some(since) = since {
                if t - since > limit + EPS {
                    out.push(Violation {
                        t,
                        invariant: Invariant::IllegalDefenseTiming,
                        robot: None,
                        detail: format!("team {i} double occupancy since {since:.2} s not penalized"),
                    });
                }
            }
        }
    }

    fn illegal_defense(&mut self, t: f64, ev: &Event, out: &mut Vec<Violation>) {
        match *ev {
            Event::DoubleOccupancyBegin { team } => {
                // The timer already holds one step when the begin event is logged.
                self.occupancy_since[team.index()] = Some(t - self.header.dt);
            }
            Event::DoubleOccupancyEnd { team, .. } => {
                self.occupancy_since[team.index()] = None;
            }
            Event::IllegalDefense {
                team,
                robot,
                occupied_for,
            } => {
                let limit = self.header.illegal_defense_limit;
                let dt = self.header.dt;
                let logged = self.occupancy_since[team.index()].map(|s| t - s);
                let consistent = logged.is_some_and(|d| (d - occupied_for).abs() <= EPS);
                if !(occupied_for > limit && occupied_for <= limit + dt + EPS && consistent) {
                    out.push(Violation {
                        t,
                        invariant: Invariant::IllegalDefenseTiming,
                        robot: Some(robot),
                        detail: format!("fired after {occupied_for:.3} s, logged occupancy {logged:?}"),
                    });
                }
            }
            _ => {}
        }
    }
}

/// Offline check of a whole trace. Violation records in the input are
/// skipped; the report is recomputed from the other records.
pub fn check_trace(trace: &Trace) -> Vec<Violation> {
    let mut checker = Checker::new(&trace.header);
    trace
        .records
        .iter()
        .filter(|r| !matches!(r.body, RecordBody::Violation { .. }))
        .flat_map(|r| checker.observe(r))
        .collect()
}
