//! Scenario files: a TOML document with the seed, duration, roster, fault
//! script and optional parameter sections. Every parameter section falls back
//! to the documented defaults; `seed`, `duration` and `robots` are required.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::BehaviorParams;
use crate::comms::BusConfig;
use crate::geometry::{FieldModel, Pose2D, Vec2};
use crate::localization::LocalizationParams;
use crate::sim::{GamePhase, RobotId, Role, SimConfig, Team};
use crate::teamplay::TeamplayParams;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Behavior of an opponent robot. Opponents never run the coordination stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Script {
    /// Stands still.
    #[default]
    Static,
    /// Walks to the ball and kicks it toward the home goal.
    Chaser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub id: RobotId,
    pub team: Team,
    pub role: Role,
    /// Field-frame `[x, y, theta]`.
    pub pose: [f64; 3],
    /// Away robots only.
    #[serde(default)]
    pub script: Option<Script>,
}

impl RobotSpec {
    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.pose[0], self.pose[1], self.pose[2])
    }
}

/// Timed fault-injection directive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Fault {
    Fall {
        at: f64,
        robot: RobotId,
        duration: f64,
    },
    Penalize {
        at: f64,
        robot: RobotId,
        duration: f64,
    },
    PlaceBall {
        at: f64,
        position: [f64; 2],
        #[serde(default)]
        velocity: [f64; 2],
        /// A pinned ball cannot be kicked or moved by the simulation.
        #[serde(default)]
        pinned: bool,
    },
    /// Overrides the loss probability of one directed link.
    LinkLoss {
        at: f64,
        from: RobotId,
        to: RobotId,
        probability: f64,
    },
}

impl Fault {
    pub fn at(&self) -> f64 {
        match *self {
            Fault::Fall { at, .. }
            | Fault::Penalize { at, .. }
            | Fault::PlaceBall { at, .. }
            | Fault::LinkLoss { at, .. } => at,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPhase {
    /// Ready, then Set, then Playing.
    #[default]
    Ready,
    Playing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    /// Simulated seconds.
    pub duration: f64,
    #[serde(default)]
    pub start_phase: StartPhase,
    #[serde(default = "default_kickoff")]
    pub kickoff: Team,
    #[serde(default)]
    pub ball: [f64; 2],
    #[serde(default)]
    pub ball_pinned: bool,
    #[serde(default)]
    pub field: FieldModel,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub bus: BusConfig,
    #[serde(default)]
    pub localization: LocalizationParams,
    #[serde(default)]
    pub behavior: BehaviorParams,
    #[serde(default)]
    pub teamplay: TeamplayParams,
    pub robots: Vec<RobotSpec>,
    #[serde(default)]
    pub faults: Vec<Fault>,
}

fn default_kickoff() -> Team {
    Team::Home
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            let before = &text[..offset.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            ScenarioError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn start_phase(&self) -> GamePhase {
        match self.start_phase {
            StartPhase::Ready => GamePhase::Ready,
            StartPhase::Playing => GamePhase::Playing,
        }
    }

    pub fn ball(&self) -> Vec2 {
        Vec2::new(self.ball[0], self.ball[1])
    }

    /// `(id, role)` of one team, sorted by id.
    pub fn roster(&self, team: Team) -> Vec<(RobotId, Role)> {
        let mut r: Vec<_> = self
            .robots
            .iter()
            .filter(|s| s.team == team)
            .map(|s| (s.id, s.role))
            .collect();
        r.sort_by_key(|(id, _)| *id);
        r
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |m: String| Err(ScenarioError::Invalid(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return invalid("duration must be positive".into());
        }
        if !self.ball.iter().all(|v| v.is_finite()) {
            return invalid("ball position must be finite".into());
        }
        let config = |r: Result<(), crate::error::ConfigError>| {
            r.map_err(|e| ScenarioError::Invalid(e.to_string()))
        };
        config(self.field.validate())?;
        config(self.sim.validate())?;
        config(self.bus.validate())?;
        config(self.localization.validate())?;
        config(self.behavior.validate())?;
        config(self.teamplay.validate())?;

        if self.robots.is_empty() {
            return invalid("robots: at least one robot is required".into());
        }
        let mut ids: Vec<RobotId> = self.robots.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return invalid("robots: duplicate robot id".into());
        }
        for team in [Team::Home, Team::Away] {
            let roster = self.roster(team);
            if roster.len() > 3 {
                return invalid(format!("robots: more than three robots on team {team:?}"));
            }
            if roster.iter().filter(|(_, r)| *r == Role::Goalkeeper).count() > 1 {
                return invalid(format!("robots: more than one goalkeeper on team {team:?}"));
            }
        }
        for r in &self.robots {
            if !r.pose.iter().all(|v| v.is_finite()) {
                return invalid(format!("robots: pose of robot {} must be finite", r.id));
            }
            if r.team == Team::Home && r.script.is_some() {
                return invalid(format!("robots: robot {} is on the home team and cannot be scripted", r.id));
            }
        }
        let known = |id: RobotId| self.robots.iter().any(|r| r.id == id);
        for f in &self.faults {
            if !(f.at() >= 0.0 && f.at().is_finite()) {
                return invalid("faults: time must be non-negative".into());
            }
            match *f {
                Fault::Fall { robot, duration, .. } | Fault::Penalize { robot, duration, .. } => {
                    if !known(robot) {
                        return invalid(format!("faults: unknown robot {robot}"));
                    }
                    if !(duration > 0.0 && duration.is_finite()) {
                        return invalid("faults: duration must be positive".into());
                    }
                }
                Fault::PlaceBall { position, velocity, .. } => {
                    if !position.iter().chain(velocity.iter()).all(|v| v.is_finite()) {
                        return invalid("faults: ball placement must be finite".into());
                    }
                }
                Fault::LinkLoss { from, to, probability, .. } => {
                    if !known(from) || !known(to) {
                        return invalid("faults: link between unknown robots".into());
                    }
                    if !(0.0..=1.0).contains(&probability) {
                        return invalid("faults: probability must be in [0, 1]".into());
                    }
                }
            }
        }
        Ok(())
    }
}
