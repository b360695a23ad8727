//! Task manager: task assignment among field players and goalkeeper
//! clear-out coordination.
//!
//! Field players hold a *base task* (Attack, Defend, or ChangeTask while
//! handing the Attack task over) that only changes through the negotiation
//! handshake, vacancy adoption or egress. A clear-out announcement from the
//! goalkeeper overrides the effective task with WaitClearOut without touching
//! the base task, so at most one base Attack exists at any time.

mod clearout;
mod cost;
mod manager;
mod vote;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::sim::RobotId;

pub use clearout::{clearout_decision, dive_signal, ClearOutDecision};
pub use cost::{desired_task, is_better_positioned, possession_cost, PlayerView};
pub use manager::{
    initial_tasks, Cause, ClearOutView, ManagerContext, NegotiationState, TaskManager, TeamplayLog, TickInput,
    TickOutput,
};
pub use vote::{Vote, VoteBuffer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    Attack,
    Defend,
    KeepGoal,
    ChangeTask,
    WaitClearOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegotiationKind {
    Request,
    Accept,
    Reject,
    Confirm,
}

/// Handshake message addressed to one teammate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegotiationPayload {
    pub kind: NegotiationKind,
    pub to: RobotId,
    pub nonce: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeamplayParams {
    /// When off, tasks stay at their initial assignment and the goalkeeper
    /// never clears out.
    pub enabled: bool,
    /// Consecutive identical decisions required before acting.
    pub confirm_cycles: usize,
    pub negotiation_timeout: f64,
    /// Weight of the behind-ball misalignment (rad) in the possession cost.
    pub alignment_weight: f64,
    /// Minimum ball speed toward the own goal that triggers a dive.
    pub dive_speed_threshold: f64,
    /// Only dive for balls reaching the goal line within this time.
    pub dive_horizon: f64,
}

impl Default for TeamplayParams {
    fn default() -> Self {
        Self {
            enabled: true,
            confirm_cycles: 4,
            negotiation_timeout: 1.0,
            alignment_weight: 0.5,
            dive_speed_threshold: 1.0,
            dive_horizon: 1.5,
        }
    }
}

impl TeamplayParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.confirm_cycles == 0 {
            return Err(ConfigError::Invalid("teamplay: confirm_cycles must be >= 1".into()));
        }
        if !(self.negotiation_timeout > 0.0) {
            return Err(ConfigError::Invalid(
                "teamplay: negotiation_timeout must be positive".into(),
            ));
        }
        if !(self.alignment_weight >= 0.0) {
            return Err(ConfigError::Invalid(
                "teamplay: alignment_weight must be non-negative".into(),
            ));
        }
        Ok(())
    }
}
