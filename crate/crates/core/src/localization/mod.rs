//! Multi-hypothesis pose estimation against a landmark map of the field.
//!
//! A bank starts with one hypothesis per legal placement, follows odometry,
//! reweights on landmark observations and is pruned to a single survivor once
//! one hypothesis dominates long enough.

mod map;
mod sensing;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geometry::{normalize_angle, FieldModel, Pose2D, Vec2};

pub use map::{Landmark, LandmarkKind, LandmarkMap};
pub use sensing::{observe, odometry_between, OdometryDelta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalizationMode {
    /// Robots know their true pose.
    Ideal,
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationParams {
    pub mode: LocalizationMode,
    pub sensor_range: f64,
    /// Half opening angle of the camera, rad.
    pub field_of_view: f64,
    pub detection_probability: f64,
    pub point_sigma_range: f64,
    pub point_sigma_bearing: f64,
    pub line_sigma_range: f64,
    pub line_sigma_bearing: f64,
    /// Fraction of the mean residual applied per update.
    pub correction_gain: f64,
    /// Per-observation lower bound of the log-likelihood.
    pub log_likelihood_floor: f64,
    pub dominance_ratio: f64,
    pub min_age: u32,
    /// Odometry translation noise, m per m travelled.
    pub odometry_sigma: f64,
    /// Gyro noise per tick, rad.
    pub gyro_sigma: f64,
    /// Constant gyro drift, rad/s.
    pub gyro_bias: f64,
    /// Re-create the four placements after a sustained loss of likelihood.
    pub reinit_on_kidnap: bool,
    pub ball_range: f64,
    /// Ball range noise, m per m of distance.
    pub ball_sigma_range: f64,
    pub ball_sigma_bearing: f64,
}

impl Default for LocalizationParams {
    fn default() -> Self {
        Self {
            mode: LocalizationMode::Simulated,
            sensor_range: 4.0,
            field_of_view: 75f64.to_radians(),
            detection_probability: 0.9,
            point_sigma_range: 0.2,
            point_sigma_bearing: 0.05,
            line_sigma_range: 0.15,
            line_sigma_bearing: 0.05,
            correction_gain: 0.2,
            log_likelihood_floor: -8.0,
            dominance_ratio: 5.0,
            min_age: 24,
            odometry_sigma: 0.02,
            gyro_sigma: 0.002,
            gyro_bias: 0.0,
            reinit_on_kidnap: false,
            ball_range: 5.0,
            ball_sigma_range: 0.03,
            ball_sigma_bearing: 0.02,
        }
    }
}

impl LocalizationParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: &str| Err(ConfigError::Invalid(format!("localization: {m}")));
        if !(self.sensor_range > 0.0 && self.ball_range > 0.0) {
            return err("sensor ranges must be positive");
        }
        if !(self.field_of_view > 0.0 && self.field_of_view <= std::f64::consts::PI) {
            return err("field_of_view must be in (0, pi]");
        }
        if !(0.0..=1.0).contains(&self.detection_probability) {
            return err("detection_probability must be in [0, 1]");
        }
        let sigmas = [
            self.point_sigma_range,
            self.point_sigma_bearing,
            self.line_sigma_range,
            self.line_sigma_bearing,
        ];
        if sigmas.iter().any(|s| !(*s > 0.0)) {
            return err("observation sigmas must be positive");
        }
        if !(self.ball_sigma_range >= 0.0 && self.ball_sigma_bearing >= 0.0) {
            return err("ball sigmas must be non-negative");
        }
        if !(self.correction_gain >= 0.0 && self.correction_gain <= 1.0) {
            return err("correction_gain must be in [0, 1]");
        }
        if !(self.dominance_ratio >= 1.0) {
            return err("dominance_ratio must be >= 1");
        }
        if !(self.odometry_sigma >= 0.0 && self.gyro_sigma >= 0.0 && self.gyro_bias.is_finite()) {
            return err("odometry noise must be non-negative");
        }
        Ok(())
    }

    pub fn sigmas(&self, kind: LandmarkKind) -> (f64, f64) {
        match kind {
            LandmarkKind::LineSegment => (self.line_sigma_range, self.line_sigma_bearing),
            _ => (self.point_sigma_range, self.point_sigma_bearing),
        }
    }
}

/// A landmark seen from the robot, egocentric polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub kind: LandmarkKind,
    pub range: f64,
    pub bearing: f64,
    /// Segment end points in the robot frame, for lines.
    pub endpoints: Option<(Vec2, Vec2)>,
}

impl Observation {
    pub fn local_point(&self) -> Vec2 {
        Vec2::from_polar(self.range, self.bearing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub pose: Pose2D,
    pub weight: f64,
    /// Number of prediction ticks survived.
    pub age: u32,
}

/// The four legal start placements in the team frame: both touch lines of the
/// own half facing into the field, the center-circle edge and the front of
/// the goal area facing the opponent goal.
pub fn init_hypotheses(field: &FieldModel) -> Vec<Hypothesis> {
    let quarter = -field.length / 4.0;
    let hw = field.half_width();
    let goal_area_front = -field.half_length() + field.goal_area_depth;
    let poses = [
        Pose2D::new(quarter, hw, -std::f64::consts::FRAC_PI_2),
        Pose2D::new(quarter, -hw, std::f64::consts::FRAC_PI_2),
        Pose2D::new(-field.center_circle_radius, 0.0, 0.0),
        Pose2D::new(goal_area_front, 0.0, 0.0),
    ];
    poses
        .iter()
        .map(|&pose| Hypothesis {
            pose,
            weight: 0.25,
            age: 0,
        })
        .collect()
}

/// Composes every hypothesis with the body-frame motion. Weights are kept.
pub fn predict(bank: &mut [Hypothesis], odo: &OdometryDelta) {
    for h in bank.iter_mut() {
        h.pose = h.pose.compose(odo.dx, odo.dy, odo.dtheta);
        h.age = h.age.saturating_add(1);
    }
}

/// Reweights by the observation likelihood and nudges each pose toward the
/// associated landmarks. Returns the per-hypothesis log-likelihoods.
pub fn update(
    bank: &mut [Hypothesis],
    observations: &[Observation],
    map: &LandmarkMap,
    params: &LocalizationParams,
) -> Vec<f64> {
    if observations.is_empty() || bank.is_empty() {
        return vec![0.0; bank.len()];
    }
    let mut log_liks = Vec::with_capacity(bank.len());
    for h in bank.iter_mut() {
        let mut log_lik = 0.0;
        let mut shift = Vec2::ZERO;
        let mut turn = 0.0;
        let mut turn_weight = 0.0;
        for obs in observations {
            let Some((_, predicted)) = map.associate(h.pose, obs) else {
                log_lik += params.log_likelihood_floor;
                continue;
            };
            let (sr, sb) = params.sigmas(obs.kind);
            let local = h.pose.inverse_transform_point(predicted);
            let dr = obs.range - local.norm();
            let db = normalize_angle(obs.bearing - local.angle());
            let ll = -0.5 * ((dr / sr).powi(2) + (db / sb).powi(2));
            log_lik += ll.max(params.log_likelihood_floor);
            shift = shift + (predicted - h.pose.transform_point(obs.local_point()));
            // A small position error swings the bearing of a close landmark
            // wildly, so near landmarks barely steer the heading.
            let r2 = obs.range * obs.range;
            let w = r2 / (r2 + 1.0);
            turn += w * db;
            turn_weight += w;
        }
        let n = observations.len() as f64;
        let g = params.correction_gain;
        let dtheta = if turn_weight > 0.0 { turn / turn_weight } else { 0.0 };
        h.pose = Pose2D::new(
            h.pose.x + g * shift.x / n,
            h.pose.y + g * shift.y / n,
            h.pose.theta - g * dtheta,
        );
        log_liks.push(log_lik);
    }
    let logs: Vec<f64> = bank
        .iter()
        .zip(&log_liks)
        .map(|(h, ll)| h.weight.max(f64::MIN_POSITIVE).ln() + ll)
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    for (h, l) in bank.iter_mut().zip(&logs) {
        h.weight = (l - max).exp() / total;
    }
    log_liks
}

/// Index of the highest weight, ties to the lowest index.
pub fn best_index(bank: &[Hypothesis]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, h) in bank.iter().enumerate() {
        if best.is_none_or(|b| h.weight > bank[b].weight) {
            best = Some(i);
        }
    }
    best
}

/// Hypothesis bank with winner-take-all pruning.
#[derive(Debug, Clone)]
pub struct HypothesisBank {
    pub hypotheses: Vec<Hypothesis>,
    /// Consecutive ticks the leader has dominated the runner-up.
    pub dominance_streak: u32,
    low_likelihood_streak: u32,
}

impl HypothesisBank {
    pub fn new(field: &FieldModel) -> Self {
        Self::from_hypotheses(init_hypotheses(field))
    }

    pub fn from_hypotheses(hypotheses: Vec<Hypothesis>) -> Self {
        Self {
            hypotheses,
            dominance_streak: 0,
            low_likelihood_streak: 0,
        }
    }

    pub fn best(&self) -> Pose2D {
        best_index(&self.hypotheses).map_or(Pose2D::default(), |i| self.hypotheses[i].pose)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.hypotheses.iter().map(|h| h.weight).collect()
    }

    /// Deletes all but the leader once it held `ratio` times the runner-up's
    /// weight for `min_age` consecutive calls. Returns the best pose.
    pub fn prune_and_select(&mut self, min_age: u32, ratio: f64) -> Pose2D {
        let Some(best) = best_index(&self.hypotheses) else {
            return Pose2D::default();
        };
        if self.hypotheses.len() > 1 {
            let leader = self.hypotheses[best].weight;
            let second = self
                .hypotheses
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != best)
                .map(|(_, h)| h.weight)
                .fold(0.0, f64::max);
            if leader >= ratio * second {
                self.dominance_streak += 1;
            } else {
                self.dominance_streak = 0;
            }
            if self.dominance_streak >= min_age {
                let mut survivor = self.hypotheses[best];
                survivor.weight = 1.0;
                self.hypotheses = vec![survivor];
            }
        }
        self.best()
    }
}

/// One robot's localization pipeline.
#[derive(Debug, Clone)]
pub struct Localizer {
    pub bank: HypothesisBank,
    map: LandmarkMap,
    field: FieldModel,
    params: LocalizationParams,
}

/// Mean per-observation log-likelihood below which the survivor counts as lost.
const KIDNAP_LOG_LIKELIHOOD: f64 = -6.0;

impl Localizer {
    pub fn new(field: &FieldModel, params: LocalizationParams) -> Self {
        Self {
            bank: HypothesisBank::new(field),
            map: LandmarkMap::new(field),
            field: field.clone(),
            params,
        }
    }

    /// Starts from a given bank instead of the four placements.
    pub fn with_hypotheses(field: &FieldModel, params: LocalizationParams, hypotheses: Vec<Hypothesis>) -> Self {
        Self {
            bank: HypothesisBank::from_hypotheses(hypotheses),
            ..Self::new(field, params)
        }
    }

    pub fn map(&self) -> &LandmarkMap {
        &self.map
    }

    pub fn step(&mut self, odo: &OdometryDelta, observations: &[Observation]) -> Pose2D {
        predict(&mut self.bank.hypotheses, odo);
        let log_liks = update(&mut self.bank.hypotheses, observations, &self.map, &self.params);
        if self.params.reinit_on_kidnap && !observations.is_empty() {
            let best = log_liks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if best / (observations.len() as f64) < KIDNAP_LOG_LIKELIHOOD {
                self.bank.low_likelihood_streak += 1;
            } else {
                self.bank.low_likelihood_streak = 0;
            }
            if self.bank.low_likelihood_streak >= self.params.min_age {
                self.bank = HypothesisBank::new(&self.field);
            }
        }
        self.bank
            .prune_and_select(self.params.min_age, self.params.dominance_ratio)
    }
}
