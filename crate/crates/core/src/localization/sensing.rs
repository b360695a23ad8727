use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, Pose2D};

use super::{Landmark, LandmarkMap, LocalizationParams, Observation};

/// Body-frame motion between two ticks, heading change from the gyro.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdometryDelta {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

fn gaussian<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    Normal::new(0.0, sigma.max(0.0))
        .map(|n| n.sample(rng))
        .unwrap_or(0.0)
}

/// Landmarks detected from the true pose, with range and bearing noise scaled
/// by `noise_scale` (0 gives exact measurements).
pub fn observe<R: Rng>(
    pose: Pose2D,
    map: &LandmarkMap,
    params: &LocalizationParams,
    noise_scale: f64,
    rng: &mut R,
) -> Vec<Observation> {
    let mut out = Vec::new();
    for lm in &map.landmarks {
        let local = pose.inverse_transform_point(lm.seen_from(pose.position()));
        let range = local.norm();
        let bearing = local.angle();
        if range < 0.05 || range > params.sensor_range || bearing.abs() > params.field_of_view {
            continue;
        }
        let detect: f64 = rng.random();
        if detect >= params.detection_probability {
            continue;
        }
        let (sr, sb) = params.sigmas(lm.kind());
        let range = (range + gaussian(rng, sr * noise_scale)).max(0.01);
        let bearing = normalize_angle(bearing + gaussian(rng, sb * noise_scale));
        let endpoints = match *lm {
            Landmark::Line { from, to } => Some((
                pose.inverse_transform_point(from),
                pose.inverse_transform_point(to),
            )),
            Landmark::Point { .. } => None,
        };
        out.push(Observation {
            kind: lm.kind(),
            range,
            bearing,
            endpoints,
        });
    }
    out
}

/// Noisy odometry for the true motion from `prev` to `next` over `dt`.
pub fn odometry_between<R: Rng>(
    prev: Pose2D,
    next: Pose2D,
    dt: f64,
    params: &LocalizationParams,
    rng: &mut R,
) -> OdometryDelta {
    let local = prev.inverse_transform_point(next.position());
    let travelled = local.norm();
    let dtheta = normalize_angle(next.theta - prev.theta);
    OdometryDelta {
        dx: local.x + gaussian(rng, params.odometry_sigma * travelled),
        dy: local.y + gaussian(rng, params.odometry_sigma * travelled),
        dtheta: dtheta + params.gyro_bias * dt + gaussian(rng, params.gyro_sigma),
    }
}
