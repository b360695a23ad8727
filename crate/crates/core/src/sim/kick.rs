use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{BallState, SimConfig};
use crate::error::SimError;
use crate::geometry::{Pose2D, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickStrength {
    Dribble,
    Kick,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickCommand {
    /// Field-frame direction in radians.
    pub direction: f64,
    pub strength: KickStrength,
}

/// Sets the ball rolling if it is within reach of the kicker's foot point.
pub fn apply_kick<R: Rng>(
    ball: &BallState,
    kicker: &Pose2D,
    kick: KickCommand,
    config: &SimConfig,
    rng: &mut R,
) -> Result<BallState, SimError> {
    let foot = kicker.transform_point(Vec2::new(config.foot_offset, 0.0));
    if foot.distance(ball.position) > config.kick_reach {
        return Err(SimError::NoContact);
    }
    let speed = match kick.strength {
        KickStrength::Dribble => config.dribble_speed,
        KickStrength::Kick => config.kick_speed,
    };
    let mut direction = kick.direction;
    if config.aim_noise_sigma > 0.0 {
        let noise = Normal::new(0.0, config.aim_noise_sigma).expect("sigma is positive");
        direction += noise.sample(rng);
    }
    Ok(BallState {
        position: ball.position,
        velocity: Vec2::from_polar(speed, direction),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn ball_ahead() -> BallState {
        // Kicker at the origin facing +x; foot point at (0.2, 0).
        BallState::at_rest(Vec2::new(0.35, 0.0))
    }

    #[test]
    fn kick_mapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = SimConfig::default();
        let out = apply_kick(
            &ball_ahead(),
            &Pose2D::default(),
            KickCommand { direction: 0.0, strength: KickStrength::Kick },
            &cfg,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.velocity, Vec2::new(2.5, 0.0));
    }

    #[test]
    fn dribble_mapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = SimConfig::default();
        let out = apply_kick(
            &ball_ahead(),
            &Pose2D::default(),
            KickCommand { direction: FRAC_PI_2, strength: KickStrength::Dribble },
            &cfg,
            &mut rng,
        )
        .unwrap();
        assert!(out.velocity.x.abs() < 1e-12);
        assert!((out.velocity.y - 0.8).abs() < 1e-12);
    }

    #[test]
    fn out_of_reach() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ball = BallState::at_rest(Vec2::new(1.0, 0.0));
        let r = apply_kick(
            &ball,
            &Pose2D::default(),
            KickCommand { direction: 0.0, strength: KickStrength::Kick },
            &SimConfig::default(),
            &mut rng,
        );
        assert_eq!(r, Err(SimError::NoContact));
    }
}
