use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("ball is outside the clear-out regions")]
    BallOutsideClearOutRegions,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("command for unknown or duplicate robot {0}")]
    InvalidCommand(u8),
    #[error("robot {0} does not exist or cannot take this action")]
    InvalidRobot(u8),
    #[error("invalid time step {0}")]
    InvalidStep(f64),
    #[error("ball is out of the kicker's reach")]
    NoContact,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommsError {
    #[error("robot {0} already broadcast in this bus period")]
    RateExceeded(u8),
    #[error("robot {0} is not on the bus")]
    UnknownSender(u8),
}
