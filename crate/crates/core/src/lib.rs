pub mod behavior;
pub mod checker;
pub mod comms;
pub mod error;
pub mod geometry;
pub mod localization;
pub mod replay;
pub mod runner;
pub mod scenario;
pub mod sim;
pub mod teamplay;
pub mod trace;
