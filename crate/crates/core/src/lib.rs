//! Deterministic headless house simulator for an embodied first-person agent.

pub mod evaluation;
pub mod geometry;
pub mod interaction;
pub mod kinematics;
pub mod observation;
pub mod physics;
pub mod samples;
pub mod scenario;
pub mod scene;
pub mod server;
pub mod trajectory;

#[cfg(test)]
mod test_fixtures;
