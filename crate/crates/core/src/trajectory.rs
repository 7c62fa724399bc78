//! Demonstrations: recording, replay, persistence, and interaction extraction.
//!
//! A demonstration stores the start state, then every action with the full
//! state it produced, plus the interaction-level events in order. Files are
//! compact JSON; floats are written in shortest round-trip form and parsed
//! exactly, so `decode(encode(d)) == d` bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interaction::{InteractionEvent, StateChange};
use crate::kinematics::{apply_action, Action, Event, StepConfig};
use crate::scene::{validate_world, House, ValidationReport, WorldState};

pub const TRAJECTORY_FORMAT: &str = "housesim-traj/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub action: Action,
    pub state: WorldState,
}

/// An interaction event and the index of the step that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordedEvent {
    pub step: usize,
    pub event: InteractionEvent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub format: String,
    pub house_id: String,
    pub config: StepConfig,
    pub start: WorldState,
    pub steps: Vec<Step>,
    pub events: Vec<RecordedEvent>,
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("start state is invalid: {} violation(s)", .0.violations.len())]
    InvalidStart(ValidationReport),
    #[error("malformed trajectory file: {0}")]
    MalformedFile(String),
    #[error("unsupported trajectory format `{0}`")]
    UnsupportedVersion(String),
    #[error("trajectory is for house `{found}`, not `{expected}`")]
    HouseMismatch { expected: String, found: String },
}

/// Where a recorded demonstration first disagrees with its own replay.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Divergence {
    #[error("state after step {0} differs from replay")]
    State(usize),
    #[error("recorded events differ from replay")]
    Events,
    #[error("demonstration has {recorded} steps, replay produced {replayed}")]
    Length { recorded: usize, replayed: usize },
}

impl Demonstration {
    /// An empty demonstration starting at `start`.
    pub fn new(house_id: &str, config: StepConfig, start: WorldState) -> Self {
        Self {
            format: TRAJECTORY_FORMAT.to_string(),
            house_id: house_id.to_string(),
            config,
            start,
            steps: Vec::new(),
            events: Vec::new(),
        }
    }

    /// Latest state: the last step's, or the start.
    pub fn last_state(&self) -> &WorldState {
        self.steps.last().map(|s| &s.state).unwrap_or(&self.start)
    }

    /// Applies `action` to the latest state and records the result.
    pub fn push(&mut self, house: &House, action: Action) -> Vec<Event> {
        let (next, events) = apply_action(house, self.last_state(), action, &self.config);
        let index = self.steps.len();
        self.events.extend(
            events.iter().filter_map(Event::interaction).map(|event| RecordedEvent { step: index, event }),
        );
        self.steps.push(Step { action, state: next });
        events
    }

    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }

    /// Re-runs the recorded actions from the start and compares every state and event.
    pub fn verify(&self, house: &House) -> Result<(), Divergence> {
        let mut replayed = Demonstration::new(&self.house_id, self.config.clone(), self.start.clone());
        for (i, step) in self.steps.iter().enumerate() {
            replayed.push(house, step.action);
            if replayed.steps[i].state != step.state {
                return Err(Divergence::State(i));
            }
        }
        if replayed.steps.len() != self.steps.len() {
            return Err(Divergence::Length { recorded: self.steps.len(), replayed: replayed.steps.len() });
        }
        if replayed.events != self.events {
            return Err(Divergence::Events);
        }
        Ok(())
    }
}

/// Folds `actions` over `start`, recording every state and interaction event.
pub fn replay(
    house: &House,
    start: &WorldState,
    actions: &[Action],
    config: &StepConfig,
) -> Result<Demonstration, TrajectoryError> {
    let mut report = validate_world(house, start, config);
    if let Err(e) = config.validate_for(house) {
        report.violations.push(crate::scene::Violation {
            room: String::new(),
            code: crate::scene::ViolationCode::DoorTooNarrow,
            subject: "config".to_string(),
            detail: e.to_string(),
        });
    }
    if !report.is_valid() {
        return Err(TrajectoryError::InvalidStart(report));
    }
    let mut demo = Demonstration::new(&house.house_id, config.clone(), start.clone());
    for &a in actions {
        demo.push(house, a);
    }
    Ok(demo)
}

/// The ordered pick / place / set-state list of a demonstration.
///
/// Open-fraction adjustments only count where they cross the container's
/// threshold: a run of look-down steps that opens a cupboard yields one
/// `Opened`, and steps that stay on one side of the threshold yield nothing.
pub fn extract_interactions(demo: &Demonstration) -> Vec<InteractionEvent> {
    coalesce(demo.events.iter().map(|r| &r.event))
}

/// Filtering and threshold coalescing over a raw event sequence.
pub fn coalesce<'a>(events: impl IntoIterator<Item = &'a InteractionEvent>) -> Vec<InteractionEvent> {
    let mut out = Vec::new();
    for e in events {
        match e {
            InteractionEvent::SetState { id, state } => match state.open_before_after() {
                Some((false, true)) => {
                    out.push(InteractionEvent::SetState { id: id.clone(), state: StateChange::Opened })
                }
                Some((true, false)) => {
                    out.push(InteractionEvent::SetState { id: id.clone(), state: StateChange::Closed })
                }
                Some(_) => {}
                None => out.push(e.clone()),
            },
            InteractionEvent::Pick { .. } | InteractionEvent::Place { .. } => out.push(e.clone()),
            _ => {}
        }
    }
    out
}

pub fn encode(demo: &Demonstration) -> Vec<u8> {
    serde_json::to_vec(demo).expect("demonstrations always serialize")
}

pub fn decode(bytes: &[u8]) -> Result<Demonstration, TrajectoryError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| TrajectoryError::MalformedFile(e.to_string()))?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(TRAJECTORY_FORMAT) => {}
        Some(other) => return Err(TrajectoryError::UnsupportedVersion(other.to_string())),
        None => return Err(TrajectoryError::MalformedFile("missing `format`".to_string())),
    }
    serde_json::from_value(value).map_err(|e| TrajectoryError::MalformedFile(e.to_string()))
}
