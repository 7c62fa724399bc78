//! The nine agent actions and the state transition that applies them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{heading, normalize_degrees, Point2, Vec3};
use crate::interaction::{self, InteractionEvent, StateChange};
use crate::physics;
use crate::scene::{House, ObjectClass, WorldState};

/// Resolution of the motion clamp, meters.
pub const CLAMP_RESOLUTION: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    MoveForward,
    MoveBack,
    StrafeRight,
    StrafeLeft,
    LookLeft,
    LookRight,
    LookUp,
    LookDown,
    Interact,
}

impl Action {
    pub const ALL: [Action; 9] = [
        Action::MoveForward,
        Action::MoveBack,
        Action::StrafeRight,
        Action::StrafeLeft,
        Action::LookLeft,
        Action::LookRight,
        Action::LookUp,
        Action::LookDown,
        Action::Interact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::MoveForward => "move-forward",
            Action::MoveBack => "move-back",
            Action::StrafeRight => "strafe-right",
            Action::StrafeLeft => "strafe-left",
            Action::LookLeft => "look-left",
            Action::LookRight => "look-right",
            Action::LookUp => "look-up",
            Action::LookDown => "look-down",
            Action::Interact => "interact",
        }
    }

    /// Heading offset for translations, `None` for every other action.
    pub fn translation_offset(self) -> Option<f64> {
        match self {
            Action::MoveForward => Some(0.0),
            Action::StrafeRight => Some(90.0),
            Action::MoveBack => Some(180.0),
            Action::StrafeLeft => Some(270.0),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown action `{0}`")]
pub struct UnknownAction(pub String);

impl FromStr for Action {
    type Err = UnknownAction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| UnknownAction(s.to_string()))
    }
}

/// Per-step magnitudes and agent dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepConfig {
    pub step_length: f64,
    pub yaw_step: f64,
    pub pitch_step: f64,
    pub open_step: f64,
    pub max_interact_range: f64,
    pub agent_radius: f64,
    pub eye_height: f64,
    /// Held-object center relative to the agent: x right, y up from the floor, z forward.
    pub carry_offset: Vec3,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            step_length: 0.25,
            yaw_step: 15.0,
            pitch_step: 15.0,
            open_step: 0.2,
            max_interact_range: 1.5,
            agent_radius: 0.2,
            eye_height: 1.6,
            carry_offset: Vec3::new(0.0, 1.2, 0.5),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("`{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("agent diameter {diameter} does not fit door width {door}")]
    AgentTooWide { diameter: f64, door: f64 },
}

impl StepConfig {
    /// Checks magnitudes and that the agent fits through every door of `house`.
    pub fn validate_for(&self, house: &House) -> Result<(), ConfigError> {
        let fields = [
            ("step_length", self.step_length),
            ("yaw_step", self.yaw_step),
            ("pitch_step", self.pitch_step),
            ("open_step", self.open_step),
            ("max_interact_range", self.max_interact_range),
            ("agent_radius", self.agent_radius),
            ("eye_height", self.eye_height),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::NonPositive(name));
            }
        }
        if let Some(door) = house.narrowest_door() {
            if self.agent_radius >= door / 2.0 {
                return Err(ConfigError::AgentTooWide { diameter: 2.0 * self.agent_radius, door });
            }
        }
        Ok(())
    }
}

/// Unit floor-plane vector at `yaw + offset` degrees (0 = +Z, 90 = +X).
pub fn heading_vector(yaw: f64, offset: f64) -> Point2 {
    heading(yaw + offset)
}

/// Everything an action did, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Event {
    Moved { x: f64, z: f64, distance: f64 },
    Blocked { requested: f64, travelled: f64 },
    Turned { yaw: f64, pitch: f64 },
    ContainerAdjusted { id: String, from: f64, to: f64, threshold: f64 },
    Disengaged { id: String },
    Interaction { event: InteractionEvent },
}

impl Event {
    /// The interaction-level view of this event, if it has one.
    pub fn interaction(&self) -> Option<InteractionEvent> {
        match self {
            Event::ContainerAdjusted { id, from, to, threshold } => Some(InteractionEvent::SetState {
                id: id.clone(),
                state: StateChange::Adjust { from: *from, to: *to, threshold: *threshold },
            }),
            Event::Disengaged { id } => Some(InteractionEvent::Disengaged { id: id.clone() }),
            Event::Interaction { event } => Some(event.clone()),
            _ => None,
        }
    }
}

/// Largest quantized distance up to `step` the agent can move along `dir`.
fn clamped_travel(house: &House, world: &WorldState, config: &StepConfig, dir: Point2) -> f64 {
    let from = world.agent.position;
    let contact = physics::free_travel(house, world, config, from, dir);
    let step = config.step_length;
    if contact >= step && physics::agent_free_at(house, world, config, from.add(dir.scale(step))) {
        return step;
    }
    let limit = contact.min(step);
    // Slack absorbs rounding in `contact`; the static check below rejects overshoot.
    let mut k = (limit / CLAMP_RESOLUTION + 1e-6).floor() as i64;
    while k > 0 {
        let d = k as f64 * CLAMP_RESOLUTION;
        if physics::agent_free_at(house, world, config, from.add(dir.scale(d))) {
            return d;
        }
        k -= 1;
    }
    0.0
}

/// Applies one action. Never fails: blocked motion is clamped and reported.
pub fn apply_action(
    house: &House,
    world: &WorldState,
    action: Action,
    config: &StepConfig,
) -> (WorldState, Vec<Event>) {
    let mut w = world.clone();
    let mut events = Vec::new();

    if let Some(offset) = action.translation_offset() {
        if let Some(id) = w.agent.engaged.take() {
            events.push(Event::Disengaged { id });
        }
        let dir = heading_vector(w.agent.yaw, offset);
        let travelled = clamped_travel(house, &w, config, dir);
        if travelled > 0.0 {
            w.agent.position = w.agent.position.add(dir.scale(travelled));
            events.push(Event::Moved { x: w.agent.position.x, z: w.agent.position.z, distance: travelled });
        }
        if travelled < config.step_length {
            events.push(Event::Blocked { requested: config.step_length, travelled });
        }
        return (w, events);
    }

    match action {
        Action::LookLeft | Action::LookRight => {
            if let Some(id) = w.agent.engaged.take() {
                events.push(Event::Disengaged { id });
            }
            let delta = if action == Action::LookLeft { -config.yaw_step } else { config.yaw_step };
            w.agent.yaw = normalize_degrees(w.agent.yaw + delta);
            events.push(Event::Turned { yaw: w.agent.yaw, pitch: w.agent.pitch });
        }
        Action::LookUp | Action::LookDown => {
            let up = action == Action::LookUp;
            let engaged = w.agent.engaged.clone().and_then(|id| {
                let o = w.objects.get(&id)?;
                let ty = house.object_type(&o.type_id)?;
                (ty.class == ObjectClass::Openable).then(|| (id, ty.threshold()))
            });
            match engaged {
                Some((id, threshold)) => {
                    let o = w.objects.get_mut(&id).expect("engaged object exists");
                    let from = o.open_fraction.unwrap_or(0.0);
                    // Up moves towards closure, down towards open.
                    let to = if up {
                        (from - config.open_step).max(0.0)
                    } else {
                        (from + config.open_step).min(1.0)
                    };
                    o.open_fraction = Some(to);
                    events.push(Event::ContainerAdjusted { id, from, to, threshold });
                }
                None => {
                    let delta = if up { config.pitch_step } else { -config.pitch_step };
                    w.agent.pitch = (w.agent.pitch + delta).clamp(-90.0, 90.0);
                    events.push(Event::Turned { yaw: w.agent.yaw, pitch: w.agent.pitch });
                }
            }
        }
        Action::Interact => {
            let (next, event) = interaction::interact(house, &w, config);
            w = next;
            events.push(Event::Interaction { event });
        }
        _ => unreachable!("translations handled above"),
    }
    (w, events)
}
