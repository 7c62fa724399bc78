//! Loading houses and editing worlds at runtime: placing and removing
//! objects, and seeded random scenario generation.
//!
//! Generation draws from SplitMix64 seeded with the caller's seed. Each
//! attempt takes three draws, in order: surface index, x, z; a fourth picks
//! one of the four quarter-turn yaws. A draw `u` in `[0, 1)` is the top 53
//! bits of the next output scaled by 2^-53.

use std::collections::BTreeSet;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_degrees, Point2};
use crate::kinematics::StepConfig;
use crate::physics::{self, Contact};
use crate::scene::{
    validate_house, House, Location, ObjectClass, ObjectInstance, ValidationReport, WorldState,
};

/// Attempts per requested object before generation gives up.
pub const PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("malformed house file: {0}")]
    MalformedFile(String),
    #[error("house failed validation with {} violation(s)", .0.violations.len())]
    ValidationFailed(ValidationReport),
    #[error("coordinates ({x}, {z}) are outside surface `{surface}`")]
    OutOfBounds { surface: String, x: f64, z: f64 },
    #[error("placement collides with {0}")]
    CollisionAtTarget(String),
    #[error("unknown surface `{0}`")]
    UnknownSurface(String),
    #[error("unknown object type `{0}`")]
    UnknownType(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("`{0}` is held by the agent")]
    HeldObject(String),
    #[error("no collision-free spot found for `{0}`")]
    PlacementBudgetExceeded(String),
}

/// A placement target: a room surface (including `<room>/floor`) or an
/// interior surface of a container instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceRef {
    Interior { container: String, surface: String },
    Room { surface: String },
}

impl SurfaceRef {
    pub fn room(surface: &str) -> Self {
        SurfaceRef::Room { surface: surface.to_string() }
    }

    pub fn interior(container: &str, surface: &str) -> Self {
        SurfaceRef::Interior { container: container.to_string(), surface: surface.to_string() }
    }

    fn name(&self) -> String {
        match self {
            SurfaceRef::Room { surface } => surface.clone(),
            SurfaceRef::Interior { container, surface } => format!("{container}:{surface}"),
        }
    }
}

/// One line of a scenario spec: `count` instances of `type`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    #[serde(rename = "type")]
    pub type_id: String,
    pub count: usize,
}

/// Parses and validates a house file.
pub fn load_house(bytes: &[u8]) -> Result<House, ScenarioError> {
    let house: House = serde_json::from_slice(bytes).map_err(|e| ScenarioError::MalformedFile(e.to_string()))?;
    let report = validate_house(&house);
    if report.is_valid() {
        Ok(house)
    } else {
        Err(ScenarioError::ValidationFailed(report))
    }
}

/// Smallest `{type_id}-{n}` (n ≥ 1) not already used.
pub fn fresh_id(world: &WorldState, type_id: &str) -> String {
    (1..).map(|n| format!("{type_id}-{n}")).find(|id| !world.objects.contains_key(id)).expect("ids are unbounded")
}

/// Adds a new instance of `type_id` resting on `surface` at local `(x, z)`.
/// Returns the new world and the new instance id.
pub fn place_object(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    type_id: &str,
    yaw: f64,
    surface: &SurfaceRef,
    x: f64,
    z: f64,
) -> Result<(WorldState, String), ScenarioError> {
    let ty = house.object_type(type_id).ok_or_else(|| ScenarioError::UnknownType(type_id.to_string()))?;
    let unknown = || ScenarioError::UnknownSurface(surface.name());
    let (rect, location) = match surface {
        SurfaceRef::Room { surface: s } => {
            let (_, found) = house.room_surface(s).ok_or_else(unknown)?;
            (found.rect, Location::OnSurface { surface: s.clone(), x, z })
        }
        SurfaceRef::Interior { container, surface: s } => {
            let c = world.objects.get(container).ok_or_else(unknown)?;
            let ct = house.object_type(&c.type_id).filter(|t| t.class == ObjectClass::Openable).ok_or_else(unknown)?;
            let found = ct.interior_surface(s).ok_or_else(unknown)?;
            (found.rect, Location::InContainer { container: container.clone(), surface: s.clone(), x, z })
        }
    };
    if !(x.is_finite() && z.is_finite() && rect.contains(Point2::new(x, z))) {
        return Err(ScenarioError::OutOfBounds { surface: surface.name(), x, z });
    }
    if !yaw.is_finite() {
        return Err(ScenarioError::OutOfBounds { surface: surface.name(), x, z });
    }

    let id = fresh_id(world, type_id);
    let mut w = world.clone();
    w.objects.insert(
        id.clone(),
        ObjectInstance {
            id: id.clone(),
            type_id: type_id.to_string(),
            yaw: normalize_degrees(yaw),
            location,
            elevation: 0.0,
            open_fraction: (ty.class == ObjectClass::Openable).then_some(0.0),
            toggle_state: (ty.class == ObjectClass::Toggleable).then_some(0),
        },
    );
    let b = physics::world_aabb(house, &w, config, &id).map_err(|_| unknown())?;
    let mut ignore: BTreeSet<String> = w.container_chain(&id).unwrap_or_default().into_iter().collect();
    ignore.insert(id.clone());
    match physics::collides(house, &w, config, &b, &ignore) {
        Some(Contact::Object(other)) => return Err(ScenarioError::CollisionAtTarget(other)),
        Some(Contact::Wall) => return Err(ScenarioError::CollisionAtTarget("a wall".to_string())),
        None => {}
    }
    if b.interpenetrates(&physics::agent_box(house, &w.agent, config)) {
        return Err(ScenarioError::CollisionAtTarget("the agent".to_string()));
    }
    Ok((physics::settle(house, &w, config), id))
}

/// Removes an instance and everything inside it, then lets whatever it
/// supported fall.
pub fn remove_object(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    id: &str,
) -> Result<WorldState, ScenarioError> {
    let o = world.objects.get(id).ok_or_else(|| ScenarioError::UnknownInstance(id.to_string()))?;
    if o.is_held() {
        return Err(ScenarioError::HeldObject(id.to_string()));
    }
    let doomed: BTreeSet<String> =
        world.objects.keys().filter(|k| k.as_str() == id || world.is_inside(k, id)).cloned().collect();
    if world.agent.held.as_ref().is_some_and(|h| doomed.contains(h)) {
        return Err(ScenarioError::HeldObject(id.to_string()));
    }
    let mut w = world.clone();
    w.objects.retain(|k, _| !doomed.contains(k));
    if w.agent.engaged.as_ref().is_some_and(|e| doomed.contains(e)) {
        w.agent.engaged = None;
    }
    Ok(physics::settle(house, &w, config))
}

fn unit(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Samples collision-free placements for every requested object over the
/// house's room surfaces and floors, starting from the house's initial world.
pub fn generate_scenario(
    house: &House,
    config: &StepConfig,
    spec: &[ScenarioEntry],
    seed: u64,
) -> Result<WorldState, ScenarioError> {
    for e in spec {
        if house.object_type(&e.type_id).is_none() {
            return Err(ScenarioError::UnknownType(e.type_id.clone()));
        }
    }
    let surfaces: Vec<_> = house.rooms.iter().flat_map(|r| r.all_surfaces()).collect();
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut world = house.initial_world();
    for e in spec {
        let half = house.object_type(&e.type_id).expect("checked above").half_extents;
        for _ in 0..e.count {
            let mut placed = false;
            for _ in 0..PLACEMENT_ATTEMPTS {
                let pick = ((unit(&mut rng) * surfaces.len() as f64) as usize).min(surfaces.len() - 1);
                let s = &surfaces[pick];
                let span = |lo: f64, hi: f64, h: f64, u: f64| {
                    if hi - lo > 2.0 * h {
                        lo + h + u * (hi - lo - 2.0 * h)
                    } else {
                        lo + u * (hi - lo)
                    }
                };
                let x = span(s.rect.min_x, s.rect.max_x, half.x, unit(&mut rng));
                let z = span(s.rect.min_z, s.rect.max_z, half.z, unit(&mut rng));
                let yaw = 90.0 * ((unit(&mut rng) * 4.0) as usize).min(3) as f64;
                let target = SurfaceRef::room(&s.surface_id);
                if let Ok((w, _)) = place_object(house, &world, config, &e.type_id, yaw, &target, x, z) {
                    world = w;
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(ScenarioError::PlacementBudgetExceeded(e.type_id.clone()));
            }
        }
    }
    Ok(world)
}
